//! Physical-layer quantities: path loss, chip factor, effective spreading
//! gain, log-normal shadowing and the normalized power vector.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::geometry::NetworkRealization;
use crate::scalar::{db_to_linear, Scalar};

/// How the post-despreading interference reduction `G_i` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChipMode<T> {
    /// Every interferer uses the same effective gain `G_e`.
    ConstantEffectiveGain(T),
    /// `G_i = G / h(u)` with a fresh uniform chip offset `u` per interferer.
    RandomOffset,
}

/// How a shadowing draw in dB maps onto the linear power factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShadowingScale {
    /// `10^(xi/10)`: the draw is a power level.
    #[default]
    Power,
    /// `10^(xi/20)`: the draw is an amplitude level, halving the spread in
    /// power dB.
    Amplitude,
}

impl ShadowingScale {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Power => "power",
            Self::Amplitude => "amplitude",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "power" => Some(Self::Power),
            "amplitude" => Some(Self::Amplitude),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams<T> {
    pub alpha: T,
    pub sigma_s_db: T,
    pub shadowing_scale: ShadowingScale,
    pub beta_db: T,
    /// Nakagami parameter of the desired link; must be a positive integer.
    pub m0: u32,
    /// Nakagami parameter shared by all interferers.
    pub m_i: T,
    /// Processing gain `G`, used by [`ChipMode::RandomOffset`].
    pub processing_gain: T,
    pub chip_mode: ChipMode<T>,
    /// `P_i / P_0`.
    pub power_ratio: T,
    pub d0: T,
    /// Cap the path gain at 1 inside the reference distance.
    pub clamp_near_field: bool,
}

impl<T: Scalar> Default for ChannelParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::of(3.5),
            sigma_s_db: T::of(8.0),
            shadowing_scale: ShadowingScale::Power,
            beta_db: T::zero(),
            m0: 3,
            m_i: T::one(),
            processing_gain: T::of(32.0),
            chip_mode: ChipMode::ConstantEffectiveGain(T::of(48.0)),
            power_ratio: T::one(),
            d0: T::one(),
            clamp_near_field: false,
        }
    }
}

impl<T: Scalar> ChannelParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= T::of(2.0)) || !self.alpha.is_finite() {
            return Err(invalid("alpha", "path-loss exponent must be >= 2"));
        }
        if !(self.sigma_s_db >= T::zero()) || !self.sigma_s_db.is_finite() {
            return Err(invalid("sigma_s_db", "must be >= 0"));
        }
        if !self.beta_db.is_finite() {
            return Err(invalid("beta_db", "must be finite"));
        }
        if self.m0 == 0 {
            return Err(invalid("m0", "must be a positive integer"));
        }
        if !(self.m_i > T::zero()) || !self.m_i.is_finite() {
            return Err(invalid("m_i", "must be positive"));
        }
        if !(self.processing_gain >= T::one()) {
            return Err(invalid("processing_gain", "must be >= 1"));
        }
        if let ChipMode::ConstantEffectiveGain(g) = self.chip_mode {
            if !(g >= T::one()) || !g.is_finite() {
                return Err(invalid("G_e", "effective gain must be >= 1"));
            }
        }
        if !(self.power_ratio > T::zero()) || !self.power_ratio.is_finite() {
            return Err(invalid("power_ratio", "must be positive"));
        }
        if !(self.d0 > T::zero()) {
            return Err(invalid("d0", "must be positive"));
        }
        Ok(())
    }

    /// Linear power factor of a shadowing draw `xi_db`.
    pub fn shadow_factor(&self, xi_db: T) -> T {
        match self.shadowing_scale {
            ShadowingScale::Power => db_to_linear(xi_db),
            ShadowingScale::Amplitude => db_to_linear(xi_db / T::of(2.0)),
        }
    }

    /// SINR threshold on the linear scale.
    pub fn beta(&self) -> T {
        db_to_linear(self.beta_db)
    }
}

/// Power-law path gain `(d/d0)^-alpha`.
pub fn path_gain<T: Scalar>(d: T, d0: T, alpha: T, clamp_near_field: bool) -> Result<T> {
    if !(d > T::zero()) || !(d0 > T::zero()) {
        return Err(Error::Domain(format!(
            "path gain needs positive distances (d = {d}, d0 = {d0})"
        )));
    }
    if clamp_near_field && d < d0 {
        return Ok(T::one());
    }
    Ok((d / d0).powf(-alpha))
}

/// Chip factor `h` of a rectangular chip waveform at normalized offset `u`.
pub fn chip_factor<T: Scalar>(u: T) -> Result<T> {
    if !(u >= T::zero() && u <= T::one()) {
        return Err(Error::Domain(format!("chip offset {u} outside [0, 1]")));
    }
    let v = T::one() - u;
    Ok(v * v + u * u)
}

/// Effective gain for a given chip offset.
pub fn effective_gain_at<T: Scalar>(params: &ChannelParams<T>, u: T) -> Result<T> {
    match params.chip_mode {
        ChipMode::ConstantEffectiveGain(g) => Ok(g),
        ChipMode::RandomOffset => Ok(params.processing_gain / chip_factor(u)?),
    }
}

/// Effective gain of one interferer, drawing the chip offset when needed.
pub fn effective_gain<T: Scalar, R: Rng + ?Sized>(params: &ChannelParams<T>, rng: &mut R) -> T {
    match params.chip_mode {
        ChipMode::ConstantEffectiveGain(g) => g,
        ChipMode::RandomOffset => {
            let u = T::of(rng.random::<f64>());
            params.processing_gain / chip_factor(u).expect("uniform draw lies in [0, 1]")
        }
    }
}

/// Random per-realization channel quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraws<T> {
    /// Shadowing of the desired link in dB.
    pub desired_shadow_db: T,
    pub interferer_shadow_db: Vec<T>,
    /// Effective spreading gain `G_i` per interferer.
    pub interferer_gain: Vec<T>,
}

impl<T: Scalar> ChannelDraws<T> {
    /// Draws `xi_0`, then `xi_1..xi_n`, then (in random chip mode) the `n`
    /// chip offsets. Every interferer consumes draws whether or not it is
    /// active, so the stream layout depends only on `n`.
    pub fn sample<R: Rng + ?Sized>(params: &ChannelParams<T>, n: usize, rng: &mut R) -> Self {
        let sigma = params.sigma_s_db;
        let mut shadow = || sigma * T::of(rng.sample::<f64, _>(StandardNormal));
        let desired_shadow_db = shadow();
        let interferer_shadow_db = (0..n).map(|_| shadow()).collect();
        let interferer_gain = (0..n).map(|_| effective_gain(params, rng)).collect();
        Self {
            desired_shadow_db,
            interferer_shadow_db,
            interferer_gain,
        }
    }

    /// No shadowing, a common effective gain.
    pub fn unshadowed(n: usize, gain: T) -> Self {
        Self {
            desired_shadow_db: T::zero(),
            interferer_shadow_db: vec![T::zero(); n],
            interferer_gain: vec![gain; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfererPower<T> {
    pub omega: T,
    pub m: T,
    pub p: T,
}

/// Sufficient statistic of one geometry for the conditional outage.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPowers<T> {
    pub omega0: T,
    pub interferers: Vec<InterfererPower<T>>,
}

impl<T: Scalar> NormalizedPowers<T> {
    pub fn new(omega0: T, interferers: Vec<InterfererPower<T>>) -> Result<Self> {
        let powers = Self { omega0, interferers };
        powers.validate()?;
        Ok(powers)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > T::zero()) || !self.omega0.is_finite() {
            return Err(invalid("omega0", "desired normalized power must be positive"));
        }
        for ip in &self.interferers {
            if !(ip.omega >= T::zero()) || !ip.omega.is_finite() {
                return Err(invalid("omega_i", "normalized power must be >= 0"));
            }
            if !(ip.m > T::zero()) || !ip.m.is_finite() {
                return Err(invalid("m_i", "Nakagami parameter must be positive"));
            }
            if !(ip.p >= T::zero() && ip.p <= T::one()) {
                return Err(invalid("p_i", "activity probability must lie in [0, 1]"));
            }
        }
        Ok(())
    }
}

/// Builds the normalized power vector of a realization. CSMA-deactivated
/// interferers are kept with `p = 0`.
pub fn normalized_powers<T: Scalar>(
    realization: &NetworkRealization<T>,
    params: &ChannelParams<T>,
    p_active: T,
    draws: &ChannelDraws<T>,
) -> Result<NormalizedPowers<T>> {
    let n = realization.interferers.len();
    if draws.interferer_shadow_db.len() != n || draws.interferer_gain.len() != n {
        return Err(Error::Domain(format!(
            "channel draws sized for {} interferers, realization has {n}",
            draws.interferer_shadow_db.len()
        )));
    }
    let rx = realization.receiver;
    let gain = |d: T| path_gain(d, params.d0, params.alpha, params.clamp_near_field);

    let omega0 = params.shadow_factor(draws.desired_shadow_db) * gain(realization.reference_tx.distance(rx))?;
    let interferers = realization
        .interferers
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let omega = params.power_ratio / draws.interferer_gain[i]
                * params.shadow_factor(draws.interferer_shadow_db[i])
                * gain(x.distance(rx))?;
            let p = if realization.active[i] { p_active } else { T::zero() };
            Ok(InterfererPower { omega, m: params.m_i, p })
        })
        .collect::<Result<Vec<_>>>()?;
    NormalizedPowers::new(omega0, interferers)
}

/// Draws channel quantities from `rng` and builds the normalized powers.
pub fn sample_normalized_powers<T: Scalar, R: Rng + ?Sized>(
    realization: &NetworkRealization<T>,
    params: &ChannelParams<T>,
    p_active: T,
    rng: &mut R,
) -> Result<NormalizedPowers<T>> {
    let draws = ChannelDraws::sample(params, realization.interferers.len(), rng);
    normalized_powers(realization, params, p_active, &draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn path_gain_examples() {
        assert_eq!(path_gain(1.0, 1.0, 3.5, false).unwrap(), 1.0);
        assert_eq!(path_gain(2.0, 1.0, 2.0, false).unwrap(), 0.25);
        // 6^3.5 = 216 * sqrt(6)
        assert_relative_eq!(
            path_gain(1.0 / 6.0, 1.0, 3.5, false).unwrap(),
            529.089_784_441_166_6,
            max_relative = 1e-9
        );
        assert_eq!(path_gain(1.0 / 6.0, 1.0, 3.5, true).unwrap(), 1.0);
        assert!(path_gain(0.0, 1.0, 3.0, false).is_err());
        assert!(path_gain(1.0, -1.0, 3.0, false).is_err());
    }

    #[test]
    fn chip_factor_examples() {
        assert_eq!(chip_factor(0.0).unwrap(), 1.0);
        assert_eq!(chip_factor(0.5).unwrap(), 0.5);
        assert_eq!(chip_factor(1.0).unwrap(), 1.0);
        assert!(chip_factor(1.5).is_err());
        assert!(chip_factor(-0.1).is_err());
    }

    #[test]
    fn chip_factor_mean_is_two_thirds() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 1_000_000;
        let sum: f64 = (0..n).map(|_| chip_factor(rng.random::<f64>()).unwrap()).sum();
        let mean = sum / n as f64;
        assert!((0.666..=0.668).contains(&mean), "{mean}");
    }

    #[test]
    fn effective_gain_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let spread = ChannelParams::<f64>::default();
        assert_eq!(effective_gain(&spread, &mut rng), 48.0);
        let unspread = ChannelParams::<f64> {
            chip_mode: ChipMode::ConstantEffectiveGain(1.0),
            ..Default::default()
        };
        assert_eq!(effective_gain(&unspread, &mut rng), 1.0);
        let random = ChannelParams::<f64> {
            chip_mode: ChipMode::RandomOffset,
            ..Default::default()
        };
        assert_eq!(effective_gain_at(&random, 0.0).unwrap(), 32.0);
        assert_eq!(effective_gain_at(&random, 0.5).unwrap(), 64.0);
        let g = effective_gain(&random, &mut rng);
        assert!((32.0..=64.0).contains(&g));
    }

    fn one_interferer(active: bool) -> NetworkRealization<f64> {
        NetworkRealization {
            receiver: Point::origin(),
            reference_tx: Point::new(1.0 / 6.0, 0.0),
            interferers: vec![Point::new(0.0, 0.5)],
            active: vec![active],
        }
    }

    #[test]
    fn normalized_power_examples() {
        let params = ChannelParams::<f64>::default();
        let draws = ChannelDraws::unshadowed(1, 48.0);
        let np = normalized_powers(&one_interferer(true), &params, 0.5, &draws).unwrap();
        assert_relative_eq!(np.omega0, 529.089_784_441_166_6, max_relative = 1e-9);
        // 2^3.5 / 48
        assert_relative_eq!(np.interferers[0].omega, 0.235_702_260_4, max_relative = 1e-9);
        assert_eq!(np.interferers[0].p, 0.5);
        assert_eq!(np.interferers[0].m, 1.0);

        let off = normalized_powers(&one_interferer(false), &params, 0.5, &draws).unwrap();
        assert_eq!(off.interferers[0].p, 0.0);
        assert_eq!(off.interferers[0].omega, np.interferers[0].omega);
    }

    #[test]
    fn shadowing_scales_by_db() {
        let params = ChannelParams::<f64>::default();
        let draws = ChannelDraws {
            desired_shadow_db: 10.0,
            interferer_shadow_db: vec![-10.0],
            interferer_gain: vec![1.0],
        };
        let np = normalized_powers(&one_interferer(true), &params, 1.0, &draws).unwrap();
        assert_relative_eq!(np.omega0, 5_290.897_844_411_666, max_relative = 1e-9);
        assert_relative_eq!(np.interferers[0].omega, 2f64.powf(3.5) / 10.0, max_relative = 1e-12);

        let amp = ChannelParams { shadowing_scale: ShadowingScale::Amplitude, ..params };
        let np = normalized_powers(&one_interferer(true), &amp, 1.0, &draws).unwrap();
        assert_relative_eq!(np.omega0, 529.089_784_441_166_6 * 10f64.sqrt(), max_relative = 1e-9);
        assert_relative_eq!(np.interferers[0].omega, 2f64.powf(3.5) / 10f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn interferer_on_receiver_is_a_domain_error() {
        let mut r = one_interferer(true);
        r.interferers[0] = Point::origin();
        let params = ChannelParams::<f64>::default();
        let err = normalized_powers(&r, &params, 0.5, &ChannelDraws::unshadowed(1, 48.0)).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn unshadowed_sampling_is_deterministic() {
        let params = ChannelParams::<f64> {
            sigma_s_db: 0.0,
            ..Default::default()
        };
        let r = one_interferer(true);
        let a = sample_normalized_powers(&r, &params, 0.5, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = sample_normalized_powers(&r, &params, 0.5, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shadow_draws_have_configured_spread() {
        let params = ChannelParams::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = ChannelDraws::sample(&params, 100_000, &mut rng);
        let n = draws.interferer_shadow_db.len() as f64;
        let mean = draws.interferer_shadow_db.iter().sum::<f64>() / n;
        let var = draws.interferer_shadow_db.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.1);
        assert!((var.sqrt() - 8.0).abs() < 0.1);
    }

    #[test]
    fn invalid_params() {
        let bad_alpha = ChannelParams::<f64> {
            alpha: 1.5,
            ..Default::default()
        };
        assert!(bad_alpha.validate().is_err());
        let bad_m0 = ChannelParams::<f64> {
            m0: 0,
            ..Default::default()
        };
        assert!(bad_m0.validate().is_err());
        let bad_ge = ChannelParams::<f64> {
            chip_mode: ChipMode::ConstantEffectiveGain(0.5),
            ..Default::default()
        };
        assert!(bad_ge.validate().is_err());
        assert!(ChannelParams::<f64>::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn chip_factor_symmetric(u in 0.0f64..=1.0) {
            let a = chip_factor(u).unwrap();
            let b = chip_factor(1.0 - u).unwrap();
            prop_assert!((a - b).abs() < 1e-15);
            prop_assert!((0.5..=1.0).contains(&a));
        }

        #[test]
        fn path_gain_monotone(d in 1.0f64..50.0, dd in 1e-3f64..5.0, alpha in 2.0f64..6.0, da in 1e-3f64..1.0) {
            let g = path_gain(d, 1.0, alpha, false).unwrap();
            prop_assert!(path_gain(d + dd, 1.0, alpha, false).unwrap() < g);
            if d > 1.0 {
                prop_assert!(path_gain(d, 1.0, alpha + da, false).unwrap() < g);
            }
        }

        #[test]
        fn path_gain_scale_invariant(d in 0.01f64..10.0, d0 in 0.01f64..10.0, k in 0.01f64..100.0, alpha in 2.0f64..6.0) {
            let a = path_gain(d, d0, alpha, false).unwrap();
            let b = path_gain(k * d, k * d0, alpha, false).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-300));
        }
    }
}
