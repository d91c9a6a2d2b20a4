//! Finite circular network geometry.
//!
//! Mobiles are placed one at a time by uniform clustering: each candidate is
//! drawn uniformly on the network disc and redrawn until it clears the
//! exclusion zone of everything placed before it. CSMA guard zones are then
//! applied by a sequential scan in placement order, with the reference
//! transmitter activated first.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Default cap on redraws for a single mobile before packing is declared
/// infeasible.
pub const DEFAULT_RETRY_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Direction from the reference receiver to the reference transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TxBearing {
    /// Toward the network center; along +x when the receiver is the center.
    #[default]
    Inward,
    /// Always along +x. From a perimeter receiver this puts the transmitter
    /// outside the disc, which is allowed.
    PositiveX,
}

impl TxBearing {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Inward => "inward",
            Self::PositiveX => "positive_x",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "inward" => Some(Self::Inward),
            "positive_x" | "+x" => Some(Self::PositiveX),
            _ => None,
        }
    }
}

/// One experiment's geometry: network disc, guard radii, link layout and
/// activity probability.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScenario<T> {
    pub r_net: T,
    /// Number of potentially interfering mobiles.
    pub mobiles: usize,
    pub r_ex: T,
    pub r_g: T,
    /// Distance from the reference receiver to the reference transmitter.
    pub tx_distance: T,
    pub receiver: Point<T>,
    pub tx_bearing: TxBearing,
    /// Activity probability of every CSMA-active interferer.
    pub p_active: T,
    /// Reject interferers inside the exclusion zone of the receiver as well as
    /// the reference transmitter.
    pub exclusion_around_receiver: bool,
    pub retry_cap: u64,
}

impl<T: Scalar> Default for NetworkScenario<T> {
    fn default() -> Self {
        Self {
            r_net: T::one(),
            mobiles: 30,
            r_ex: T::of(1.0 / 12.0),
            r_g: T::of(1.0 / 12.0),
            tx_distance: T::of(1.0 / 6.0),
            receiver: Point::origin(),
            tx_bearing: TxBearing::Inward,
            p_active: T::of(0.5),
            exclusion_around_receiver: true,
            retry_cap: DEFAULT_RETRY_CAP,
        }
    }
}

impl<T: Scalar> NetworkScenario<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_net > T::zero()) || !self.r_net.is_finite() {
            return Err(invalid("r_net", "must be positive and finite"));
        }
        if !(self.r_ex >= T::zero() && self.r_ex < self.r_net) {
            return Err(invalid("r_ex", "must lie in [0, r_net)"));
        }
        if !(self.r_g >= self.r_ex) || !self.r_g.is_finite() {
            return Err(invalid("r_g", "guard zone must encompass the exclusion zone (r_g >= r_ex)"));
        }
        if !(self.tx_distance > T::zero()) {
            return Err(invalid("tx_distance", "must be positive"));
        }
        if !(self.p_active >= T::zero() && self.p_active <= T::one()) {
            return Err(invalid("p_active", "must lie in [0, 1]"));
        }
        if self.retry_cap == 0 {
            return Err(invalid("retry_cap", "must be at least 1"));
        }
        if self.receiver.norm() > self.r_net * (T::one() + T::epsilon()) {
            return Err(invalid("receiver", "must lie inside the network disc"));
        }
        let x0 = self.reference_tx();
        if self.tx_bearing == TxBearing::Inward
            && x0.norm() > self.r_net * (T::one() + T::of(16.0) * T::epsilon()) {
            return Err(invalid(
                "tx_distance",
                "places the reference transmitter outside the network disc",
            ));
        }
        Ok(())
    }

    /// Location of the reference transmitter, `tx_distance` from the receiver
    /// along [`Self::tx_bearing`].
    pub fn reference_tx(&self) -> Point<T> {
        let rx = self.receiver;
        let r = rx.norm();
        if r == T::zero() || self.tx_bearing == TxBearing::PositiveX {
            Point::new(rx.x + self.tx_distance, rx.y)
        } else {
            let scale = self.tx_distance / r;
            Point::new(rx.x - rx.x * scale, rx.y - rx.y * scale)
        }
    }
}

/// Moves the receiver to the network perimeter at `(r_net, 0)`.
pub fn receiver_at_perimeter<T: Scalar>(scenario: &NetworkScenario<T>) -> Result<NetworkScenario<T>> {
    if !(scenario.tx_distance > T::zero()) {
        return Err(Error::Domain("tx_distance must be positive".into()));
    }
    if scenario.tx_distance > T::of(2.0) * scenario.r_net {
        return Err(Error::Domain(format!(
            "tx_distance {} exceeds the network diameter",
            scenario.tx_distance
        )));
    }
    Ok(NetworkScenario {
        receiver: Point::new(scenario.r_net, T::zero()),
        ..scenario.clone()
    })
}

/// Moves the receiver to the network center.
pub fn receiver_at_center<T: Scalar>(scenario: &NetworkScenario<T>) -> NetworkScenario<T> {
    NetworkScenario {
        receiver: Point::origin(),
        ..scenario.clone()
    }
}

/// A sampled network: interferers in placement order plus their CSMA state.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization<T> {
    pub receiver: Point<T>,
    pub reference_tx: Point<T>,
    pub interferers: Vec<Point<T>>,
    pub active: Vec<bool>,
}

impl<T: Scalar> NetworkRealization<T> {
    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Active transmitters including the reference, reference first.
    pub fn active_transmitters(&self) -> impl Iterator<Item = Point<T>> + '_ {
        std::iter::once(self.reference_tx).chain(
            self.interferers
                .iter()
                .zip(&self.active)
                .filter(|(_, &a)| a)
                .map(|(&p, _)| p),
        )
    }

    /// Plain-text point list: `index,x,y,active` per line. The receiver is
    /// written first with index `rx`, the reference transmitter as index 0.
    pub fn to_point_list(&self) -> String {
        let mut out = String::from("index,x,y,active\n");
        let _ = writeln!(out, "rx,{},{},0", self.receiver.x, self.receiver.y);
        let _ = writeln!(out, "0,{},{},1", self.reference_tx.x, self.reference_tx.y);
        for (i, (p, a)) in self.interferers.iter().zip(&self.active).enumerate() {
            let _ = writeln!(out, "{},{},{},{}", i + 1, p.x, p.y, u8::from(*a));
        }
        out
    }

    pub fn from_point_list(text: &str) -> Result<Self> {
        let mut receiver = None;
        let mut reference = None;
        let mut interferers = Vec::new();
        let mut active = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("index") {
                continue;
            }
            let bad = |what: &str| Error::Domain(format!("point list line {}: {what}", lineno + 1));
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(bad("expected 4 comma-separated fields"));
            }
            let coord = |s: &str| s.parse::<f64>().map(T::of).map_err(|_| bad("bad coordinate"));
            let p = Point::new(coord(fields[1])?, coord(fields[2])?);
            let flag = match fields[3] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("active flag must be 0 or 1")),
            };
            match fields[0] {
                "rx" => receiver = Some(p),
                "0" => reference = Some(p),
                idx => {
                    let idx: usize = idx.parse().map_err(|_| bad("bad index"))?;
                    if idx != interferers.len() + 1 {
                        return Err(bad("interferer indices must be consecutive from 1"));
                    }
                    interferers.push(p);
                    active.push(flag);
                }
            }
        }
        Ok(Self {
            receiver: receiver.ok_or_else(|| Error::Domain("point list has no receiver".into()))?,
            reference_tx: reference
                .ok_or_else(|| Error::Domain("point list has no reference transmitter".into()))?,
            interferers,
            active,
        })
    }
}

/// Draws a point uniformly on the disc of radius `r_net` centered at the origin.
pub fn uniform_in_disc<T: Scalar, R: Rng + ?Sized>(r_net: T, rng: &mut R) -> Point<T> {
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    let r = r_net * T::of(u.sqrt());
    let theta = T::of(std::f64::consts::TAU * v);
    Point::new(r * theta.cos(), r * theta.sin())
}

/// Places `scenario.mobiles` interferers by uniform clustering. All returned
/// interferers are flagged active; apply [`csma_thin`] for guard zones.
pub fn place_uniform_clustering<T: Scalar, R: Rng + ?Sized>(
    scenario: &NetworkScenario<T>,
    rng: &mut R,
) -> Result<NetworkRealization<T>> {
    scenario.validate()?;
    let reference_tx = scenario.reference_tx();
    let receiver = scenario.receiver;
    let r_ex = scenario.r_ex;

    let mut interferers: Vec<Point<T>> = Vec::with_capacity(scenario.mobiles);
    for index in 0..scenario.mobiles {
        let mut attempts = 0u64;
        let p = loop {
            if attempts == scenario.retry_cap {
                return Err(Error::InfeasiblePacking {
                    index: index + 1,
                    attempts,
                });
            }
            attempts += 1;
            let candidate = uniform_in_disc(scenario.r_net, rng);
            if r_ex == T::zero() {
                break candidate;
            }
            let clear = |q: Point<T>| candidate.distance(q) >= r_ex;
            if clear(reference_tx)
                && (!scenario.exclusion_around_receiver || clear(receiver))
                && interferers.iter().all(|&q| clear(q))
            {
                break candidate;
            }
        };
        interferers.push(p);
    }

    let active = vec![true; interferers.len()];
    Ok(NetworkRealization {
        receiver,
        reference_tx,
        interferers,
        active,
    })
}

/// Sequential CSMA deactivation. The reference transmitter is activated
/// first; each interferer in placement order is deactivated iff it lies
/// strictly within `r_g` of an already-active transmitter. The receiver has
/// no guard zone.
pub fn csma_thin<T: Scalar>(realization: &NetworkRealization<T>, r_g: T) -> NetworkRealization<T> {
    let mut active_points = Vec::with_capacity(realization.interferers.len() + 1);
    active_points.push(realization.reference_tx);
    let active = realization
        .interferers
        .iter()
        .map(|&p| {
            let blocked = active_points.iter().any(|&q| p.distance(q) < r_g);
            if !blocked {
                active_points.push(p);
            }
            !blocked
        })
        .collect();
    NetworkRealization {
        active,
        ..realization.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn realization(points: &[(f64, f64)]) -> NetworkRealization<f64> {
        NetworkRealization {
            receiver: Point::origin(),
            reference_tx: Point::new(1.0 / 6.0, 0.0),
            interferers: points.iter().map(|&(x, y)| Point::new(x, y)).collect(),
            active: vec![true; points.len()],
        }
    }

    #[test]
    fn no_interferers() {
        let s = NetworkScenario::<f64> {
            mobiles: 0,
            ..Default::default()
        };
        let r = place_uniform_clustering(&s, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert!(r.interferers.is_empty());
        assert_eq!(r.reference_tx, Point::new(1.0 / 6.0, 0.0));
    }

    #[test]
    fn default_packing_respects_exclusion() {
        let s = NetworkScenario::<f64>::default();
        for seed in 0..50 {
            let r = place_uniform_clustering(&s, &mut substream(seed, Purpose::Geometry, 0)).unwrap();
            assert_eq!(r.interferers.len(), 30);
            for (i, &p) in r.interferers.iter().enumerate() {
                assert!(p.norm() <= 1.0);
                assert!(p.distance(r.reference_tx) >= s.r_ex);
                assert!(p.distance(r.receiver) >= s.r_ex);
                for &q in &r.interferers[..i] {
                    assert!(p.distance(q) >= s.r_ex);
                }
            }
        }
    }

    #[test]
    fn receiver_exclusion_can_be_disabled() {
        let s = NetworkScenario::<f64> {
            r_ex: 0.3,
            r_g: 0.3,
            mobiles: 3,
            exclusion_around_receiver: false,
            ..Default::default()
        };
        let mut near_rx = 0;
        for seed in 0..200 {
            let r = place_uniform_clustering(&s, &mut substream(seed, Purpose::Geometry, 0)).unwrap();
            near_rx += r.interferers.iter().filter(|p| p.norm() < 0.3).count();
        }
        assert!(near_rx > 0);
    }

    #[test]
    fn infeasible_packing_is_reported() {
        let s = NetworkScenario::<f64> {
            r_ex: 0.9,
            r_g: 0.9,
            mobiles: 10,
            retry_cap: 10_000,
            ..Default::default()
        };
        let err = place_uniform_clustering(&s, &mut ChaCha8Rng::seed_from_u64(3)).unwrap_err();
        assert!(matches!(err, Error::InfeasiblePacking { attempts: 10_000, .. }));
    }

    #[test]
    fn mean_radius_without_exclusion() {
        // E‖X‖ = 2/3 r_net for a uniform point on the disc.
        let s = NetworkScenario::<f64> {
            r_ex: 0.0,
            r_g: 0.0,
            mobiles: 2,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 50_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let r = place_uniform_clustering(&s, &mut rng).unwrap();
            sum += r.interferers.iter().map(|p| p.norm()).sum::<f64>();
        }
        let mean = sum / (2 * n) as f64;
        // sd of the radius is sqrt(1/2 - 4/9) ≈ 0.236
        assert!((mean - 2.0 / 3.0).abs() < 4.0 * 0.236 / ((2 * n) as f64).sqrt(), "{mean}");
    }

    #[test]
    fn uniform_on_disc_chi_square() {
        // Ten equal-area annuli, 1e5 draws; chi-square with 9 dof, 0.999 quantile 27.88.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let mut bins = [0u32; 10];
        for _ in 0..n {
            let p: Point<f64> = uniform_in_disc(1.0, &mut rng);
            let k = ((p.norm() * p.norm()) * 10.0).floor() as usize;
            bins[k.min(9)] += 1;
        }
        let expected = n as f64 / 10.0;
        let chi2: f64 = bins.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 27.88, "chi2 = {chi2}");
    }

    #[test]
    fn thinning_with_exclusion_radius_is_identity() {
        let s = NetworkScenario::<f64>::default();
        for seed in 0..100 {
            let r = place_uniform_clustering(&s, &mut substream(seed, Purpose::Geometry, 0)).unwrap();
            assert_eq!(csma_thin(&r, s.r_ex).active_count(), 30);
        }
    }

    #[test]
    fn interferer_in_reference_guard_zone_is_deactivated() {
        let r = realization(&[(1.0 / 6.0 + 0.125, 0.0)]);
        assert_eq!(csma_thin(&r, 0.25).active, vec![false]);
    }

    #[test]
    fn colinear_chain() {
        // X_0 at 1/6; X_1 at 0.5 (0.333 from X_0), X_2 at 0.7 (0.2 from X_1, 0.533 from X_0).
        let r = realization(&[(0.5, 0.0), (0.7, 0.0)]);
        assert_eq!(csma_thin(&r, 0.25).active, vec![true, false]);
    }

    #[test]
    fn deactivated_mobiles_do_not_block() {
        // X_1 blocked by X_0; X_2 only near X_1, so it stays active.
        let r = realization(&[(0.3, 0.0), (0.5, 0.0)]);
        assert_eq!(csma_thin(&r, 0.25).active, vec![false, true]);
    }

    #[test]
    fn perimeter_placement_is_inward() {
        let s = receiver_at_perimeter(&NetworkScenario::<f64>::default()).unwrap();
        assert_eq!(s.receiver, Point::new(1.0, 0.0));
        let x0 = s.reference_tx();
        assert!((x0.x - 5.0 / 6.0).abs() < 1e-15 && x0.y == 0.0);
        assert!(s.validate().is_ok());

        let far = NetworkScenario::<f64> {
            tx_distance: 2.5,
            ..Default::default()
        };
        assert!(matches!(receiver_at_perimeter(&far), Err(Error::Domain(_))));
        let zero = NetworkScenario::<f64> {
            tx_distance: 0.0,
            ..Default::default()
        };
        assert!(matches!(receiver_at_perimeter(&zero), Err(Error::Domain(_))));
    }

    #[test]
    fn positive_x_bearing_from_perimeter() {
        let s = receiver_at_perimeter(&NetworkScenario::<f64> {
            tx_bearing: TxBearing::PositiveX,
            ..Default::default()
        })
        .unwrap();
        let x0 = s.reference_tx();
        assert!((x0.x - 7.0 / 6.0).abs() < 1e-15 && x0.y == 0.0);
        assert!(s.validate().is_ok());
    }

    #[test]
    fn center_reference_tx_outside_disc_is_rejected() {
        let s = NetworkScenario::<f64> {
            tx_distance: 1.5,
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn guard_smaller_than_exclusion_is_rejected() {
        let s = NetworkScenario::<f64> {
            r_g: 0.05,
            ..Default::default()
        };
        assert!(matches!(s.validate(), Err(Error::InvalidParameter { name: "r_g", .. })));
    }

    #[test]
    fn point_list_round_trip() {
        let s = NetworkScenario::<f64>::default();
        let r = place_uniform_clustering(&s, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let r = csma_thin(&r, 0.25);
        let text = r.to_point_list();
        assert_eq!(text.lines().count(), 1 + 2 + 30);
        assert_eq!(NetworkRealization::<f64>::from_point_list(&text).unwrap(), r);
        assert!(NetworkRealization::<f64>::from_point_list("rx,0,0,0\n2,0,0,1\n").is_err());
    }

    #[test]
    fn f32_placement() {
        let s = NetworkScenario::<f32>::default();
        let r = place_uniform_clustering(&s, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_eq!(r.interferers.len(), 30);
    }
}
