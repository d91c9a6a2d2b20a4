//! Spatial averaging of the conditional outage probability and of the
//! normalized transmission capacity over random network realizations.
//!
//! Realization `i` draws its geometry from stream `(seed, Geometry, i)` and
//! its shadowing and chip offsets from `(seed, Channel, i)`. Per-realization
//! results are collected in index order and reduced sequentially, so the
//! output for a fixed seed is bit-identical for any worker count.
//!
//! Two specs that differ only in `r_g` see the same pre-thinning geometries
//! and the same shadowing draws; parameter sweeps rely on this.

use rayon::prelude::*;

use crate::channel::{sample_normalized_powers, ChannelParams};
use crate::error::{invalid, Result};
use crate::geometry::{
    csma_thin, place_uniform_clustering, receiver_at_center, receiver_at_perimeter, NetworkRealization,
    NetworkScenario,
};
use crate::outage::OutageKernel;
use crate::rng::{substream, Purpose};
use crate::scalar::{db_to_linear, pairwise_sum, Scalar};

pub const DEFAULT_REALIZATIONS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReceiverMode {
    #[default]
    Center,
    Perimeter,
}

/// What counts toward the density `λ` of active transmitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaMode {
    /// Reference transmitter with weight 1, each CSMA-active interferer with
    /// weight `p`: the expected number of concurrent transmissions.
    #[default]
    Weighted,
    /// Reference transmitter plus CSMA-active interferers, unweighted.
    Count,
    /// CSMA-active interferers only, each with weight `p`.
    Interferers,
}

impl LambdaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LambdaMode::Weighted => "weighted",
            LambdaMode::Count => "count",
            LambdaMode::Interferers => "interferers",
        }
    }

    fn transmitters<T: Scalar>(self, active_interferers: usize, p: T) -> T {
        let n = T::of_usize(active_interferers);
        match self {
            LambdaMode::Weighted => T::one() + p * n,
            LambdaMode::Count => T::one() + n,
            LambdaMode::Interferers => p * n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec<T> {
    pub scenario: NetworkScenario<T>,
    pub channel: ChannelParams<T>,
    /// Unit-distance SNR values `Γ` in dB.
    pub gamma_db_grid: Vec<T>,
    pub n_realizations: usize,
    pub master_seed: u64,
    /// Overrides `scenario.receiver`.
    pub receiver_mode: ReceiverMode,
    pub lambda_mode: LambdaMode,
}

impl<T: Scalar> Default for ExperimentSpec<T> {
    fn default() -> Self {
        Self {
            scenario: NetworkScenario::default(),
            channel: ChannelParams::default(),
            gamma_db_grid: (0..=25).map(|g| T::of(f64::from(g))).collect(),
            n_realizations: DEFAULT_REALIZATIONS,
            master_seed: 1,
            receiver_mode: ReceiverMode::Center,
            lambda_mode: LambdaMode::Weighted,
        }
    }
}

impl<T: Scalar> ExperimentSpec<T> {
    /// The scenario with the receiver placed according to `receiver_mode`.
    pub fn resolved_scenario(&self) -> Result<NetworkScenario<T>> {
        let s = match self.receiver_mode {
            ReceiverMode::Center => receiver_at_center(&self.scenario),
            ReceiverMode::Perimeter => receiver_at_perimeter(&self.scenario)?,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.resolved_scenario()?;
        self.channel.validate()?;
        if self.n_realizations == 0 {
            return Err(invalid("realizations", "must be at least 1"));
        }
        if self.gamma_db_grid.is_empty() {
            return Err(invalid("gamma_db", "SNR grid must not be empty"));
        }
        if self.gamma_db_grid.iter().any(|g| !g.is_finite()) {
            return Err(invalid("gamma_db", "SNR values must be finite"));
        }
        Ok(())
    }
}

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    pub std_error: T,
    pub count: usize,
}

impl<T: Scalar> Estimate<T> {
    pub fn from_samples(samples: &[T]) -> Self {
        let count = samples.len();
        if count == 0 {
            return Self {
                mean: T::nan(),
                std_error: T::nan(),
                count,
            };
        }
        let n = T::of_usize(count);
        let mean = pairwise_sum(samples) / n;
        let std_error = if count > 1 {
            let sq: Vec<T> = samples.iter().map(|&x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&sq) / (n - T::one()) / n).sqrt()
        } else {
            T::zero()
        };
        Self {
            mean,
            std_error,
            count,
        }
    }

    /// Root-sum-square of two standard errors.
    pub fn combined_error(&self, other: &Self) -> T {
        self.std_error.hypot(other.std_error)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaPoint<T> {
    pub gamma_db: T,
    /// Spatially averaged outage probability.
    pub outage: Estimate<T>,
    /// Normalized transmission capacity `τ/b = (1 - ε) λ`.
    pub tc: Estimate<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialAverage<T> {
    pub points: Vec<GammaPoint<T>>,
    /// Density `λ` of active transmitters per unit area.
    pub density: Estimate<T>,
    /// Mean number of interferers left active by CSMA.
    pub mean_active: T,
    pub realizations: usize,
    pub lambda_mode: LambdaMode,
}

impl<T: Scalar> SpatialAverage<T> {
    /// Point at the given SNR, if it is on the grid.
    pub fn at(&self, gamma_db: T) -> Option<&GammaPoint<T>> {
        self.points.iter().find(|p| p.gamma_db == gamma_db)
    }
}

struct Sample<T> {
    outage: Vec<T>,
    density: T,
    active: usize,
}

/// Pre-thinning geometry of realization `index`.
pub fn realization<T: Scalar>(spec: &ExperimentSpec<T>, index: usize) -> Result<NetworkRealization<T>> {
    let scenario = spec.resolved_scenario()?;
    place_uniform_clustering(&scenario, &mut substream(spec.master_seed, Purpose::Geometry, index as u64))
}

fn evaluate<T: Scalar>(
    spec: &ExperimentSpec<T>,
    scenario: &NetworkScenario<T>,
    inverse_snr: &[T],
    index: usize,
) -> Result<Sample<T>> {
    let seed = spec.master_seed;
    let placed = place_uniform_clustering(scenario, &mut substream(seed, Purpose::Geometry, index as u64))?;
    let thinned = csma_thin(&placed, scenario.r_g);
    let powers = sample_normalized_powers(
        &thinned,
        &spec.channel,
        scenario.p_active,
        &mut substream(seed, Purpose::Channel, index as u64),
    )?;
    let kernel = OutageKernel::new(&powers, spec.channel.beta(), spec.channel.m0)?;
    let outage = inverse_snr.iter().map(|&z| kernel.outage(z)).collect::<Result<_>>()?;

    let active = thinned.active_count();
    let area = T::PI() * scenario.r_net * scenario.r_net;
    let density = spec.lambda_mode.transmitters(active, scenario.p_active) / area;
    Ok(Sample {
        outage,
        density,
        active,
    })
}

/// Runs `job` on a dedicated pool of `threads` workers (0 = one per core).
pub fn with_workers<R: Send>(threads: usize, job: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// Runs every realization of `spec` on `threads` workers (0 = one per core)
/// and aggregates outage and transmission capacity at each grid SNR.
pub fn estimate<T: Scalar>(spec: &ExperimentSpec<T>, threads: usize) -> Result<SpatialAverage<T>> {
    spec.validate()?;
    let scenario = spec.resolved_scenario()?;
    let inverse_snr: Vec<T> = spec.gamma_db_grid.iter().map(|&g| T::one() / db_to_linear(g)).collect();

    let samples: Vec<Sample<T>> = with_workers(threads, || {
        (0..spec.n_realizations)
            .into_par_iter()
            .map(|i| evaluate(spec, &scenario, &inverse_snr, i))
            .collect::<Result<_>>()
    })?;

    let densities: Vec<T> = samples.iter().map(|s| s.density).collect();
    let points = spec
        .gamma_db_grid
        .iter()
        .enumerate()
        .map(|(k, &gamma_db)| {
            let eps: Vec<T> = samples.iter().map(|s| s.outage[k]).collect();
            let tc: Vec<T> = samples.iter().map(|s| (T::one() - s.outage[k]) * s.density).collect();
            GammaPoint {
                gamma_db,
                outage: Estimate::from_samples(&eps),
                tc: Estimate::from_samples(&tc),
            }
        })
        .collect();
    let active: Vec<T> = samples.iter().map(|s| T::of_usize(s.active)).collect();

    Ok(SpatialAverage {
        points,
        density: Estimate::from_samples(&densities),
        mean_active: pairwise_sum(&active) / T::of_usize(active.len()),
        realizations: samples.len(),
        lambda_mode: spec.lambda_mode,
    })
}

/// Spatially averaged outage probability at each grid SNR.
pub fn spatial_average_outage<T: Scalar>(spec: &ExperimentSpec<T>, threads: usize) -> Result<SpatialAverage<T>> {
    estimate(spec, threads)
}

/// Normalized transmission capacity `τ/b` at each grid SNR; see
/// [`SpatialAverage::points`] and [`LambdaMode`].
pub fn transmission_capacity<T: Scalar>(spec: &ExperimentSpec<T>, threads: usize) -> Result<SpatialAverage<T>> {
    estimate(spec, threads)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    TxDistance,
    GuardRadius,
    ExclusionRadius,
    Mobiles,
    Gamma,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::TxDistance => "tx_distance",
            SweepParameter::GuardRadius => "r_g",
            SweepParameter::ExclusionRadius => "r_ex",
            SweepParameter::Mobiles => "M",
            SweepParameter::Gamma => "gamma_db",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "tx_distance" => SweepParameter::TxDistance,
            "r_g" => SweepParameter::GuardRadius,
            "r_ex" => SweepParameter::ExclusionRadius,
            "M" | "m" | "mobiles" => SweepParameter::Mobiles,
            "gamma" | "gamma_db" => SweepParameter::Gamma,
            _ => return None,
        })
    }

    /// Copy of `template` with this parameter set to `value`.
    ///
    /// Sweeping `r_ex` on a template without a guard zone (`r_g == r_ex`)
    /// keeps `r_g` tied to `r_ex`.
    pub fn apply<T: Scalar>(self, template: &ExperimentSpec<T>, value: T) -> Result<ExperimentSpec<T>> {
        let mut spec = template.clone();
        let s = &mut spec.scenario;
        match self {
            SweepParameter::TxDistance => s.tx_distance = value,
            SweepParameter::GuardRadius => s.r_g = value,
            SweepParameter::ExclusionRadius => {
                if s.r_g == s.r_ex {
                    s.r_g = value;
                }
                s.r_ex = value;
            }
            SweepParameter::Mobiles => {
                if !(value >= T::zero()) || value.fract() != T::zero() {
                    return Err(invalid("M", "mobile count must be a non-negative integer"));
                }
                s.mobiles = value
                    .to_usize()
                    .ok_or_else(|| invalid("M", "mobile count out of range"))?;
            }
            SweepParameter::Gamma => spec.gamma_db_grid = vec![value],
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub value: T,
    pub average: SpatialAverage<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable<T> {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow<T>>,
}

/// Runs the estimator once per value with the template's master seed, so
/// every value sees common random numbers.
pub fn sweep<T: Scalar>(
    template: &ExperimentSpec<T>,
    parameter: SweepParameter,
    values: &[T],
    threads: usize,
) -> Result<SweepTable<T>> {
    if values.is_empty() {
        return Err(invalid("values", "sweep needs at least one value"));
    }
    let rows = if parameter == SweepParameter::Gamma {
        // the grid is evaluated per geometry anyway; one pass covers all values
        let spec = ExperimentSpec {
            gamma_db_grid: values.to_vec(),
            ..template.clone()
        };
        let all = estimate(&spec, threads)?;
        all.points
            .iter()
            .map(|p| SweepRow {
                value: p.gamma_db,
                average: SpatialAverage {
                    points: vec![p.clone()],
                    ..all.clone()
                },
            })
            .collect()
    } else {
        values
            .iter()
            .map(|&v| {
                Ok(SweepRow {
                    value: v,
                    average: estimate(&parameter.apply(template, v)?, threads)?,
                })
            })
            .collect::<Result<_>>()?
    };
    Ok(SweepTable { parameter, rows })
}
