//! Fixed experiment grids: the outage table over receiver locations, the
//! figure sweeps and the closed-form-versus-simulation check.

use guardzone::channel::InterfererPower;
use guardzone::montecarlo::{self, Estimate, GammaPoint, ReceiverMode, SweepParameter};
use guardzone::oracle::simulate_outage;
use guardzone::outage::{conditional_outage, OutageInputs};
use guardzone::scalar::db_to_linear;
use guardzone::{ChipMode, ExperimentSpec, NormalizedPowers, OracleResult};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

/// SNR used by the table and the capacity figures.
pub const TABLE_GAMMA_DB: f64 = 10.0;

pub const TABLE_GAINS: [f64; 2] = [1.0, 48.0];
pub const TABLE_ALPHAS: [f64; 2] = [3.0, 4.0];
pub const TABLE_EXCLUSION: [f64; 2] = [0.0, 1.0 / 12.0];
pub const TABLE_GUARD: [f64; 2] = [1.0 / 12.0, 0.25];

pub fn with_gain(spec: &ExperimentSpec, g_e: f64) -> ExperimentSpec {
    let mut s = spec.clone();
    s.channel.chip_mode = ChipMode::ConstantEffectiveGain(g_e);
    s
}

/// The table template: `template` evaluated at [`TABLE_GAMMA_DB`] only.
pub fn table_template(template: &ExperimentSpec) -> ExperimentSpec {
    ExperimentSpec {
        gamma_db_grid: vec![TABLE_GAMMA_DB],
        ..template.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub g_e: f64,
    pub alpha: f64,
    pub r_ex: f64,
    pub r_g: f64,
    pub center: Estimate<f64>,
    pub perimeter: Estimate<f64>,
}

/// The 16 combinations of gain, path-loss exponent, exclusion and guard
/// radius, in table order, each with the receiver at the center and at the
/// perimeter. All cells share the template's seed.
pub fn table1(template: &ExperimentSpec, threads: usize) -> Result<Vec<TableRow>, CliError> {
    let base = table_template(template);
    let mut rows = Vec::with_capacity(16);
    for &g_e in &TABLE_GAINS {
        for &alpha in &TABLE_ALPHAS {
            for &r_ex in &TABLE_EXCLUSION {
                for &r_g in &TABLE_GUARD {
                    let mut spec = with_gain(&base, g_e);
                    spec.channel.alpha = alpha;
                    spec.scenario.r_ex = r_ex;
                    spec.scenario.r_g = r_g;
                    let at = |mode| -> Result<Estimate<f64>, CliError> {
                        let s = ExperimentSpec {
                            receiver_mode: mode,
                            ..spec.clone()
                        };
                        Ok(montecarlo::estimate(&s, threads)?.points[0].outage)
                    };
                    rows.push(TableRow {
                        g_e,
                        alpha,
                        r_ex,
                        r_g,
                        center: at(ReceiverMode::Center)?,
                        perimeter: at(ReceiverMode::Perimeter)?,
                    });
                }
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// Outage versus SNR with and without spreading and guard zone.
    Fig3,
    /// Capacity versus guard radius for several exclusion radii.
    Fig6,
    /// Capacity versus number of placed mobiles.
    Fig7,
    /// Capacity versus transmitter distance.
    Movetx,
}

impl Preset {
    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Fig3 => "fig3",
            Preset::Fig6 => "fig6",
            Preset::Fig7 => "fig7",
            Preset::Movetx => "movetx",
        }
    }
}

/// A family of sweeps over one parameter, one per configuration.
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub configs: Vec<ExperimentSpec>,
}

impl SweepPlan {
    pub fn single(template: &ExperimentSpec, parameter: SweepParameter, values: Vec<f64>) -> Self {
        Self {
            parameter,
            values,
            configs: vec![template.clone()],
        }
    }

    pub fn preset(preset: Preset, template: &ExperimentSpec) -> Self {
        let at_table_snr = table_template(template);
        let r_ex = template.scenario.r_ex;
        let gain_and_guard = |base: &ExperimentSpec, guards: &[f64]| -> Vec<ExperimentSpec> {
            let mut out = Vec::new();
            for &g_e in &TABLE_GAINS {
                for &r_g in guards {
                    let mut s = with_gain(base, g_e);
                    s.scenario.r_g = r_g;
                    out.push(s);
                }
            }
            out
        };
        match preset {
            Preset::Fig3 => Self {
                parameter: SweepParameter::Gamma,
                values: (0..=25).map(f64::from).collect(),
                configs: gain_and_guard(template, &[r_ex, 0.25]),
            },
            Preset::Movetx => Self {
                parameter: SweepParameter::TxDistance,
                values: (2..=24).map(|k| f64::from(k) / 48.0).collect(),
                configs: gain_and_guard(&at_table_snr, &[r_ex, 0.25]),
            },
            Preset::Fig6 => {
                let mut configs = Vec::new();
                for &g_e in &TABLE_GAINS {
                    for r_ex in [0.0, 1.0 / 24.0, 1.0 / 12.0, 1.0 / 6.0] {
                        let mut s = with_gain(&at_table_snr, g_e);
                        s.scenario.r_ex = r_ex;
                        configs.push(s);
                    }
                }
                Self {
                    parameter: SweepParameter::GuardRadius,
                    values: (0..=8).map(|k| (8.0 + f64::from(k)) / 48.0).collect(),
                    configs,
                }
            }
            Preset::Fig7 => {
                let mut base = at_table_snr;
                base.scenario.r_ex = 1.0 / 12.0;
                Self {
                    parameter: SweepParameter::Mobiles,
                    values: (1..=30).map(|k| f64::from(2 * k)).collect(),
                    configs: gain_and_guard(&base, &[1.0 / 12.0, 0.25]),
                }
            }
        }
    }
}

/// One evaluated grid point of a sweep, with the spec that produced it.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub spec: ExperimentSpec,
    pub point: GammaPoint<f64>,
    pub mean_active: f64,
}

/// Runs every configuration of `plan`; records are grouped by configuration,
/// then value, then SNR.
pub fn run_sweep(plan: &SweepPlan, threads: usize) -> Result<Vec<SweepRecord>, CliError> {
    let mut records = Vec::new();
    for config in &plan.configs {
        let table = montecarlo::sweep(config, plan.parameter, &plan.values, threads)?;
        for row in table.rows {
            let spec = plan.parameter.apply(config, row.value)?;
            for point in row.average.points {
                records.push(SweepRecord {
                    spec: spec.clone(),
                    point,
                    mean_active: row.average.mean_active,
                });
            }
        }
    }
    Ok(records)
}

/// A small random outage problem for the closed-form check.
#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub powers: NormalizedPowers,
    pub m0: u32,
    pub beta_db: f64,
    pub gamma_db: f64,
    pub oracle_seed: u64,
}

impl OracleInstance {
    pub fn closed_form(&self) -> Result<f64, CliError> {
        Ok(conditional_outage(&OutageInputs {
            powers: &self.powers,
            beta: db_to_linear(self.beta_db),
            m0: self.m0,
            gamma_inv: 1.0 / db_to_linear(self.gamma_db),
        })?)
    }
}

/// Draws `count` instances with up to five interferers and mixed fading
/// and activity parameters.
pub fn oracle_instances(seed: u64, count: usize) -> Vec<OracleInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=5);
            let interferers = (0..n)
                .map(|_| InterfererPower {
                    omega: 10f64.powf(rng.random_range(-1.5..0.5)),
                    m: *[1.0, 2.0, 3.5].choose(&mut rng).expect("nonempty"),
                    p: *[0.3, 0.5, 1.0].choose(&mut rng).expect("nonempty"),
                })
                .collect();
            let omega0 = 10f64.powf(rng.random_range(0.0..1.0));
            OracleInstance {
                powers: NormalizedPowers::new(omega0, interferers).expect("valid by construction"),
                m0: rng.random_range(1..=3),
                beta_db: rng.random_range(-3.0..3.0),
                gamma_db: rng.random_range(0.0..20.0),
                oracle_seed: rng.random(),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct OracleCheck {
    pub instance: OracleInstance,
    pub closed_form: f64,
    pub oracle: OracleResult,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.oracle.covers(self.closed_form)
    }
}

pub fn oracle_check(seed: u64, count: usize, trials: u64, threads: usize) -> Result<Vec<OracleCheck>, CliError> {
    oracle_instances(seed, count)
        .into_iter()
        .map(|instance| {
            let closed_form = instance.closed_form()?;
            let oracle = montecarlo::with_workers(threads, || {
                simulate_outage(
                    &instance.powers,
                    instance.m0,
                    db_to_linear(instance.beta_db),
                    db_to_linear(instance.gamma_db),
                    trials,
                    instance.oracle_seed,
                )
            })?;
            Ok(OracleCheck {
                instance,
                closed_form,
                oracle,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_grid_order() {
        let spec = ExperimentSpec {
            n_realizations: 2,
            ..Default::default()
        };
        let rows = table1(&spec, 1).unwrap();
        assert_eq!(rows.len(), 16);
        assert_eq!((rows[0].g_e, rows[0].alpha, rows[0].r_ex, rows[0].r_g), (1.0, 3.0, 0.0, 1.0 / 12.0));
        assert_eq!((rows[15].g_e, rows[15].alpha, rows[15].r_ex, rows[15].r_g), (48.0, 4.0, 1.0 / 12.0, 0.25));
        assert!(rows.iter().all(|r| r.center.count == 2 && r.perimeter.count == 2));
    }

    #[test]
    fn presets_cover_their_ranges() {
        let t = ExperimentSpec::default();
        let fig6 = SweepPlan::preset(Preset::Fig6, &t);
        assert_eq!(fig6.values.first(), Some(&(1.0 / 6.0)));
        assert_eq!(fig6.values.last(), Some(&(1.0 / 3.0)));
        assert_eq!(fig6.configs.len(), 8);
        let fig7 = SweepPlan::preset(Preset::Fig7, &t);
        assert_eq!((fig7.values[0], *fig7.values.last().unwrap()), (2.0, 60.0));
        assert_eq!(SweepPlan::preset(Preset::Fig3, &t).values.len(), 26);
        assert_eq!(SweepPlan::preset(Preset::Movetx, &t).configs.len(), 4);
        assert!(SweepPlan::preset(Preset::Movetx, &t)
            .configs
            .iter()
            .all(|c| c.gamma_db_grid == vec![TABLE_GAMMA_DB]));
    }

    #[test]
    fn sweep_records_carry_applied_spec() {
        let t = ExperimentSpec {
            n_realizations: 3,
            ..Default::default()
        };
        let plan = SweepPlan::single(&table_template(&t), SweepParameter::GuardRadius, vec![0.1, 0.2]);
        let recs = run_sweep(&plan, 1).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].spec.scenario.r_g, 0.2);
    }

    #[test]
    fn instances_respect_limits() {
        let xs = oracle_instances(5, 200);
        assert!(xs.iter().all(|x| (1..=5).contains(&x.powers.interferers.len())));
        assert!(xs.iter().all(|x| (1..=3).contains(&x.m0)));
        for ip in xs.iter().flat_map(|x| &x.powers.interferers) {
            assert!([1.0, 2.0, 3.5].contains(&ip.m));
            assert!([0.3, 0.5, 1.0].contains(&ip.p));
        }
        // same seed, same instances
        let again = oracle_instances(5, 200);
        assert!(xs.iter().zip(&again).all(|(a, b)| a.powers == b.powers && a.oracle_seed == b.oracle_seed));
    }

    #[test]
    fn small_oracle_check_runs() {
        let checks = oracle_check(2, 3, 50_000, 1).unwrap();
        assert_eq!(checks.len(), 3);
        assert!(checks.iter().all(|c| (0.0..=1.0).contains(&c.closed_form)));
    }
}
