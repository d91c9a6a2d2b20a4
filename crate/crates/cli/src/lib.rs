//! Batch front end for the `guardzone` library.
//!
//! Every subcommand resolves an [`ExperimentSpec`] from defaults, an optional
//! scenario file, `--set` overrides and the dedicated flags (in that order),
//! then writes `<name>.csv` and a `<name>.meta` sidecar into `--out`.

pub mod error;
pub mod format;
pub mod presets;
pub mod scenario;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use guardzone::montecarlo::{self, LambdaMode, ReceiverMode, SweepParameter};
use guardzone::{ChipMode, ExperimentSpec};

pub use error::{CliError, EXIT_INFEASIBLE, EXIT_OK, EXIT_PARSE, EXIT_VALIDATION};
use format::g6;
use presets::{Preset, SweepPlan};
use scenario::SpecBuilder;

#[derive(Debug, Parser)]
#[command(name = "guardzone", version, about = "Outage and transmission capacity of DS-CDMA ad hoc networks")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file of `key = value` lines.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Master seed; overrides the scenario.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of network realizations; overrides the scenario.
    #[arg(long, global = true)]
    pub realizations: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "results")]
    pub out: PathBuf,
    /// Worker threads; 0 uses one per core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Density convention: weighted, count or interferers.
    #[arg(long, global = true, value_parser = parse_lambda_flag)]
    pub lambda_mode: Option<LambdaMode>,
    /// Scenario override, `key=value`; may be repeated.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

fn parse_lambda_flag(s: &str) -> Result<LambdaMode, String> {
    scenario::parse_lambda_mode(s).ok_or_else(|| format!("`{s}` is not one of weighted, count, interferers"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spatially averaged outage at every grid SNR.
    Outage,
    /// Normalized transmission capacity at every grid SNR.
    Tc,
    /// Sweep one parameter, or run a figure preset.
    Sweep(SweepArgs),
    /// Outage at the center and the perimeter for the 16-row parameter grid.
    Table1,
    /// Compare the closed form against fading simulation on random instances.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// One of tx_distance, r_g, r_ex, M, gamma_db.
    #[arg(long, requires = "values", conflicts_with = "preset")]
    pub param: Option<String>,
    /// Comma-separated values; fractions such as 1/6 are accepted.
    #[arg(long, requires = "param")]
    pub values: Option<String>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_PARSE } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Builds the spec from defaults, scenario file, overrides and flags.
pub fn resolve_spec(common: &Common) -> Result<ExperimentSpec, CliError> {
    let mut builder = SpecBuilder::default();
    if let Some(path) = &common.scenario {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            context: format!("reading {}", path.display()),
            source,
        })?;
        builder.apply_document(&text)?;
    }
    for o in &common.overrides {
        builder.apply_override(o)?;
    }
    let mut spec = builder.build();
    if let Some(seed) = common.seed {
        spec.master_seed = seed;
    }
    if let Some(n) = common.realizations {
        spec.n_realizations = n;
    }
    if let Some(mode) = common.lambda_mode {
        spec.lambda_mode = mode;
    }
    Ok(spec)
}

/// A CSV document plus the spec that produced it.
#[derive(Debug, Clone)]
pub struct Output {
    pub name: String,
    pub csv: String,
    pub meta: String,
}

/// Runs the command and writes its files; returns the written paths.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let spec = resolve_spec(&cli.common)?;
    let output = compute(&cli.command, &spec, cli.common.threads)?;
    write_output(&cli.common.out, &output)
}

/// Evaluates a command without touching the file system.
pub fn compute(command: &Command, spec: &ExperimentSpec, threads: usize) -> Result<Output, CliError> {
    spec.validate()?;
    match command {
        Command::Outage => {
            let avg = montecarlo::spatial_average_outage(spec, threads)?;
            let mut csv = String::from("gamma_db,outage,outage_se,realizations\n");
            for p in &avg.points {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    g6(p.gamma_db),
                    g6(p.outage.mean),
                    g6(p.outage.std_error),
                    p.outage.count
                );
            }
            Ok(Output::new("outage", csv, spec, &[]))
        }
        Command::Tc => {
            let avg = montecarlo::transmission_capacity(spec, threads)?;
            let mut csv = String::from("gamma_db,tc,tc_se,outage,outage_se,density,mean_active,realizations\n");
            for p in &avg.points {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    g6(p.gamma_db),
                    g6(p.tc.mean),
                    g6(p.tc.std_error),
                    g6(p.outage.mean),
                    g6(p.outage.std_error),
                    g6(avg.density.mean),
                    g6(avg.mean_active),
                    avg.realizations
                );
            }
            Ok(Output::new("tc", csv, spec, &[]))
        }
        Command::Sweep(args) => {
            let (name, plan) = match (&args.preset, &args.param, &args.values) {
                (Some(p), _, _) => (p.as_str().to_string(), SweepPlan::preset(*p, spec)),
                (None, Some(param), Some(values)) => {
                    let parameter = SweepParameter::parse(param)
                        .ok_or_else(|| CliError::Usage(format!("unknown sweep parameter `{param}`")))?;
                    let values = scenario::parse_real_list(values)
                        .ok_or_else(|| CliError::Usage(format!("`{values}` is not a list of numbers")))?;
                    (format!("sweep_{}", parameter.as_str()), SweepPlan::single(spec, parameter, values))
                }
                _ => return Err(CliError::Usage("sweep needs --preset or --param with --values".into())),
            };
            let records = presets::run_sweep(&plan, threads)?;
            let mut csv =
                String::from("param,G_e,alpha,r_ex,r_g,tx_distance,M,receiver,gamma_db,outage,outage_se,tc,tc_se,mean_active\n");
            for r in &records {
                let s = &r.spec;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    plan.parameter.as_str(),
                    gain_label(s),
                    g6(s.channel.alpha),
                    g6(s.scenario.r_ex),
                    g6(s.scenario.r_g),
                    g6(s.scenario.tx_distance),
                    s.scenario.mobiles,
                    receiver_label(s.receiver_mode),
                    g6(r.point.gamma_db),
                    g6(r.point.outage.mean),
                    g6(r.point.outage.std_error),
                    g6(r.point.tc.mean),
                    g6(r.point.tc.std_error),
                    g6(r.mean_active)
                );
            }
            let base = plan.configs.first().cloned().unwrap_or_else(|| spec.clone());
            Ok(Output::new(&name, csv, &base, &[("sweep", plan.parameter.as_str())]))
        }
        Command::Table1 => {
            let rows = presets::table1(spec, threads)?;
            Ok(Output::new("table1", table1_csv(&rows), &presets::table_template(spec), &[]))
        }
        Command::OracleCheck(args) => {
            let checks = presets::oracle_check(spec.master_seed, args.instances, args.trials, threads)?;
            let mut csv = String::from("instance,interferers,m0,beta_db,gamma_db,closed_form,oracle,ci99,pass\n");
            for (i, c) in checks.iter().enumerate() {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{}",
                    i,
                    c.instance.powers.interferers.len(),
                    c.instance.m0,
                    g6(c.instance.beta_db),
                    g6(c.instance.gamma_db),
                    g6(c.closed_form),
                    g6(c.oracle.estimate),
                    g6(c.oracle.ci99_halfwidth),
                    c.passed()
                );
            }
            let passed = checks.iter().filter(|c| c.passed()).count();
            eprintln!("{passed}/{} instances within the 99% interval", checks.len());
            let trials = args.trials.to_string();
            Ok(Output::new("oracle_check", csv, spec, &[("trials", &trials)]))
        }
    }
}

pub fn table1_csv(rows: &[presets::TableRow]) -> String {
    let mut csv = String::from("G_e,alpha,r_ex,r_g,eps_c,se_c,eps_p,se_p\n");
    for r in rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            g6(r.g_e),
            g6(r.alpha),
            g6(r.r_ex),
            g6(r.r_g),
            g6(r.center.mean),
            g6(r.center.std_error),
            g6(r.perimeter.mean),
            g6(r.perimeter.std_error)
        );
    }
    csv
}

fn gain_label(spec: &ExperimentSpec) -> String {
    match spec.channel.chip_mode {
        ChipMode::ConstantEffectiveGain(g) => g6(g),
        ChipMode::RandomOffset => "random".into(),
    }
}

fn receiver_label(mode: ReceiverMode) -> &'static str {
    match mode {
        ReceiverMode::Center => "center",
        ReceiverMode::Perimeter => "perimeter",
    }
}

impl Output {
    fn new(name: &str, csv: String, spec: &ExperimentSpec, notes: &[(&str, &str)]) -> Self {
        let mut meta = format!("# guardzone {}\n# output: {name}.csv\n", env!("CARGO_PKG_VERSION"));
        for (k, v) in notes {
            let _ = writeln!(meta, "# {k}: {v}");
        }
        meta.push_str(&scenario::render(spec));
        Self {
            name: name.to_string(),
            csv,
            meta,
        }
    }
}

pub fn write_output(dir: &Path, output: &Output) -> Result<Vec<PathBuf>, CliError> {
    let io = |context: String| move |source| CliError::Io { context, source };
    std::fs::create_dir_all(dir).map_err(io(format!("creating {}", dir.display())))?;
    let csv = dir.join(format!("{}.csv", output.name));
    let meta = dir.join(format!("{}.meta", output.name));
    std::fs::write(&csv, &output.csv).map_err(io(format!("writing {}", csv.display())))?;
    std::fs::write(&meta, &output.meta).map_err(io(format!("writing {}", meta.display())))?;
    Ok(vec![csv, meta])
}
