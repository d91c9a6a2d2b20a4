//! Plain-text scenario files.
//!
//! One `key = value` pair per line; `#` starts a comment. Every key is
//! optional and unknown or repeated keys are rejected. Real values accept
//! fraction literals such as `1/12`.

use std::fmt::Write as _;

use guardzone::channel::ShadowingScale;
use guardzone::geometry::TxBearing;
use guardzone::montecarlo::{LambdaMode, ReceiverMode};
use guardzone::{ChipMode, ExperimentSpec};

use crate::error::CliError;

/// Keys in the order they are rendered.
pub const KEYS: &[&str] = &[
    "r_net",
    "M",
    "r_ex",
    "r_g",
    "tx_distance",
    "receiver",
    "tx_bearing",
    "exclusion_around_receiver",
    "p_active",
    "retry_cap",
    "alpha",
    "sigma_s_db",
    "shadowing_scale",
    "beta_db",
    "m0",
    "m_i",
    "chip_mode",
    "G_e",
    "processing_gain",
    "power_ratio",
    "d0",
    "clamp_near_field",
    "gamma_db",
    "realizations",
    "seed",
    "lambda_mode",
];

/// Where a key-value pair came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
}

impl std::fmt::Display for Origin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override => f.write_str("--set"),
        }
    }
}

fn parse_error(origin: Origin, key: &str, message: impl Into<String>) -> CliError {
    CliError::Parse {
        origin: origin.to_string(),
        key: key.to_string(),
        message: message.into(),
    }
}

/// Parses a real number or an `a/b` fraction.
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

/// Parses a comma-separated list of reals.
pub fn parse_real_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(parse_real).collect()
}

/// Incrementally applies key-value pairs to a spec.
#[derive(Debug, Clone)]
pub struct SpecBuilder {
    spec: ExperimentSpec,
    /// Kept separately so `chip_mode` and `G_e` may appear in either order.
    g_e: f64,
    random_chips: bool,
    seen: Vec<&'static str>,
}

impl Default for SpecBuilder {
    fn default() -> Self {
        Self::from_spec(ExperimentSpec::default())
    }
}

impl SpecBuilder {
    pub fn from_spec(spec: ExperimentSpec) -> Self {
        let (g_e, random_chips) = match spec.channel.chip_mode {
            ChipMode::ConstantEffectiveGain(g) => (g, false),
            ChipMode::RandomOffset => (48.0, true),
        };
        Self {
            spec,
            g_e,
            random_chips,
            seen: Vec::new(),
        }
    }

    /// Applies every line of a scenario document. Keys may appear once.
    pub fn apply_document(&mut self, text: &str) -> Result<(), CliError> {
        self.seen.clear();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = Origin::Line(i + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_error(origin, line, "expected `key = value`"))?;
            let key = key.trim();
            let canonical = KEYS
                .iter()
                .copied()
                .find(|k| *k == key)
                .ok_or_else(|| parse_error(origin, key, "unknown key"))?;
            if self.seen.contains(&canonical) {
                return Err(parse_error(origin, key, "repeated key"));
            }
            self.seen.push(canonical);
            self.set(canonical, value.trim(), origin)?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<(), CliError> {
        let origin = Origin::Override;
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| parse_error(origin, assignment, "expected `key=value`"))?;
        self.set(key.trim(), value.trim(), origin)
    }

    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), CliError> {
        let real = || parse_real(value).ok_or_else(|| parse_error(origin, key, format!("`{value}` is not a number")));
        let int = || {
            value
                .parse::<u64>()
                .map_err(|_| parse_error(origin, key, format!("`{value}` is not a non-negative integer")))
        };
        let boolean = || match value {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(parse_error(origin, key, format!("`{value}` is not true or false"))),
        };
        let choice = |options: &str| parse_error(origin, key, format!("`{value}` is not one of {options}"));

        let s = &mut self.spec.scenario;
        let c = &mut self.spec.channel;
        match key {
            "r_net" => s.r_net = real()?,
            "M" => s.mobiles = int()? as usize,
            "r_ex" => s.r_ex = real()?,
            "r_g" => s.r_g = real()?,
            "tx_distance" => s.tx_distance = real()?,
            "receiver" => {
                self.spec.receiver_mode = match value {
                    "center" => ReceiverMode::Center,
                    "perimeter" => ReceiverMode::Perimeter,
                    _ => return Err(choice("center, perimeter")),
                }
            }
            "tx_bearing" => s.tx_bearing = TxBearing::parse(value).ok_or_else(|| choice("inward, positive_x"))?,
            "exclusion_around_receiver" => s.exclusion_around_receiver = boolean()?,
            "p_active" => s.p_active = real()?,
            "retry_cap" => s.retry_cap = int()?,
            "alpha" => c.alpha = real()?,
            "sigma_s_db" => c.sigma_s_db = real()?,
            "shadowing_scale" => {
                c.shadowing_scale = ShadowingScale::parse(value).ok_or_else(|| choice("power, amplitude"))?
            }
            "beta_db" => c.beta_db = real()?,
            "m0" => {
                c.m0 = u32::try_from(int()?).map_err(|_| parse_error(origin, key, "out of range"))?;
            }
            "m_i" => c.m_i = real()?,
            "chip_mode" => {
                self.random_chips = match value {
                    "constant" => false,
                    "random" => true,
                    _ => return Err(choice("constant, random")),
                }
            }
            "G_e" => self.g_e = real()?,
            "processing_gain" => c.processing_gain = real()?,
            "power_ratio" => c.power_ratio = real()?,
            "d0" => c.d0 = real()?,
            "clamp_near_field" => c.clamp_near_field = boolean()?,
            "gamma_db" => {
                self.spec.gamma_db_grid = parse_real_list(value)
                    .ok_or_else(|| parse_error(origin, key, format!("`{value}` is not a list of numbers")))?;
            }
            "realizations" => self.spec.n_realizations = int()? as usize,
            "seed" => self.spec.master_seed = int()?,
            "lambda_mode" => {
                self.spec.lambda_mode = parse_lambda_mode(value).ok_or_else(|| choice("weighted, count, interferers"))?
            }
            _ => return Err(parse_error(origin, key, "unknown key")),
        }
        Ok(())
    }

    pub fn build(&self) -> ExperimentSpec {
        let mut spec = self.spec.clone();
        spec.channel.chip_mode = if self.random_chips {
            ChipMode::RandomOffset
        } else {
            ChipMode::ConstantEffectiveGain(self.g_e)
        };
        spec
    }
}

pub fn parse_lambda_mode(s: &str) -> Option<LambdaMode> {
    match s {
        "weighted" => Some(LambdaMode::Weighted),
        "count" => Some(LambdaMode::Count),
        "interferers" => Some(LambdaMode::Interferers),
        _ => None,
    }
}

/// Parses a whole scenario document on top of the defaults.
pub fn parse(text: &str) -> Result<ExperimentSpec, CliError> {
    let mut b = SpecBuilder::default();
    b.apply_document(text)?;
    Ok(b.build())
}

/// Renders every key of `spec`. Reals use the shortest representation that
/// parses back to the same value, so `parse(&render(s)) == s`.
pub fn render(spec: &ExperimentSpec) -> String {
    let s = &spec.scenario;
    let c = &spec.channel;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("r_net", s.r_net.to_string());
    kv("M", s.mobiles.to_string());
    kv("r_ex", s.r_ex.to_string());
    kv("r_g", s.r_g.to_string());
    kv("tx_distance", s.tx_distance.to_string());
    kv(
        "receiver",
        match spec.receiver_mode {
            ReceiverMode::Center => "center",
            ReceiverMode::Perimeter => "perimeter",
        }
        .into(),
    );
    kv("tx_bearing", s.tx_bearing.as_str().into());
    kv("exclusion_around_receiver", s.exclusion_around_receiver.to_string());
    kv("p_active", s.p_active.to_string());
    kv("retry_cap", s.retry_cap.to_string());
    kv("alpha", c.alpha.to_string());
    kv("sigma_s_db", c.sigma_s_db.to_string());
    kv("shadowing_scale", c.shadowing_scale.as_str().into());
    kv("beta_db", c.beta_db.to_string());
    kv("m0", c.m0.to_string());
    kv("m_i", c.m_i.to_string());
    match c.chip_mode {
        ChipMode::ConstantEffectiveGain(g) => {
            kv("chip_mode", "constant".into());
            kv("G_e", g.to_string());
        }
        ChipMode::RandomOffset => kv("chip_mode", "random".into()),
    }
    kv("processing_gain", c.processing_gain.to_string());
    kv("power_ratio", c.power_ratio.to_string());
    kv("d0", c.d0.to_string());
    kv("clamp_near_field", c.clamp_near_field.to_string());
    kv(
        "gamma_db",
        spec.gamma_db_grid.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
    );
    kv("realizations", spec.n_realizations.to_string());
    kv("seed", spec.master_seed.to_string());
    kv("lambda_mode", spec.lambda_mode.as_str().into());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        assert_eq!(parse("").unwrap(), ExperimentSpec::default());
        assert_eq!(parse("# only a comment\n\n   \n").unwrap(), ExperimentSpec::default());
    }

    #[test]
    fn fractions_and_comments() {
        let spec = parse("r_ex = 1/24   # smaller zone\nr_g=1/4\nG_e = 1\ngamma_db = 0, 5/1, 10\n").unwrap();
        assert_eq!(spec.scenario.r_ex, 1.0 / 24.0);
        assert_eq!(spec.scenario.r_g, 0.25);
        assert_eq!(spec.channel.chip_mode, ChipMode::ConstantEffectiveGain(1.0));
        assert_eq!(spec.gamma_db_grid, vec![0.0, 5.0, 10.0]);
    }

    #[test]
    fn unknown_key_names_key_and_line() {
        let err = parse("alpha = 3\nr_gg = 0.2\n").unwrap_err();
        match err {
            CliError::Parse { origin, key, .. } => {
                assert_eq!(origin, "line 2");
                assert_eq!(key, "r_gg");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn repeated_key_is_rejected() {
        assert!(matches!(parse("M = 3\nM = 4\n"), Err(CliError::Parse { .. })));
    }

    #[test]
    fn malformed_values_are_rejected() {
        for doc in [
            "alpha = three",
            "M = -1",
            "M = 2.5",
            "receiver = edge",
            "clamp_near_field = yes",
            "gamma_db = 1,,2",
            "r_ex = 1/0",
            "lambda_mode = all",
            "no equals sign",
        ] {
            assert!(matches!(parse(doc), Err(CliError::Parse { .. })), "{doc}");
        }
    }

    #[test]
    fn chip_mode_and_gain_in_either_order() {
        let a = parse("G_e = 10\nchip_mode = random\n").unwrap();
        let b = parse("chip_mode = random\nG_e = 10\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.channel.chip_mode, ChipMode::RandomOffset);
    }

    #[test]
    fn render_round_trips() {
        let doc = "r_ex = 1/12\nr_g = 1/4\ntx_distance = 0.3\nreceiver = perimeter\nalpha = 3\n\
                   sigma_s_db = 5.5\nshadowing_scale = amplitude\ntx_bearing = positive_x\n\
                   beta_db = -1.5\nm0 = 2\nm_i = 3.5\nG_e = 1/3\ngamma_db = 1/3, 10\n\
                   realizations = 17\nseed = 18446744073709551615\nlambda_mode = interferers\n\
                   exclusion_around_receiver = false\nclamp_near_field = true\n";
        let spec = parse(doc).unwrap();
        assert_eq!(parse(&render(&spec)).unwrap(), spec);
        let random = parse("chip_mode = random\nprocessing_gain = 64\n").unwrap();
        assert_eq!(parse(&render(&random)).unwrap(), random);
        assert_eq!(parse(&render(&ExperimentSpec::default())).unwrap(), ExperimentSpec::default());
    }

    #[test]
    fn every_key_is_rendered() {
        let text = render(&ExperimentSpec::default());
        for key in KEYS {
            assert!(text.lines().any(|l| l.starts_with(&format!("{key} ="))), "{key}");
        }
    }

    #[test]
    fn overrides_apply_after_document() {
        let mut b = SpecBuilder::default();
        b.apply_document("alpha = 3\n").unwrap();
        b.apply_override("alpha=4").unwrap();
        assert_eq!(b.build().channel.alpha, 4.0);
        assert!(matches!(b.apply_override("alpha"), Err(CliError::Parse { .. })));
        assert!(matches!(b.apply_override("bogus=1"), Err(CliError::Parse { .. })));
    }
}
