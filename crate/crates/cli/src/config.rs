//! Run configuration: CLI flags, the `key = value` config-file alternative
//! and the merge between them (flags win).

use std::collections::BTreeMap;
use std::path::PathBuf;

use ifolio::fuzzy::ShapeKind;
use ifolio::objectives::CriterionId;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Mv,
    Mvs,
}

impl Problem {
    pub fn criteria(self) -> &'static [CriterionId] {
        match self {
            Problem::Mv => &CriterionId::MEAN_VARIANCE,
            Problem::Mvs => &CriterionId::ALL,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Problem::Mv => "mv",
            Problem::Mvs => "mvs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Crisp,
    Fuzzy,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Crisp => "crisp",
            Mode::Fuzzy => "fuzzy",
        }
    }
}

/// Objective selector for the `oracle` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveChoice {
    Criterion(CriterionId),
    Phi,
}

impl ObjectiveChoice {
    pub fn label(self) -> &'static str {
        match self {
            ObjectiveChoice::Criterion(c) => c.label(),
            ObjectiveChoice::Phi => "phi",
        }
    }
}

/// A global shape spec plus optional per-criterion overrides
/// (`mu.0`, `mu.1`, `mu.2` in the config file).
#[derive(Debug, Clone)]
pub struct ShapeSpecs {
    pub global: String,
    pub overrides: BTreeMap<usize, String>,
}

impl Default for ShapeSpecs {
    fn default() -> Self {
        Self {
            global: "linear".into(),
            overrides: BTreeMap::new(),
        }
    }
}

impl ShapeSpecs {
    pub fn kind_for(&self, criterion_index: usize) -> Result<ShapeKind, CliError> {
        let spec = self
            .overrides
            .get(&criterion_index)
            .unwrap_or(&self.global);
        parse_shape_spec(spec)
    }

    pub fn echo(&self) -> String {
        if self.overrides.is_empty() {
            self.global.clone()
        } else {
            let mut parts = vec![self.global.clone()];
            for (k, v) in &self.overrides {
                parts.push(format!("{k}:{v}"));
            }
            parts.join(";")
        }
    }
}

/// Everything a command needs, after merging flags over the config file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Option<PathBuf>,
    pub returns: Option<PathBuf>,
    pub rf: Option<f64>,
    pub problem: Problem,
    pub mode: Mode,
    pub mu: ShapeSpecs,
    pub nu: ShapeSpecs,
    pub seed: u64,
    pub starts: usize,
    pub out: Option<PathBuf>,
    pub oracle_check: bool,
    pub grid: Option<usize>,
    pub samples: usize,
    pub objective: ObjectiveChoice,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: None,
            returns: None,
            rf: None,
            problem: Problem::Mvs,
            mode: Mode::Fuzzy,
            mu: ShapeSpecs::default(),
            nu: ShapeSpecs::default(),
            seed: 42,
            starts: 16,
            out: None,
            oracle_check: false,
            grid: None,
            samples: 1_000_000,
            objective: ObjectiveChoice::Phi,
        }
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment (config-file line or flag).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        match key {
            "model" => self.model = Some(PathBuf::from(value)),
            "returns" => self.returns = Some(PathBuf::from(value)),
            "rf" => {
                self.rf = Some(value.parse().map_err(|_| {
                    CliError::Config(format!("rf: invalid decimal {value:?}"))
                })?)
            }
            "problem" => {
                self.problem = match value {
                    "mv" => Problem::Mv,
                    "mvs" => Problem::Mvs,
                    other => return bad(format!("problem must be mv or mvs, got {other:?}")),
                }
            }
            "mode" => {
                self.mode = match value {
                    "crisp" => Mode::Crisp,
                    "fuzzy" => Mode::Fuzzy,
                    other => return bad(format!("mode must be crisp or fuzzy, got {other:?}")),
                }
            }
            "mu" => self.mu.global = value.to_string(),
            "nu" => self.nu.global = value.to_string(),
            "seed" => {
                self.seed = value.parse().map_err(|_| {
                    CliError::Config(format!("seed: invalid integer {value:?}"))
                })?
            }
            "starts" => {
                self.starts = value.parse().map_err(|_| {
                    CliError::Config(format!("starts: invalid count {value:?}"))
                })?
            }
            "out" => self.out = Some(PathBuf::from(value)),
            "oracle-check" => {
                self.oracle_check = match value {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    other => return bad(format!("oracle-check must be boolean, got {other:?}")),
                }
            }
            "grid" => {
                self.grid = Some(value.parse().map_err(|_| {
                    CliError::Config(format!("grid: invalid resolution {value:?}"))
                })?)
            }
            "samples" => {
                self.samples = value.parse().map_err(|_| {
                    CliError::Config(format!("samples: invalid count {value:?}"))
                })?
            }
            "objective" => {
                self.objective = match value {
                    "e" | "neg_expected_return" => {
                        ObjectiveChoice::Criterion(CriterionId::NegExpectedReturn)
                    }
                    "v" | "variance" => ObjectiveChoice::Criterion(CriterionId::Variance),
                    "sr" | "neg_sharpe" => ObjectiveChoice::Criterion(CriterionId::NegSharpe),
                    "phi" => ObjectiveChoice::Phi,
                    other => {
                        return bad(format!("objective must be e|v|sr|phi, got {other:?}"))
                    }
                }
            }
            other => {
                if let Some(idx) = parse_indexed_key(other, "mu") {
                    self.mu.overrides.insert(idx?, value.to_string());
                } else if let Some(idx) = parse_indexed_key(other, "nu") {
                    self.nu.overrides.insert(idx?, value.to_string());
                } else {
                    return bad(format!("unknown configuration key {other:?}"));
                }
            }
        }
        // Eagerly validate shape specs so typos fail at configuration time.
        if key == "mu" || key.starts_with("mu.") {
            for i in 0..3 {
                self.mu.kind_for(i)?;
            }
        }
        if key == "nu" || key.starts_with("nu.") {
            for i in 0..3 {
                self.nu.kind_for(i)?;
            }
        }
        Ok(())
    }

    /// Parses a UTF-8 `key = value` file, `#` comments allowed.
    pub fn apply_file(&mut self, text: &str) -> Result<(), CliError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "config line {}: expected key = value, got {line:?}",
                    idx + 1
                )));
            };
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn validate_sources(&self) -> Result<(), CliError> {
        match (&self.model, &self.returns) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "give either a model file or a returns CSV, not both".into(),
            )),
            (None, None) => Err(CliError::Config(
                "no input: give --model <path> or --returns <csv> --rf <rate>".into(),
            )),
            (None, Some(_)) if self.rf.is_none() => Err(CliError::Config(
                "--returns needs --rf <rate>".into(),
            )),
            _ => Ok(()),
        }
    }
}

fn parse_indexed_key(key: &str, prefix: &str) -> Option<Result<usize, CliError>> {
    let rest = key.strip_prefix(prefix)?.strip_prefix('.')?;
    Some(rest.parse::<usize>().map_err(|_| {
        CliError::Config(format!("bad criterion index in key {key:?}"))
    }))
}

/// Parses `linear`, `exp:<k>` or `table:<s:v,...>`.
pub fn parse_shape_spec(spec: &str) -> Result<ShapeKind, CliError> {
    if spec == "linear" {
        return Ok(ShapeKind::Linear);
    }
    if let Some(scale) = spec.strip_prefix("exp:") {
        let scale: f64 = scale
            .parse()
            .map_err(|_| CliError::Config(format!("exp shape needs a decimal scale, got {spec:?}")))?;
        return Ok(ShapeKind::Exponential { scale });
    }
    if let Some(body) = spec.strip_prefix("table:") {
        let mut knots = Vec::new();
        for pair in body.split(',') {
            let Some((s, v)) = pair.split_once(':') else {
                return Err(CliError::Config(format!(
                    "table knots are s:v pairs, got {pair:?}"
                )));
            };
            let s: f64 = s.trim().parse().map_err(|_| {
                CliError::Config(format!("bad knot position {s:?}"))
            })?;
            let v: f64 = v.trim().parse().map_err(|_| {
                CliError::Config(format!("bad knot value {v:?}"))
            })?;
            knots.push((s, v));
        }
        return Ok(ShapeKind::Table { knots });
    }
    Err(CliError::Config(format!(
        "unknown shape spec {spec:?}; expected linear, exp:<k> or table:<s:v,...>"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_parsing_and_flag_override() {
        let mut cfg = RunConfig::default();
        cfg.apply_file(
            "# comment\nproblem = mv\nmode = crisp\nseed = 7\nmu = exp:2.0\nmu.1 = linear\n",
        )
        .unwrap();
        assert_eq!(cfg.problem, Problem::Mv);
        assert_eq!(cfg.mode, Mode::Crisp);
        assert_eq!(cfg.seed, 7);
        assert!(matches!(
            cfg.mu.kind_for(0).unwrap(),
            ShapeKind::Exponential { .. }
        ));
        assert!(matches!(cfg.mu.kind_for(1).unwrap(), ShapeKind::Linear));
        // A later flag assignment wins.
        cfg.set("seed", "99").unwrap();
        assert_eq!(cfg.seed, 99);
    }

    #[test]
    fn bad_keys_and_values_are_config_errors() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("probelm", "mv").is_err());
        assert!(cfg.set("problem", "both").is_err());
        assert!(cfg.set("seed", "x").is_err());
        assert!(cfg.set("mu", "exp").is_err());
        assert!(cfg.apply_file("just a line\n").is_err());
    }

    #[test]
    fn shape_specs_parse() {
        assert!(matches!(parse_shape_spec("linear"), Ok(ShapeKind::Linear)));
        assert!(matches!(
            parse_shape_spec("exp:1.5"),
            Ok(ShapeKind::Exponential { .. })
        ));
        match parse_shape_spec("table:0.25:0.8,0.75:0.3") {
            Ok(ShapeKind::Table { knots }) => assert_eq!(knots.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_shape_spec("spline").is_err());
    }

    #[test]
    fn source_validation() {
        let mut cfg = RunConfig::default();
        assert!(cfg.validate_sources().is_err());
        cfg.model = Some("m.model".into());
        assert!(cfg.validate_sources().is_ok());
        cfg.returns = Some("r.csv".into());
        assert!(cfg.validate_sources().is_err());
        cfg.model = None;
        assert!(cfg.validate_sources().is_err());
        cfg.rf = Some(0.005);
        assert!(cfg.validate_sources().is_ok());
    }
}
