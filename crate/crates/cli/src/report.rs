//! Machine-readable run reports: fixed field order, floats rounded to 12
//! significant digits, so identical configurations produce byte-identical
//! JSON.

use serde::Serialize;
use serde_json::Value;

use ifolio::bounds::AspirationBounds;
use ifolio::objectives::CriterionId;
use ifolio::solver::SolveReport;

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub input: String,
    pub problem: String,
    pub mode: String,
    pub mu: String,
    pub nu: String,
    pub seed: u64,
    pub starts: usize,
}

/// The Table-4-style row: portfolio return, risk and (for the tri-criteria
/// problem) the Sharpe ratio at the solution.
#[derive(Debug, Clone, Serialize)]
pub struct PerformanceRow {
    pub expected_return: f64,
    pub variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sharpe_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub scheme: String,
    pub seed: u64,
    pub evaluated: usize,
    pub oracle_min: f64,
    pub solver_value: f64,
    /// `oracle_min - solver_value`; nonnegative when no sample beats the
    /// solver.
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub bounds: AspirationBounds,
    pub solve: SolveReport,
    pub performance: PerformanceRow,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
}

/// Rounds to 12 significant digits; the report contract for every float.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    if let Some(rounded) = serde_json::Number::from_f64(round_sig(f)) {
                        *n = rounded;
                    }
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Serializes with declaration field order and 12-significant-digit floats.
pub fn to_json(report: &impl Serialize) -> Result<String, CliError> {
    let mut value = serde_json::to_value(report)
        .map_err(|e| CliError::Config(format!("report serialization failed: {e}")))?;
    round_value(&mut value);
    let mut text = serde_json::to_string_pretty(&value)
        .map_err(|e| CliError::Config(format!("report serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub fn write_json(path: &std::path::Path, report: &impl Serialize) -> Result<(), CliError> {
    let text = to_json(report)?;
    std::fs::write(path, text).map_err(|e| CliError::Core(e.into()))
}

/// Human-readable bounds table.
pub fn format_bounds(bounds: &AspirationBounds, labels: &[String]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<22} {:>14} {:>14}  {}",
        "criterion", "y1 (best)", "y0 (worst)", "worst vertex"
    );
    for b in &bounds.criteria {
        let vertex_label = &labels[b.max_vertex];
        let best_note = match b.min_vertex {
            Some(k) => format!("  (best at {})", labels[k]),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "{:<22} {:>14.8} {:>14.8}  {}{}",
            b.criterion.label(),
            b.y1,
            b.y0,
            vertex_label,
            best_note
        );
    }
    out
}

/// Human-readable solution block.
pub fn format_solution(
    labels: &[String],
    weights: &[f64],
    performance: &PerformanceRow,
    objective: f64,
    converged: bool,
) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "solution (objective = {objective:.8}, converged = {converged}):");
    for (label, w) in labels.iter().zip(weights.iter()) {
        let _ = writeln!(out, "  {label:<8} {w:>10.6}");
    }
    let _ = write!(
        out,
        "E(x) = {:.6}   V(x) = {:.6}",
        performance.expected_return, performance.variance
    );
    if let Some(sr) = performance.sharpe_ratio {
        let _ = write!(out, "   Sr(x) = {sr:.6}");
    }
    out.push('\n');
    out
}

pub fn criteria_names(criteria: &[CriterionId]) -> String {
    criteria
        .iter()
        .map(|c| c.label())
        .collect::<Vec<_>>()
        .join(", ")
}
