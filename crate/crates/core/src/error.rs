use thiserror::Error;

use crate::solver::SolveReport;

/// Errors produced by model construction, criterion evaluation, bound
/// derivation and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// A return series needs at least two observation rows.
    #[error("return series must have at least 2 observation rows, got {0}")]
    EmptySeries(usize),

    /// A non-finite value (NaN or infinity) was found in `{0}`.
    #[error("non-finite value in {0}")]
    NonFiniteInput(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// An asset column has zero sample variance, so no portfolio containing
    /// it can be priced by the Sharpe ratio.
    #[error("asset {label:?} has zero return variance")]
    DegenerateAsset { label: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A market-model invariant failed; the message names the invariant.
    #[error("model invariant violated: {0}")]
    InvariantViolation(String),

    /// The portfolio variance is numerically zero, so the Sharpe ratio is
    /// undefined at this point.
    #[error("zero variance: x'Qx = {0:.3e} is below 1e-16")]
    ZeroVariance(f64),

    /// Aspiration bounds collapsed (`y1 >= y0`) for the named criterion.
    #[error("degenerate criterion {criterion}: {message}")]
    DegenerateCriterion { criterion: String, message: String },

    /// The constructed membership pair breaks `0 <= mu + nu <= 1`.
    #[error(
        "intuitionistic condition violated at t = {worst_t}: mu + nu = {worst_sum}"
    )]
    IfConditionViolated { worst_t: f64, worst_sum: f64 },

    #[error("invalid membership shape: {0}")]
    BadShape(String),

    /// Every start hit the iteration cap without meeting a tolerance.
    /// The partial report (best point found so far) is attached.
    #[error("solver did not converge on any start")]
    SolverFailure { report: Box<SolveReport> },

    #[error("sample budget exceeded: {requested} points > cap {cap}")]
    ResourceLimit { requested: u128, cap: usize },

    #[error("invalid portfolio weights: {0}")]
    InvalidWeights(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
