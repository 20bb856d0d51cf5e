//! The three scalar criteria of the tri-objective portfolio problem and
//! their gradients.
//!
//! All three are minimized over the unit simplex:
//!
//! * `E*(x) = -L'x` — negated expected return (linear),
//! * `V(x)  = x'Qx` — return variance (convex quadratic),
//! * `Sr*(x) = -(L'x - rf) / sqrt(x'Qx)` — negated Sharpe ratio, a
//!   pseudoconvex fractional objective.
//!
//! Evaluation is split into a checked entry point taking [`PortfolioWeights`]
//! and a raw entry point taking any finite vector. The raw form exists so
//! that finite-difference oracles can probe points slightly off the simplex.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::MarketModel;

/// Portfolio variance at or below this level is treated as zero and the
/// Sharpe ratio is refused. With positive covariance diagonals enforced
/// upstream this only triggers on invalid models.
pub const ZERO_VARIANCE_THRESHOLD: f64 = 1e-16;

/// Tolerance on `sum(weights) - 1` accepted by [`PortfolioWeights::new`].
pub const SIMPLEX_SUM_TOLERANCE: f64 = 1e-9;

/// Identifies one of the three scalar criteria. The ordering is fixed:
/// index 0 is `E*`, 1 is `V`, 2 is `Sr*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CriterionId {
    NegExpectedReturn,
    Variance,
    NegSharpe,
}

impl CriterionId {
    pub const ALL: [CriterionId; 3] = [
        CriterionId::NegExpectedReturn,
        CriterionId::Variance,
        CriterionId::NegSharpe,
    ];

    /// The two criteria of the bi-objective (mean-variance) problem.
    pub const MEAN_VARIANCE: [CriterionId; 2] =
        [CriterionId::NegExpectedReturn, CriterionId::Variance];

    pub fn index(self) -> usize {
        match self {
            CriterionId::NegExpectedReturn => 0,
            CriterionId::Variance => 1,
            CriterionId::NegSharpe => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CriterionId::NegExpectedReturn => "neg_expected_return",
            CriterionId::Variance => "variance",
            CriterionId::NegSharpe => "neg_sharpe",
        }
    }
}

impl std::fmt::Display for CriterionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A point on the unit simplex: nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioWeights(DVector<f64>);

impl PortfolioWeights {
    /// Validates the simplex invariants: length >= 2, all finite, all
    /// nonnegative, sum within [`SIMPLEX_SUM_TOLERANCE`] of one.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let v = DVector::from_vec(weights);
        Self::from_vector(v)
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.len() < 2 {
            return Err(Error::InvalidWeights(format!(
                "need at least 2 assets, got {}",
                v.len()
            )));
        }
        if v.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFiniteInput("portfolio weights"));
        }
        if let Some(w) = v.iter().find(|w| **w < 0.0) {
            return Err(Error::InvalidWeights(format!("negative weight {w}")));
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOLERANCE {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {sum}, not 1 within {SIMPLEX_SUM_TOLERANCE:e}"
            )));
        }
        Ok(Self(v))
    }

    /// The equal-weight portfolio `(1/n, ..., 1/n)`.
    pub fn uniform(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0 / n as f64))
    }

    /// The vertex `e_k`: all weight on asset `k`.
    pub fn vertex(n: usize, k: usize) -> Self {
        let mut v = DVector::zeros(n);
        v[k] = 1.0;
        Self(v)
    }

    /// Wraps a vector that is known to satisfy the invariants (for example
    /// the output of the simplex projection). Checked in debug builds.
    pub(crate) fn from_projection(v: DVector<f64>) -> Self {
        debug_assert!(v.iter().all(|w| *w >= 0.0));
        debug_assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }
}

impl Serialize for PortfolioWeights {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter())
    }
}

/// The three criterion values at one portfolio.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriterionValues {
    pub neg_expected_return: f64,
    pub variance: f64,
    pub neg_sharpe: f64,
}

impl CriterionValues {
    pub fn get(&self, c: CriterionId) -> f64 {
        match c {
            CriterionId::NegExpectedReturn => self.neg_expected_return,
            CriterionId::Variance => self.variance,
            CriterionId::NegSharpe => self.neg_sharpe,
        }
    }
}

/// Evaluates criterion `c` at a feasible portfolio.
pub fn eval(model: &MarketModel, x: &PortfolioWeights, c: CriterionId) -> Result<f64> {
    eval_raw(model, x.as_vector(), c)
}

/// Evaluates the criterion formula at an arbitrary finite point. Used by
/// finite-difference oracles, which step slightly off the simplex.
pub fn eval_raw(model: &MarketModel, x: &DVector<f64>, c: CriterionId) -> Result<f64> {
    match c {
        CriterionId::NegExpectedReturn => Ok(-model.mean_returns().dot(x)),
        CriterionId::Variance => Ok(quadratic_form(model, x)),
        CriterionId::NegSharpe => {
            let v = quadratic_form(model, x);
            if v <= ZERO_VARIANCE_THRESHOLD {
                return Err(Error::ZeroVariance(v));
            }
            let excess = model.mean_returns().dot(x) - model.risk_free_rate();
            Ok(-excess / v.sqrt())
        }
    }
}

/// Gradient of criterion `c` at a feasible portfolio.
pub fn grad(model: &MarketModel, x: &PortfolioWeights, c: CriterionId) -> Result<DVector<f64>> {
    grad_raw(model, x.as_vector(), c)
}

/// Gradient of the criterion formula at an arbitrary finite point.
///
/// `grad E* = -L`, `grad V = 2Qx`, and for the negated Sharpe ratio the
/// quotient rule gives
/// `grad Sr* = -[ L / sqrt(V) - (L'x - rf) Qx / V^(3/2) ]`.
pub fn grad_raw(model: &MarketModel, x: &DVector<f64>, c: CriterionId) -> Result<DVector<f64>> {
    match c {
        CriterionId::NegExpectedReturn => Ok(-model.mean_returns()),
        CriterionId::Variance => Ok(2.0 * (model.covariance() * x)),
        CriterionId::NegSharpe => {
            let v = quadratic_form(model, x);
            if v <= ZERO_VARIANCE_THRESHOLD {
                return Err(Error::ZeroVariance(v));
            }
            let qx = model.covariance() * x;
            let excess = model.mean_returns().dot(x) - model.risk_free_rate();
            let sqrt_v = v.sqrt();
            Ok(-(model.mean_returns() / sqrt_v - (excess / (v * sqrt_v)) * qx))
        }
    }
}

/// All three criterion values at one portfolio.
pub fn criterion_values(model: &MarketModel, x: &PortfolioWeights) -> Result<CriterionValues> {
    Ok(CriterionValues {
        neg_expected_return: eval(model, x, CriterionId::NegExpectedReturn)?,
        variance: eval(model, x, CriterionId::Variance)?,
        neg_sharpe: eval(model, x, CriterionId::NegSharpe)?,
    })
}

/// Checks the pseudoconvexity implication at one ordered pair:
/// `f(x2) < f(x1)` must force `<grad f(x1), x2 - x1> < 0`. Returns true
/// when the implication holds (vacuously when `f(x2) >= f(x1)`).
///
/// This is a randomized-testing probe, never used inside the solver.
pub fn pseudoconvexity_witness(
    model: &MarketModel,
    c: CriterionId,
    x1: &PortfolioWeights,
    x2: &PortfolioWeights,
) -> Result<bool> {
    let f1 = eval(model, x1, c)?;
    let f2 = eval(model, x2, c)?;
    if f2 >= f1 {
        return Ok(true);
    }
    let g1 = grad(model, x1, c)?;
    let inner = g1.dot(&(x2.as_vector() - x1.as_vector()));
    Ok(inner < 0.0)
}

fn quadratic_form(model: &MarketModel, x: &DVector<f64>) -> f64 {
    (model.covariance() * x).dot(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::MarketModel;
    use approx::assert_relative_eq;

    fn diag_model(diag: &[f64], means: &[f64], rf: f64) -> MarketModel {
        let n = diag.len();
        let mut q = nalgebra::DMatrix::zeros(n, n);
        for (k, d) in diag.iter().enumerate() {
            q[(k, k)] = *d;
        }
        MarketModel::new(
            (0..n).map(|k| format!("A{k}")).collect(),
            DVector::from_row_slice(means),
            q,
            rf,
        )
        .unwrap()
    }

    #[test]
    fn neg_expected_return_is_linear_with_constant_gradient() {
        let m = diag_model(&[1.0, 1.0], &[0.02, 0.05], 0.0);
        let x = PortfolioWeights::new(vec![0.3, 0.7]).unwrap();
        let val = eval(&m, &x, CriterionId::NegExpectedReturn).unwrap();
        assert_relative_eq!(val, -(0.3 * 0.02 + 0.7 * 0.05), epsilon = 1e-15);
        let g = grad(&m, &x, CriterionId::NegExpectedReturn).unwrap();
        assert_eq!(g.as_slice(), &[-0.02, -0.05]);
    }

    #[test]
    fn variance_gradient_identity_matrix() {
        let m = diag_model(&[1.0, 1.0], &[0.0, 0.0], 0.0);
        let x = PortfolioWeights::new(vec![0.5, 0.5]).unwrap();
        let g = grad(&m, &x, CriterionId::Variance).unwrap();
        assert_relative_eq!(g[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(g[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_variance_rejected_for_sharpe() {
        // A perfectly anti-correlated pair has V = 0 at the midpoint. The
        // model itself passes the invariants (diagonals positive, PSD).
        let q = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        let m = MarketModel::new(
            vec!["A".into(), "B".into()],
            DVector::from_row_slice(&[0.02, 0.03]),
            q,
            0.0,
        )
        .unwrap();
        let x = PortfolioWeights::new(vec![0.5, 0.5]).unwrap();
        let err = eval(&m, &x, CriterionId::NegSharpe).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance(_)));
        let err = grad(&m, &x, CriterionId::NegSharpe).unwrap_err();
        assert!(matches!(err, Error::ZeroVariance(_)));
    }

    #[test]
    fn witness_is_vacuous_on_equal_points() {
        let m = diag_model(&[0.5, 0.7, 0.9], &[0.01, 0.02, 0.03], 0.001);
        let x = PortfolioWeights::uniform(3);
        for c in CriterionId::ALL {
            assert!(pseudoconvexity_witness(&m, c, &x, &x).unwrap());
        }
    }

    #[test]
    fn weights_invariants_enforced() {
        assert!(PortfolioWeights::new(vec![1.0]).is_err());
        assert!(PortfolioWeights::new(vec![0.6, 0.6]).is_err());
        assert!(PortfolioWeights::new(vec![-0.1, 1.1]).is_err());
        assert!(PortfolioWeights::new(vec![0.5, f64::NAN]).is_err());
        assert!(PortfolioWeights::new(vec![0.25; 4]).is_ok());
    }

    #[test]
    fn criterion_ordering_is_fixed() {
        assert_eq!(CriterionId::NegExpectedReturn.index(), 0);
        assert_eq!(CriterionId::Variance.index(), 1);
        assert_eq!(CriterionId::NegSharpe.index(), 2);
    }
}
