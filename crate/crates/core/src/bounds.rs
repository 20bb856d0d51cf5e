//! Aspiration bounds per criterion: the best attainable value `y1 = y_min`
//! (found by descent, which is globally optimal here because every
//! criterion is convex or pseudoconvex over the simplex) and an exact
//! worst-case bound `y0 = y_max` from vertex attainment.
//!
//! Vertex attainment is exact for all three criteria: `E*` is linear, `V`
//! is convex (a convex function attains its maximum over a polytope at a
//! vertex), and the Sharpe ratio is quasiconcave so its minimum over the
//! simplex sits at a vertex, provided every mean return exceeds the
//! risk-free rate.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::objectives::{self, CriterionId, PortfolioWeights};
use crate::solver::{self, SolverConfig, SolverObjective};

/// Bounds of one criterion over the simplex, the minimizing portfolio and
/// the vertex attaining the upper bound.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionBounds {
    pub criterion: CriterionId,
    pub y_min: f64,
    pub y_max: f64,
    /// Aspiration level; always equals `y_min`.
    pub y1: f64,
    /// Reservation level; always equals `y_max`.
    pub y0: f64,
    pub minimizer: PortfolioWeights,
    /// Vertex attaining `y_min`, when the minimizer is a vertex (`E*`).
    pub min_vertex: Option<usize>,
    /// Vertex attaining `y_max`.
    pub max_vertex: usize,
}

/// Aspiration bounds for a set of criteria (two for the mean-variance
/// problem, three for the full tri-criteria problem).
#[derive(Debug, Clone, Serialize)]
pub struct AspirationBounds {
    pub criteria: Vec<CriterionBounds>,
}

impl AspirationBounds {
    pub fn for_criterion(&self, c: CriterionId) -> Option<&CriterionBounds> {
        self.criteria.iter().find(|b| b.criterion == c)
    }
}

/// Adapter exposing one criterion as a solver objective.
pub struct CriterionObjective<'a> {
    model: &'a MarketModel,
    criterion: CriterionId,
}

impl<'a> CriterionObjective<'a> {
    pub fn new(model: &'a MarketModel, criterion: CriterionId) -> Self {
        Self { model, criterion }
    }
}

impl SolverObjective for CriterionObjective<'_> {
    fn value(&self, x: &nalgebra::DVector<f64>) -> Result<f64> {
        objectives::eval_raw(self.model, x, self.criterion)
    }

    fn gradient(&self, x: &nalgebra::DVector<f64>) -> Result<nalgebra::DVector<f64>> {
        objectives::grad_raw(self.model, x, self.criterion)
    }
}

/// Minimizes one criterion over the simplex, returning the minimizer and
/// `y_min`. `E*` is solved in closed form (vertex of the largest mean
/// return, ties to the lowest index); `V` and `Sr*` run the projected
/// gradient solver from the uniform point and every perturbed vertex.
pub fn minimize_criterion(
    model: &MarketModel,
    c: CriterionId,
) -> Result<(PortfolioWeights, f64)> {
    let n = model.n_assets();
    match c {
        CriterionId::NegExpectedReturn => {
            let k = argmax(model.mean_returns().iter().copied());
            Ok((PortfolioWeights::vertex(n, k), -model.mean_returns()[k]))
        }
        CriterionId::Variance | CriterionId::NegSharpe => {
            if c == CriterionId::NegSharpe {
                ensure_sharpe_regular(model)?;
            }
            let objective = CriterionObjective::new(model, c);
            let starts = multi_starts(n);
            let cfg = SolverConfig {
                n_starts: starts.len(),
                ..SolverConfig::default()
            };
            let report = solver::minimize(&objective, &cfg, Some(&starts), n)?;
            Ok((report.x_star, report.objective))
        }
    }
}

/// Exact upper bound of one criterion over the simplex, attained at a
/// vertex. Ties go to the lowest asset index.
pub fn maximize_criterion_bound(model: &MarketModel, c: CriterionId) -> Result<f64> {
    maximizing_vertex(model, c).map(|(_, bound)| bound)
}

/// The vertex attaining the upper bound, together with the bound.
pub fn maximizing_vertex(model: &MarketModel, c: CriterionId) -> Result<(usize, f64)> {
    let n = model.n_assets();
    match c {
        CriterionId::NegExpectedReturn => {
            let k = argmin(model.mean_returns().iter().copied());
            Ok((k, -model.mean_returns()[k]))
        }
        CriterionId::Variance => {
            let k = argmax((0..n).map(|i| model.covariance()[(i, i)]));
            Ok((k, model.covariance()[(k, k)]))
        }
        CriterionId::NegSharpe => {
            ensure_sharpe_regular(model)?;
            let sharpe_at_vertex = |k: usize| {
                (model.mean_returns()[k] - model.risk_free_rate())
                    / model.covariance()[(k, k)].sqrt()
            };
            let k = argmin((0..n).map(sharpe_at_vertex));
            Ok((k, -sharpe_at_vertex(k)))
        }
    }
}

/// Assembles [`AspirationBounds`] for all three criteria.
pub fn compute_bounds(model: &MarketModel) -> Result<AspirationBounds> {
    compute_bounds_for(model, &CriterionId::ALL)
}

/// Assembles [`AspirationBounds`] for a subset of criteria. Fails with
/// [`Error::DegenerateCriterion`] when an interval collapses (`y1 >= y0`).
pub fn compute_bounds_for(
    model: &MarketModel,
    criteria: &[CriterionId],
) -> Result<AspirationBounds> {
    let mut out = Vec::with_capacity(criteria.len());
    for &c in criteria {
        let (minimizer, y_min) = minimize_criterion(model, c)?;
        let (max_vertex, y_max) = maximizing_vertex(model, c)?;
        if y_min >= y_max || !(y_min.is_finite() && y_max.is_finite()) {
            return Err(Error::DegenerateCriterion {
                criterion: c.label().to_owned(),
                message: format!("y1 = {y_min} is not strictly below y0 = {y_max}"),
            });
        }
        let min_vertex = match c {
            CriterionId::NegExpectedReturn => minimizer
                .as_slice()
                .iter()
                .position(|w| *w == 1.0),
            _ => None,
        };
        out.push(CriterionBounds {
            criterion: c,
            y_min,
            y_max,
            y1: y_min,
            y0: y_max,
            minimizer,
            min_vertex,
            max_vertex,
        });
    }
    Ok(AspirationBounds { criteria: out })
}

/// The vertex-attainment argument for the Sharpe bound needs the excess
/// return to stay positive over the whole simplex.
fn ensure_sharpe_regular(model: &MarketModel) -> Result<()> {
    let min_return = model.mean_returns().min();
    if min_return <= model.risk_free_rate() {
        return Err(Error::DegenerateCriterion {
            criterion: CriterionId::NegSharpe.label().to_owned(),
            message: format!(
                "smallest mean return {min_return} does not exceed the risk-free rate {}; \
                 the Sharpe ratio is not quasiconcave on this instance",
                model.risk_free_rate()
            ),
        });
    }
    Ok(())
}

fn multi_starts(n: usize) -> Vec<PortfolioWeights> {
    // Uniform point plus every vertex pulled into the interior.
    solver::default_starts(n, n + 1, 0)
}

fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (f64::NEG_INFINITY, 0usize);
    for (idx, v) in values.enumerate() {
        if v > best.0 {
            best = (v, idx);
        }
    }
    best.1
}

fn argmin(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (f64::INFINITY, 0usize);
    for (idx, v) in values.enumerate() {
        if v < best.0 {
            best = (v, idx);
        }
    }
    best.1
}
