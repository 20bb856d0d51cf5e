//! Intuitionistic fuzzy goals and the min-max scalarization.
//!
//! Each criterion gets a membership / non-membership pair over its
//! aspiration interval `[y1, y0]`: membership falls monotonically from 1
//! at `y1` to 0 at `y0`, non-membership rises from 0 to 1, and the pair
//! must satisfy `0 <= mu + nu <= 1` everywhere. Setting `eta = 1 - mu`
//! turns the goal-attainment problem into minimizing the pointwise maximum
//! `Phi(x) = max_j component_j(x)` over all eta and nu components, a single
//! scalar program over the simplex.
//!
//! Shapes are parameterized by the normalized position
//! `s = (F_i(x) - y1) / (y0 - y1)`, clamped to `[0, 1]` outside the
//! interval, so `Phi` only depends on where a criterion value sits inside
//! its aspiration interval.

use nalgebra::DVector;
use serde::Serialize;

use crate::bounds::AspirationBounds;
use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::objectives::{self, CriterionId, PortfolioWeights};
use crate::solver::{self, SolveReport, SolverConfig, SolverObjective};

/// Resolution of the `0 <= mu + nu <= 1` construction check.
pub const IF_GRID_POINTS: usize = 1000;

/// Numerical slack allowed by the grid check.
const IF_GRID_SLACK: f64 = 1e-12;

/// Components within this distance of the maximum count as active.
pub const ACTIVE_TOLERANCE: f64 = 1e-12;

/// Shape family of a membership or non-membership profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ShapeKind {
    /// The straight line between the endpoint values.
    Linear,
    /// Normalized exponential profile with decay/growth scale `k > 0`.
    /// Convex in `s`, hence never above the linear profile's complement.
    Exponential { scale: f64 },
    /// Piecewise-linear interior profile: knots `(s, value)` with
    /// `0 < s < 1` strictly increasing and values in `[0, 1]`, monotone in
    /// the direction the role requires.
    Table { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ShapeRole {
    Membership,
    NonMembership,
}

/// A monotone profile on the normalized aspiration interval. Membership
/// profiles run 1 -> 0, non-membership profiles 0 -> 1.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipShape {
    pub kind: ShapeKind,
    pub role: ShapeRole,
}

impl MembershipShape {
    pub fn new(kind: ShapeKind, role: ShapeRole) -> Result<Self> {
        let shape = Self { kind, role };
        shape.validate()?;
        Ok(shape)
    }

    fn validate(&self) -> Result<()> {
        match &self.kind {
            ShapeKind::Linear => Ok(()),
            ShapeKind::Exponential { scale } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(Error::BadShape(format!(
                        "exponential scale must be positive and finite, got {scale}"
                    )));
                }
                Ok(())
            }
            ShapeKind::Table { knots } => {
                let mut previous_s = 0.0;
                let mut previous_v = match self.role {
                    ShapeRole::Membership => 1.0,
                    ShapeRole::NonMembership => 0.0,
                };
                for &(s, v) in knots {
                    if !(s.is_finite() && v.is_finite()) {
                        return Err(Error::BadShape("non-finite table knot".into()));
                    }
                    if s <= previous_s || s >= 1.0 {
                        return Err(Error::BadShape(format!(
                            "table knot positions must be strictly increasing inside (0, 1); got {s}"
                        )));
                    }
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::BadShape(format!(
                            "table knot value {v} outside [0, 1]"
                        )));
                    }
                    let monotone = match self.role {
                        ShapeRole::Membership => v <= previous_v,
                        ShapeRole::NonMembership => v >= previous_v,
                    };
                    if !monotone {
                        return Err(Error::BadShape(format!(
                            "table knots must be {} for this role",
                            match self.role {
                                ShapeRole::Membership => "non-increasing",
                                ShapeRole::NonMembership => "non-decreasing",
                            }
                        )));
                    }
                    previous_s = s;
                    previous_v = v;
                }
                let end = match self.role {
                    ShapeRole::Membership => 0.0,
                    ShapeRole::NonMembership => 1.0,
                };
                let monotone = match self.role {
                    ShapeRole::Membership => end <= previous_v,
                    ShapeRole::NonMembership => end >= previous_v,
                };
                if !monotone {
                    return Err(Error::BadShape(
                        "table knots conflict with the endpoint values".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Profile value at normalized position `s`, clamped outside `[0, 1]`.
    pub fn profile(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match (&self.kind, self.role) {
            (ShapeKind::Linear, ShapeRole::Membership) => 1.0 - s,
            (ShapeKind::Linear, ShapeRole::NonMembership) => s,
            (ShapeKind::Exponential { scale }, ShapeRole::Membership) => {
                let k = *scale;
                ((-k * s).exp() - (-k).exp()) / (1.0 - (-k).exp())
            }
            (ShapeKind::Exponential { scale }, ShapeRole::NonMembership) => {
                let k = *scale;
                ((k * s).exp() - 1.0) / (k.exp() - 1.0)
            }
            (ShapeKind::Table { knots }, role) => {
                let (start, end) = match role {
                    ShapeRole::Membership => (1.0, 0.0),
                    ShapeRole::NonMembership => (0.0, 1.0),
                };
                let mut prev = (0.0, start);
                for &(ks, kv) in knots {
                    if s <= ks {
                        return lerp(prev, (ks, kv), s);
                    }
                    prev = (ks, kv);
                }
                lerp(prev, (1.0, end), s)
            }
        }
    }

    /// Derivative of the profile with respect to `s`. At the interval
    /// boundaries this is the one-sided derivative from the interior.
    pub fn profile_slope(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match (&self.kind, self.role) {
            (ShapeKind::Linear, ShapeRole::Membership) => -1.0,
            (ShapeKind::Linear, ShapeRole::NonMembership) => 1.0,
            (ShapeKind::Exponential { scale }, ShapeRole::Membership) => {
                let k = *scale;
                -k * (-k * s).exp() / (1.0 - (-k).exp())
            }
            (ShapeKind::Exponential { scale }, ShapeRole::NonMembership) => {
                let k = *scale;
                k * (k * s).exp() / (k.exp() - 1.0)
            }
            (ShapeKind::Table { knots }, role) => {
                let (start, end) = match role {
                    ShapeRole::Membership => (1.0, 0.0),
                    ShapeRole::NonMembership => (0.0, 1.0),
                };
                let mut prev = (0.0, start);
                for &(ks, kv) in knots {
                    if s <= ks {
                        return segment_slope(prev, (ks, kv));
                    }
                    prev = (ks, kv);
                }
                segment_slope(prev, (1.0, end))
            }
        }
    }
}

fn lerp(a: (f64, f64), b: (f64, f64), s: f64) -> f64 {
    if b.0 == a.0 {
        return a.1;
    }
    a.1 + (b.1 - a.1) * (s - a.0) / (b.0 - a.0)
}

fn segment_slope(a: (f64, f64), b: (f64, f64)) -> f64 {
    if b.0 == a.0 {
        0.0
    } else {
        (b.1 - a.1) / (b.0 - a.0)
    }
}

/// One criterion's intuitionistic fuzzy goal: its aspiration interval and
/// the membership / non-membership pair over it.
#[derive(Debug, Clone, Serialize)]
pub struct IFGoal {
    pub criterion: CriterionId,
    pub y1: f64,
    pub y0: f64,
    pub mu: MembershipShape,
    pub nu: MembershipShape,
}

/// Builds a goal and enforces `0 <= mu + nu <= 1` on a grid of
/// [`IF_GRID_POINTS`] positions across the aspiration interval.
pub fn make_goal(
    c: CriterionId,
    bounds: &AspirationBounds,
    mu_kind: ShapeKind,
    nu_kind: ShapeKind,
) -> Result<IFGoal> {
    let b = bounds.for_criterion(c).ok_or_else(|| Error::InvalidConfig(
        format!("no aspiration bounds computed for criterion {c}"),
    ))?;
    let mu = MembershipShape::new(mu_kind, ShapeRole::Membership)?;
    let nu = MembershipShape::new(nu_kind, ShapeRole::NonMembership)?;
    let goal = IFGoal {
        criterion: c,
        y1: b.y1,
        y0: b.y0,
        mu,
        nu,
    };
    goal.check_if_condition()?;
    Ok(goal)
}

impl IFGoal {
    /// Grid check of the intuitionistic condition; reports the worst
    /// offending point on failure.
    pub fn check_if_condition(&self) -> Result<()> {
        let mut worst: Option<(f64, f64, f64)> = None; // (violation, t, sum)
        for i in 0..IF_GRID_POINTS {
            let s = i as f64 / (IF_GRID_POINTS - 1) as f64;
            let sum = self.mu.profile(s) + self.nu.profile(s);
            let violation = (sum - 1.0).max(-sum);
            if violation > IF_GRID_SLACK && worst.is_none_or(|(w, _, _)| violation > w) {
                let t = self.y1 + s * (self.y0 - self.y1);
                worst = Some((violation, t, sum));
            }
        }
        match worst {
            Some((_, worst_t, worst_sum)) => Err(Error::IfConditionViolated { worst_t, worst_sum }),
            None => Ok(()),
        }
    }
}

/// Which half of the component list a component belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ComponentKind {
    /// `eta_i = 1 - mu_i`, composed with criterion `i`.
    Eta,
    /// `nu_i`, composed with criterion `i`.
    Nu,
}

/// Value of the scalarized objective with the active component indices.
#[derive(Debug, Clone, Serialize)]
pub struct PhiValue {
    pub value: f64,
    /// All component indices within [`ACTIVE_TOLERANCE`] of the maximum,
    /// in ascending order.
    pub active: Vec<usize>,
}

/// The scalarized min-max program: components `eta_1..eta_k` followed by
/// `nu_1..nu_k` (the nu block is dropped in Chebyshev mode), each composed
/// with its criterion, maximized pointwise.
#[derive(Debug, Clone, Serialize)]
pub struct ScalarizedProblem {
    #[serde(skip)]
    model: MarketModel,
    pub goals: Vec<IFGoal>,
    include_nu: bool,
}

impl ScalarizedProblem {
    /// Full intuitionistic problem: eta and nu components.
    pub fn intuitionistic(model: MarketModel, goals: Vec<IFGoal>) -> Result<Self> {
        Self::build(model, goals, true)
    }

    /// Crisp Chebyshev baseline: eta components only, i.e. the max of the
    /// min-max-normalized criteria.
    pub fn chebyshev(model: MarketModel, goals: Vec<IFGoal>) -> Result<Self> {
        Self::build(model, goals, false)
    }

    fn build(model: MarketModel, goals: Vec<IFGoal>, include_nu: bool) -> Result<Self> {
        if goals.is_empty() {
            return Err(Error::InvalidConfig("no goals given".into()));
        }
        for (i, g) in goals.iter().enumerate() {
            g.check_if_condition()?;
            if goals[..i].iter().any(|h| h.criterion == g.criterion) {
                return Err(Error::InvalidConfig(format!(
                    "criterion {} appears twice",
                    g.criterion
                )));
            }
        }
        Ok(Self {
            model,
            goals,
            include_nu,
        })
    }

    pub fn model(&self) -> &MarketModel {
        &self.model
    }

    pub fn n_components(&self) -> usize {
        self.goals.len() * if self.include_nu { 2 } else { 1 }
    }

    /// Maps a component index to its kind and goal.
    pub fn component(&self, j: usize) -> (ComponentKind, &IFGoal) {
        let k = self.goals.len();
        if j < k {
            (ComponentKind::Eta, &self.goals[j])
        } else {
            (ComponentKind::Nu, &self.goals[j - k])
        }
    }

    fn component_from_criterion_value(&self, j: usize, value: f64) -> f64 {
        let (kind, goal) = self.component(j);
        let s = (value - goal.y1) / (goal.y0 - goal.y1);
        match kind {
            ComponentKind::Eta => 1.0 - goal.mu.profile(s),
            ComponentKind::Nu => goal.nu.profile(s),
        }
    }

    /// d(component_j)/d(F_i) at criterion value `value`: zero on the clamp
    /// plateaus, the interior one-sided slope at the interval endpoints.
    fn component_derivative(&self, j: usize, value: f64) -> f64 {
        let (kind, goal) = self.component(j);
        let width = goal.y0 - goal.y1;
        let s = (value - goal.y1) / width;
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match kind {
            ComponentKind::Eta => -goal.mu.profile_slope(s) / width,
            ComponentKind::Nu => goal.nu.profile_slope(s) / width,
        }
    }

    fn criterion_values_raw(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        self.goals
            .iter()
            .map(|g| objectives::eval_raw(&self.model, x, g.criterion))
            .collect()
    }

    fn components_raw(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        let values = self.criterion_values_raw(x)?;
        Ok((0..self.n_components())
            .map(|j| self.component_from_criterion_value(j, values[j % self.goals.len()]))
            .collect())
    }
}

/// Evaluates component `j` at a feasible portfolio; always lands in `[0, 1]`.
pub fn eval_component(p: &ScalarizedProblem, j: usize, x: &PortfolioWeights) -> Result<f64> {
    let (_, goal) = p.component(j);
    let value = objectives::eval(p.model(), x, goal.criterion)?;
    Ok(p.component_from_criterion_value(j, value))
}

/// All component values at a feasible portfolio, in component order.
pub fn component_levels(p: &ScalarizedProblem, x: &PortfolioWeights) -> Result<Vec<f64>> {
    p.components_raw(x.as_vector())
}

/// The scalarized objective `Phi(x)` and its active component set.
pub fn eval_phi(p: &ScalarizedProblem, x: &PortfolioWeights) -> Result<PhiValue> {
    phi_raw(p, x.as_vector())
}

/// `Phi` at an arbitrary finite point; used by finite-difference oracles.
pub fn eval_phi_raw(p: &ScalarizedProblem, x: &DVector<f64>) -> Result<PhiValue> {
    phi_raw(p, x)
}

fn phi_raw(p: &ScalarizedProblem, x: &DVector<f64>) -> Result<PhiValue> {
    let comps = p.components_raw(x)?;
    let value = comps.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let active = comps
        .iter()
        .enumerate()
        .filter(|(_, &c)| c >= value - ACTIVE_TOLERANCE)
        .map(|(j, _)| j)
        .collect();
    Ok(PhiValue { value, active })
}

/// A subgradient of `Phi` at `x`: the chain-rule gradient of the
/// lowest-indexed active component.
pub fn subgrad_phi(p: &ScalarizedProblem, x: &PortfolioWeights) -> Result<DVector<f64>> {
    subgrad_raw(p, x.as_vector())
}

fn subgrad_raw(p: &ScalarizedProblem, x: &DVector<f64>) -> Result<DVector<f64>> {
    let phi = phi_raw(p, x)?;
    let j = phi.active[0];
    let (_, goal) = p.component(j);
    let value = objectives::eval_raw(p.model(), x, goal.criterion)?;
    let outer = p.component_derivative(j, value);
    if outer == 0.0 {
        return Ok(DVector::zeros(x.len()));
    }
    let inner = objectives::grad_raw(p.model(), x, goal.criterion)?;
    Ok(outer * inner)
}

/// Log-sum-exp smoothing of `Phi`:
/// `tau * ln sum_j exp(component_j / tau)`, which sandwiches the true value
/// within `[Phi, Phi + tau * ln(n_components)]`. Returns the smoothed value
/// and its gradient.
pub fn smooth_phi(
    p: &ScalarizedProblem,
    x: &PortfolioWeights,
    tau: f64,
) -> Result<(f64, DVector<f64>)> {
    smooth_raw(p, x.as_vector(), tau)
}

/// Smoothed objective at an arbitrary finite point; used by
/// finite-difference oracles.
pub fn smooth_phi_raw(
    p: &ScalarizedProblem,
    x: &DVector<f64>,
    tau: f64,
) -> Result<(f64, DVector<f64>)> {
    smooth_raw(p, x, tau)
}

fn smooth_raw(p: &ScalarizedProblem, x: &DVector<f64>, tau: f64) -> Result<(f64, DVector<f64>)> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "smoothing temperature must be positive, got {tau}"
        )));
    }
    let values = p.criterion_values_raw(x)?;
    let comps: Vec<f64> = (0..p.n_components())
        .map(|j| p.component_from_criterion_value(j, values[j % p.goals.len()]))
        .collect();
    let max = comps.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let weights: Vec<f64> = comps.iter().map(|c| ((c - max) / tau).exp()).collect();
    let total: f64 = weights.iter().sum();
    let value = max + tau * total.ln();

    let mut gradient = DVector::zeros(x.len());
    let mut criterion_grads: Vec<Option<DVector<f64>>> = vec![None; p.goals.len()];
    for (j, w) in weights.iter().enumerate() {
        let softmax = w / total;
        if softmax == 0.0 {
            continue;
        }
        let i = j % p.goals.len();
        let outer = p.component_derivative(j, values[i]);
        if outer == 0.0 {
            continue;
        }
        if criterion_grads[i].is_none() {
            criterion_grads[i] =
                Some(objectives::grad_raw(p.model(), x, p.goals[i].criterion)?);
        }
        gradient += softmax * outer * criterion_grads[i].as_ref().unwrap();
    }
    Ok((value, gradient))
}

impl SolverObjective for ScalarizedProblem {
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(phi_raw(self, x)?.value)
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        subgrad_raw(self, x)
    }

    fn smoothed_gradient(&self, x: &DVector<f64>, tau: f64) -> Option<Result<DVector<f64>>> {
        Some(smooth_raw(self, x, tau).map(|(_, g)| g))
    }
}

/// Minimizes `Phi` over the simplex and enriches the report with the
/// criterion values and component levels at the solution.
pub fn solve_scalarized(p: &ScalarizedProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    let n = p.model().n_assets();
    match solver::minimize(p, cfg, None, n) {
        Ok(mut report) => {
            enrich(p, &mut report)?;
            Ok(report)
        }
        Err(Error::SolverFailure { mut report }) => {
            enrich(p, &mut report)?;
            Err(Error::SolverFailure { report })
        }
        Err(other) => Err(other),
    }
}

fn enrich(p: &ScalarizedProblem, report: &mut SolveReport) -> Result<()> {
    report.criterion_values = Some(objectives::criterion_values(p.model(), &report.x_star)?);
    report.membership_levels = Some(component_levels(p, &report.x_star)?);
    Ok(())
}
