//! Projected (sub)gradient descent over the unit simplex with Armijo
//! backtracking and multi-start.
//!
//! Each start iterates `x <- project_simplex(x - alpha * d)`. The direction
//! `d` is the gradient for smooth objectives; objectives that expose a
//! smoothed surrogate are run through a temperature schedule first and
//! finished with a subgradient polish phase. The Armijo test is always
//! evaluated on the true objective, so accepted iterates are strictly
//! decreasing in every phase regardless of which direction produced them.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::objectives::{CriterionValues, PortfolioWeights};

/// Smallest step length probed by the backtracking line search.
const MIN_STEP: f64 = 1e-16;

/// Width of the sliding window used by the objective-change tolerance.
const OBJ_WINDOW: usize = 100;

/// Tuning knobs for [`minimize`]. The defaults solve desk-scale instances
/// (n of order 10) in well under a second.
#[derive(Debug, Clone, Serialize)]
pub struct SolverConfig {
    /// Iteration cap per descent phase.
    pub max_iters: usize,
    /// Stop when the l-infinity movement of an accepted step falls below this.
    pub tol_step: f64,
    /// Stop when the objective improved less than this over the last
    /// 100 accepted iterations.
    pub tol_obj: f64,
    /// Step length the line search starts from on every iteration.
    pub initial_step: f64,
    /// Multiplicative backtracking factor, in (0, 1).
    pub backtrack_factor: f64,
    /// Armijo sufficient-decrease constant, in (0, 1).
    pub armijo_c: f64,
    /// Number of starting points.
    pub n_starts: usize,
    /// First smoothing temperature; halved on every restart.
    pub tau_start: f64,
    /// The schedule stops once the temperature drops below this.
    pub tau_end: f64,
    /// Seed for the random starting points.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 50_000,
            tol_step: 1e-10,
            tol_obj: 1e-12,
            initial_step: 1.0,
            backtrack_factor: 0.5,
            armijo_c: 1e-4,
            n_starts: 16,
            tau_start: 1e-2,
            tau_end: 1e-6,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be positive".into()));
        }
        if self.n_starts == 0 {
            return Err(Error::InvalidConfig("n_starts must be positive".into()));
        }
        for (name, value) in [
            ("tol_step", self.tol_step),
            ("tol_obj", self.tol_obj),
            ("initial_step", self.initial_step),
            ("tau_start", self.tau_start),
            ("tau_end", self.tau_end),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        for (name, value) in [
            ("backtrack_factor", self.backtrack_factor),
            ("armijo_c", self.armijo_c),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must be in (0, 1)")));
            }
        }
        Ok(())
    }

    fn smoothing_schedule(&self) -> Vec<f64> {
        let mut taus = Vec::new();
        let mut tau = self.tau_start;
        while tau >= self.tau_end {
            taus.push(tau);
            tau *= 0.5;
        }
        taus
    }
}

/// An objective the solver can minimize over the simplex: a value and a
/// descent direction, plus an optional smoothed surrogate direction.
pub trait SolverObjective: Sync {
    fn value(&self, x: &DVector<f64>) -> Result<f64>;

    /// Gradient (or a subgradient at kinks) of the true objective.
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    /// Gradient of a smoothed surrogate at temperature `tau`. Objectives
    /// returning `None` are treated as smooth and skip the schedule.
    fn smoothed_gradient(&self, _x: &DVector<f64>, _tau: f64) -> Option<Result<DVector<f64>>> {
        None
    }
}

/// Why a descent run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    /// Accepted step moved less than `tol_step`.
    StepTolerance,
    /// Objective change over the trailing window fell below `tol_obj`.
    ObjectiveTolerance,
    /// No Armijo step exists above the minimum step length: the iterate is
    /// (numerically) stationary.
    Stationary,
    /// Iteration cap reached.
    MaxIters,
    /// The objective could not be evaluated at the starting point.
    FailedStart,
}

/// Per-start outcome recorded in the report.
#[derive(Debug, Clone, Serialize)]
pub struct StartTrajectory {
    pub start: Vec<f64>,
    pub iterations: usize,
    pub final_value: f64,
    pub termination: Termination,
}

impl StartTrajectory {
    pub fn converged(&self) -> bool {
        matches!(
            self.termination,
            Termination::StepTolerance | Termination::ObjectiveTolerance | Termination::Stationary
        )
    }
}

/// Result of a multi-start minimization: the best point found, its true
/// objective value and one trajectory per start.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub x_star: PortfolioWeights,
    pub objective: f64,
    pub trajectories: Vec<StartTrajectory>,
    /// Criterion values at `x_star`; filled by pipelines that know the model.
    pub criterion_values: Option<CriterionValues>,
    /// Scalarized component values at `x_star`; filled by the fuzzy pipeline.
    pub membership_levels: Option<Vec<f64>>,
    pub converged: bool,
}

/// Euclidean projection onto the unit simplex by the sort-and-threshold
/// method: sort descending, find the largest prefix whose shifted values
/// stay positive, subtract the resulting threshold and clip at zero.
pub fn project_simplex(v: &DVector<f64>) -> Result<PortfolioWeights> {
    if v.len() < 2 {
        return Err(Error::InvalidWeights(format!(
            "need at least 2 coordinates, got {}",
            v.len()
        )));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFiniteInput("projection input"));
    }
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());

    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    let projected = v.map(|x| (x - theta).max(0.0));
    Ok(PortfolioWeights::from_projection(projected))
}

/// Deterministic starting points: the uniform portfolio, every vertex pulled
/// `1e-3` toward the uniform point, then Dirichlet(1) samples for the rest.
/// Truncated front-to-back when `n_starts` is smaller than `1 + n`.
pub fn default_starts(n: usize, n_starts: usize, seed: u64) -> Vec<PortfolioWeights> {
    let mut starts = Vec::with_capacity(n_starts);
    starts.push(PortfolioWeights::uniform(n));
    let pull = 1e-3;
    for k in 0..n {
        if starts.len() == n_starts {
            return starts;
        }
        let mut v = DVector::from_element(n, pull / n as f64);
        v[k] += 1.0 - pull;
        starts.push(PortfolioWeights::from_projection(v));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while starts.len() < n_starts {
        starts.push(dirichlet_sample(n, &mut rng));
    }
    starts
}

/// One Dirichlet(1) draw: exponential variates normalized to the simplex.
pub(crate) fn dirichlet_sample(n: usize, rng: &mut ChaCha8Rng) -> PortfolioWeights {
    loop {
        let mut v = DVector::zeros(n);
        let mut total = 0.0;
        for e in v.iter_mut() {
            let u: f64 = rng.gen();
            *e = -(1.0 - u).ln();
            total += *e;
        }
        if total > 0.0 {
            return PortfolioWeights::from_projection(v / total);
        }
    }
}

/// Minimizes `obj` over the simplex from multiple starts and reports the
/// best. `starts` overrides [`default_starts`] when given. Returns
/// [`Error::SolverFailure`] (report attached) only when every start
/// exhausted its iteration cap without meeting a tolerance.
pub fn minimize(
    obj: &dyn SolverObjective,
    cfg: &SolverConfig,
    starts: Option<&[PortfolioWeights]>,
    n: usize,
) -> Result<SolveReport> {
    cfg.validate()?;
    let owned;
    let starts: &[PortfolioWeights] = match starts {
        Some(s) if !s.is_empty() => s,
        _ => {
            owned = default_starts(n, cfg.n_starts, cfg.seed);
            &owned
        }
    };

    let outcomes: Vec<StartOutcome> = starts
        .par_iter()
        .map(|start| run_start(obj, cfg, start))
        .collect();

    let trajectories: Vec<StartTrajectory> = outcomes.iter().map(|o| o.trajectory.clone()).collect();

    let best = outcomes
        .iter()
        .enumerate()
        .filter(|(_, o)| o.x.is_some())
        .min_by(|(i, a), (j, b)| {
            a.trajectory
                .final_value
                .partial_cmp(&b.trajectory.final_value)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(i.cmp(j))
        });

    let Some((_, best)) = best else {
        return Err(Error::SolverFailure {
            report: Box::new(SolveReport {
                x_star: starts[0].clone(),
                objective: f64::INFINITY,
                trajectories,
                criterion_values: None,
                membership_levels: None,
                converged: false,
            }),
        });
    };

    let converged = outcomes.iter().any(|o| o.trajectory.converged());
    let report = SolveReport {
        x_star: best.x.clone().expect("filtered on is_some"),
        objective: best.trajectory.final_value,
        trajectories,
        criterion_values: None,
        membership_levels: None,
        converged,
    };
    if converged {
        Ok(report)
    } else {
        Err(Error::SolverFailure {
            report: Box::new(report),
        })
    }
}

struct StartOutcome {
    x: Option<PortfolioWeights>,
    trajectory: StartTrajectory,
}

enum Direction {
    True,
    Smoothed(f64),
}

fn run_start(obj: &dyn SolverObjective, cfg: &SolverConfig, start: &PortfolioWeights) -> StartOutcome {
    let start_vec = start.to_vec();
    let mut x = start.as_vector().clone();
    let mut fx = match obj.value(&x) {
        Ok(v) if v.is_finite() => v,
        _ => {
            return StartOutcome {
                x: None,
                trajectory: StartTrajectory {
                    start: start_vec,
                    iterations: 0,
                    final_value: f64::INFINITY,
                    termination: Termination::FailedStart,
                },
            }
        }
    };

    let smoothing = obj.smoothed_gradient(&x, cfg.tau_start).is_some();
    let mut total_iters = 0usize;

    if smoothing {
        for tau in cfg.smoothing_schedule() {
            let phase = descend_phase(obj, cfg, &mut x, &mut fx, Direction::Smoothed(tau), None);
            total_iters += phase.iterations;
        }
    }
    let polish = descend_phase(obj, cfg, &mut x, &mut fx, Direction::True, None);
    total_iters += polish.iterations;

    StartOutcome {
        x: Some(PortfolioWeights::from_projection(x)),
        trajectory: StartTrajectory {
            start: start_vec,
            iterations: total_iters,
            final_value: fx,
            termination: polish.termination,
        },
    }
}

struct PhaseResult {
    iterations: usize,
    termination: Termination,
}

/// One descent phase. `x` and `fx` are updated in place; `history`, when
/// given, records the objective at every accepted iterate.
fn descend_phase(
    obj: &dyn SolverObjective,
    cfg: &SolverConfig,
    x: &mut DVector<f64>,
    fx: &mut f64,
    direction: Direction,
    mut history: Option<&mut Vec<f64>>,
) -> PhaseResult {
    let mut window: Vec<f64> = vec![*fx];
    for iter in 0..cfg.max_iters {
        let d = match &direction {
            Direction::True => obj.gradient(x),
            Direction::Smoothed(tau) => match obj.smoothed_gradient(x, *tau) {
                Some(res) => res,
                None => obj.gradient(x),
            },
        };
        let Ok(mut d) = d else {
            return PhaseResult {
                iterations: iter,
                termination: Termination::Stationary,
            };
        };
        let norm = d.norm();
        if !norm.is_finite() {
            return PhaseResult {
                iterations: iter,
                termination: Termination::Stationary,
            };
        }
        if norm > 1.0 {
            d /= norm;
        }

        // Backtracking until the Armijo condition holds on the true
        // objective. The projection inequality makes `inner` negative
        // whenever the candidate moved, so accepted steps strictly descend.
        let mut alpha = cfg.initial_step;
        let mut accepted: Option<(DVector<f64>, f64)> = None;
        while alpha >= MIN_STEP {
            let candidate = &*x - alpha * &d;
            let Ok(projected) = project_simplex(&candidate) else {
                alpha *= cfg.backtrack_factor;
                continue;
            };
            let xn = projected.as_vector().clone();
            let inner = d.dot(&(&xn - &*x));
            if inner < 0.0 {
                if let Ok(fn_val) = obj.value(&xn) {
                    if fn_val.is_finite() && fn_val <= *fx + cfg.armijo_c * inner {
                        accepted = Some((xn, fn_val));
                        break;
                    }
                }
            }
            alpha *= cfg.backtrack_factor;
        }

        let Some((xn, fn_val)) = accepted else {
            return PhaseResult {
                iterations: iter,
                termination: Termination::Stationary,
            };
        };

        let step = (&xn - &*x).amax();
        *x = xn;
        *fx = fn_val;
        if let Some(h) = history.as_deref_mut() {
            h.push(fn_val);
        }
        window.push(fn_val);

        if step < cfg.tol_step {
            return PhaseResult {
                iterations: iter + 1,
                termination: Termination::StepTolerance,
            };
        }
        if window.len() > OBJ_WINDOW + 1 {
            let prior = window[window.len() - OBJ_WINDOW - 2];
            if prior - fn_val < cfg.tol_obj {
                return PhaseResult {
                    iterations: iter + 1,
                    termination: Termination::ObjectiveTolerance,
                };
            }
        }
    }
    PhaseResult {
        iterations: cfg.max_iters,
        termination: Termination::MaxIters,
    }
}
