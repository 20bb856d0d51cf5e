//! Aspiration bounds on the reference instance, cross-checked against the
//! sampling oracle. The frozen constants below were computed by the
//! Dirichlet/grid oracle and an independent SQP solve before the solver
//! modules were written; the tests require the implementation to meet them.

mod common;

use ifolio::bounds::{self, CriterionObjective};
use ifolio::objectives::{self, CriterionId, PortfolioWeights};
use ifolio::oracle::{self, SampleScheme};
use ifolio::solver::{self, SolverConfig};

/// Long-only minimum variance of the reference instance.
const REFERENCE_MIN_VARIANCE: f64 = 0.002233681790943;
/// Long-only maximum Sharpe ratio at rf = 0.005.
const REFERENCE_MAX_SHARPE: f64 = 0.440497577220;

#[test]
fn expected_return_bounds_are_table_exact() {
    let model = common::reference_model();
    let (x, y_min) = bounds::minimize_criterion(&model, CriterionId::NegExpectedReturn).unwrap();
    assert_eq!(y_min, -0.0462);
    assert_eq!(x.as_slice()[1], 1.0);
    assert_eq!(
        bounds::maximize_criterion_bound(&model, CriterionId::NegExpectedReturn).unwrap(),
        -0.0097
    );
}

#[test]
fn variance_upper_bound_is_diagonal_maximum() {
    let model = common::reference_model();
    let (k, y_max) = bounds::maximizing_vertex(&model, CriterionId::Variance).unwrap();
    assert_eq!(k, 1);
    assert_eq!(y_max, 0.0157);
    // Vertex exactness: the bound equals the exact maximum over vertices.
    let best = (0..common::N)
        .map(|i| {
            objectives::eval(
                &model,
                &PortfolioWeights::vertex(common::N, i),
                CriterionId::Variance,
            )
            .unwrap()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(y_max, best);
}

#[test]
fn sharpe_upper_bound_enumerates_vertices() {
    let model = common::reference_model();
    let (k, y_max) = bounds::maximizing_vertex(&model, CriterionId::NegSharpe).unwrap();
    // Hand enumeration of (L_k - rf) / sqrt(Q_kk) puts the minimum on the
    // sixth stock.
    assert_eq!(k, 5);
    let expected = -(0.0097 - 0.005) / 0.0067_f64.sqrt();
    assert!((y_max - expected).abs() <= 1e-15);
    assert!((y_max - -0.05742).abs() <= 1e-5);
    // Cross-check against the exact vertex sweep.
    let worst = (0..common::N)
        .map(|i| {
            objectives::eval(
                &model,
                &PortfolioWeights::vertex(common::N, i),
                CriterionId::NegSharpe,
            )
            .unwrap()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(y_max, worst);
}

#[test]
fn minimum_variance_matches_frozen_value() {
    let model = common::reference_model();
    let (_, y_min) = bounds::minimize_criterion(&model, CriterionId::Variance).unwrap();
    assert!(
        (y_min - REFERENCE_MIN_VARIANCE).abs() <= 1e-9,
        "got {y_min}, expected {REFERENCE_MIN_VARIANCE}"
    );
}

#[test]
fn maximum_sharpe_matches_frozen_value() {
    let model = common::reference_model();
    let (x, y_min) = bounds::minimize_criterion(&model, CriterionId::NegSharpe).unwrap();
    assert!(
        (-y_min - REFERENCE_MAX_SHARPE).abs() <= 1e-8,
        "got {}, expected {REFERENCE_MAX_SHARPE}",
        -y_min
    );
    // The tangency portfolio concentrates on stocks 2..6 and drops 1 and 7.
    assert!(x.as_slice()[1] > 0.2);
    assert!(x.as_slice()[0] < 1e-6);
}

#[test]
fn variance_minimum_agrees_with_sampling_oracle() {
    let model = common::reference_model();
    let (_, y_min) = bounds::minimize_criterion(&model, CriterionId::Variance).unwrap();

    let cloud = oracle::sample(
        SampleScheme::Dirichlet {
            count: 200_000,
            seed: 42,
        },
        common::N,
        None,
    )
    .unwrap();
    let sampled = oracle::oracle_min(
        |x| objectives::eval(&model, x, CriterionId::Variance),
        &cloud,
    )
    .unwrap();
    assert!(sampled.value >= y_min - 1e-9, "oracle beat the solver");
    assert!(
        sampled.value - y_min <= 1e-4,
        "sampling should corroborate the minimum loosely: gap {}",
        sampled.value - y_min
    );
}

#[test]
fn sampled_criteria_stay_inside_bounds() {
    let model = common::reference_model();
    let all = bounds::compute_bounds(&model).unwrap();
    let cloud = oracle::sample(
        SampleScheme::Dirichlet {
            count: 10_000,
            seed: 7,
        },
        common::N,
        None,
    )
    .unwrap();
    for b in &all.criteria {
        for x in &cloud.points {
            let v = objectives::eval(&model, x, b.criterion).unwrap();
            assert!(
                v >= b.y1 - 1e-9 && v <= b.y0 + 1e-9,
                "{} = {v} escaped [{}, {}]",
                b.criterion,
                b.y1,
                b.y0
            );
        }
    }
}

#[test]
fn multistart_agrees_on_pseudoconvex_criteria() {
    let model = common::reference_model();
    for c in [CriterionId::Variance, CriterionId::NegSharpe] {
        let objective = CriterionObjective::new(&model, c);
        let cfg = SolverConfig::default();
        let report = solver::minimize(&objective, &cfg, None, common::N).unwrap();
        let finals: Vec<f64> = report
            .trajectories
            .iter()
            .filter(|t| t.converged())
            .map(|t| t.final_value)
            .collect();
        assert!(finals.len() >= 14, "most starts should converge");
        let spread = finals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - finals.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread <= 1e-6, "criterion {c}: spread {spread:e}");
    }
}

#[test]
fn grid_oracle_on_identity_covariance() {
    // On Q = I (n = 2) the variance minimum over the m = 100 grid is 0.5
    // at the midpoint.
    let model = ifolio::MarketModel::new(
        vec!["A".into(), "B".into()],
        nalgebra::DVector::from_row_slice(&[0.01, 0.02]),
        nalgebra::DMatrix::identity(2, 2),
        0.0,
    )
    .unwrap();
    let cloud = oracle::sample(SampleScheme::Grid { resolution: 100 }, 2, None).unwrap();
    let min = oracle::oracle_min(
        |x| objectives::eval(&model, x, CriterionId::Variance),
        &cloud,
    )
    .unwrap();
    assert_eq!(min.value, 0.5);
    assert_eq!(min.x_best.as_slice(), &[0.5, 0.5]);
}

#[test]
fn oracle_min_finds_expected_return_vertex() {
    let model = common::reference_model();
    let cloud = oracle::sample(SampleScheme::Grid { resolution: 4 }, common::N, None).unwrap();
    let min = oracle::oracle_min(
        |x| objectives::eval(&model, x, CriterionId::NegExpectedReturn),
        &cloud,
    )
    .unwrap();
    assert_eq!(min.value, -0.0462);
}

#[test]
fn dominated_instance_fails_weak_pareto() {
    // Asset 1 dominates asset 2 outright, so the all-in-2 vertex is
    // strictly improved by the all-in-1 vertex on every criterion.
    let model = ifolio::MarketModel::new(
        vec!["A".into(), "B".into()],
        nalgebra::DVector::from_row_slice(&[0.03, 0.01]),
        nalgebra::DMatrix::from_row_slice(2, 2, &[0.01, 0.0, 0.0, 0.02]),
        0.005,
    )
    .unwrap();
    let cloud = oracle::sample(SampleScheme::Grid { resolution: 10 }, 2, None).unwrap();
    let dominated = PortfolioWeights::vertex(2, 1);
    assert!(!oracle::check_weak_pareto(&model, &dominated, &cloud, 1e-9).unwrap());
    // With an infinite slack nothing dominates.
    assert!(oracle::check_weak_pareto(&model, &dominated, &cloud, f64::INFINITY).unwrap());
}

#[test]
fn variance_minimizer_is_weakly_pareto_optimal() {
    let model = common::reference_model();
    let (x, _) = bounds::minimize_criterion(&model, CriterionId::Variance).unwrap();
    let cloud = oracle::sample(
        SampleScheme::Dirichlet {
            count: 50_000,
            seed: 11,
        },
        common::N,
        None,
    )
    .unwrap();
    assert!(oracle::check_weak_pareto(&model, &x, &cloud, 1e-9).unwrap());
}
