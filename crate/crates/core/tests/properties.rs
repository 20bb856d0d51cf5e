//! Property tests: model file round-trips, membership monotonicity and
//! the unit range of the scalarized objective.

mod common;

use ifolio::fuzzy::{MembershipShape, ShapeKind, ShapeRole};
use ifolio::market;
use ifolio::objectives::PortfolioWeights;
use proptest::prelude::*;

/// A positive decimal string with at most 10 significant digits.
fn decimal() -> impl Strategy<Value = String> {
    (1u64..=9_999_999_999u64, -6i32..=0i32)
        .prop_map(|(mantissa, exp)| format!("{mantissa}e{exp}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Saving a loaded model and parsing it again reproduces every numeric
    /// field bit-exactly.
    #[test]
    fn save_load_round_trip(
        m1 in decimal(),
        m2 in decimal(),
        d1 in decimal(),
        d2 in decimal(),
        rf in decimal(),
    ) {
        // Diagonally dominant 2x2 covariance: off-diagonal is a fixed
        // fraction below both diagonals, keeping the matrix PSD.
        let off = {
            let a: f64 = d1.parse().unwrap();
            let b: f64 = d2.parse().unwrap();
            // Shortest round-trip printing keeps this a valid decimal.
            format!("{}", 0.5 * a.min(b))
        };
        let text = format!(
            "[assets]\nA, B\n[mean_returns]\n{m1}, {m2}\n[covariance]\n{d1}, {off}\n{off}, {d2}\n[risk_free_rate]\n{rf}\n"
        );
        let loaded = market::load_model_str(&text).unwrap();
        let reloaded = market::load_model_str(&market::save_model(&loaded)).unwrap();
        prop_assert_eq!(loaded.labels(), reloaded.labels());
        for (a, b) in loaded
            .mean_returns()
            .iter()
            .zip(reloaded.mean_returns().iter())
        {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in loaded.covariance().iter().zip(reloaded.covariance().iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(
            loaded.risk_free_rate().to_bits(),
            reloaded.risk_free_rate().to_bits()
        );
    }

    /// Membership profiles never increase and non-membership profiles never
    /// decrease, for every shape family.
    #[test]
    fn shapes_respect_monotonicity(
        scale in 0.1f64..10.0,
        s1 in 0.0f64..1.0,
        s2 in 0.0f64..1.0,
        knot_v in 0.0f64..1.0,
    ) {
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        let shapes = [
            MembershipShape::new(ShapeKind::Linear, ShapeRole::Membership).unwrap(),
            MembershipShape::new(ShapeKind::Exponential { scale }, ShapeRole::Membership).unwrap(),
            MembershipShape::new(
                ShapeKind::Table { knots: vec![(0.5, knot_v)] },
                ShapeRole::Membership,
            )
            .unwrap(),
        ];
        for shape in &shapes {
            prop_assert!(shape.profile(lo) >= shape.profile(hi) - 1e-12);
        }
        let rising = [
            MembershipShape::new(ShapeKind::Linear, ShapeRole::NonMembership).unwrap(),
            MembershipShape::new(ShapeKind::Exponential { scale }, ShapeRole::NonMembership)
                .unwrap(),
            MembershipShape::new(
                ShapeKind::Table { knots: vec![(0.5, knot_v)] },
                ShapeRole::NonMembership,
            )
            .unwrap(),
        ];
        for shape in &rising {
            prop_assert!(shape.profile(lo) <= shape.profile(hi) + 1e-12);
        }
    }

    /// An exponential membership paired with its pointwise complement is
    /// always a valid intuitionistic pair.
    #[test]
    fn exponential_with_linear_nu_satisfies_condition(scale in 0.1f64..20.0) {
        let mu = MembershipShape::new(ShapeKind::Exponential { scale }, ShapeRole::Membership)
            .unwrap();
        let nu = MembershipShape::new(ShapeKind::Linear, ShapeRole::NonMembership).unwrap();
        for i in 0..=200 {
            let s = i as f64 / 200.0;
            let sum = mu.profile(s) + nu.profile(s);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&sum), "sum {sum} at s = {s}");
        }
    }

    /// Weights produced by normalizing positive draws always validate, and
    /// the scalarized objective stays within the unit interval on them.
    #[test]
    fn phi_range_on_random_portfolios(raw in prop::collection::vec(0.01f64..1.0, 7)) {
        let total: f64 = raw.iter().sum();
        let x = PortfolioWeights::new(raw.iter().map(|w| w / total).collect()).unwrap();

        let model = common::reference_model();
        let bounds = ifolio::bounds::compute_bounds(&model).unwrap();
        let goals = ifolio::CriterionId::ALL
            .iter()
            .map(|&c| {
                ifolio::fuzzy::make_goal(c, &bounds, ShapeKind::Linear, ShapeKind::Linear).unwrap()
            })
            .collect();
        let p = ifolio::fuzzy::ScalarizedProblem::intuitionistic(model, goals).unwrap();
        let phi = ifolio::fuzzy::eval_phi(&p, &x).unwrap();
        prop_assert!((0.0..=1.0).contains(&phi.value));
    }
}
