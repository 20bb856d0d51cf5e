//! Brute-force baseline: evaluate an objective over dense simplex samples
//! to bound optima, verify that criterion values stay inside their
//! aspiration intervals, and check weak Pareto optimality of candidate
//! solutions. The oracle bounds, it does not prove.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::objectives::{self, CriterionId, PortfolioWeights};
use crate::solver::dirichlet_sample;

/// Largest number of grid points [`sample`] will enumerate.
pub const DEFAULT_GRID_CAP: usize = 10_000_000;

/// How a sample cloud is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SampleScheme {
    /// `count` Dirichlet(1) draws, deterministic for a fixed seed.
    Dirichlet { count: usize, seed: u64 },
    /// All compositions of `resolution` into `n` parts, scaled by
    /// `1/resolution`; yields `C(resolution + n - 1, n - 1)` points.
    Grid { resolution: usize },
}

/// A finite set of feasible portfolios together with its provenance.
#[derive(Debug, Clone)]
pub struct SampleCloud {
    pub scheme: SampleScheme,
    pub points: Vec<PortfolioWeights>,
}

/// Number of points a grid of the given resolution produces.
pub fn grid_size(resolution: usize, n: usize) -> u128 {
    // C(resolution + n - 1, n - 1)
    let mut result: u128 = 1;
    let k = (n - 1) as u128;
    let m = resolution as u128;
    for i in 1..=k {
        result = result * (m + i) / i;
    }
    result
}

/// Generates a sample cloud. Grid requests larger than `cap` (or
/// [`DEFAULT_GRID_CAP`] if `None`) fail with [`Error::ResourceLimit`].
pub fn sample(scheme: SampleScheme, n: usize, cap: Option<usize>) -> Result<SampleCloud> {
    let cap = cap.unwrap_or(DEFAULT_GRID_CAP);
    let points = match scheme {
        SampleScheme::Dirichlet { count, seed } => {
            if count == 0 {
                return Err(Error::InvalidConfig("sample count must be >= 1".into()));
            }
            if count > cap {
                return Err(Error::ResourceLimit {
                    requested: count as u128,
                    cap,
                });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| dirichlet_sample(n, &mut rng)).collect()
        }
        SampleScheme::Grid { resolution } => {
            if resolution == 0 {
                return Err(Error::InvalidConfig("grid resolution must be >= 1".into()));
            }
            let size = grid_size(resolution, n);
            if size > cap as u128 {
                return Err(Error::ResourceLimit {
                    requested: size,
                    cap,
                });
            }
            enumerate_grid(resolution, n)
        }
    };
    Ok(SampleCloud { scheme, points })
}

/// Lexicographic enumeration of all compositions of `m` into `n` parts.
fn enumerate_grid(m: usize, n: usize) -> Vec<PortfolioWeights> {
    let mut points = Vec::new();
    let mut counts = vec![0usize; n];
    counts[0] = m;
    loop {
        let v = DVector::from_iterator(n, counts.iter().map(|&k| k as f64 / m as f64));
        points.push(PortfolioWeights::from_projection(v));

        // Next composition: move one unit from the rightmost positive
        // entry before the tail into the next slot, folding the tail back.
        let Some(pivot) = (0..n - 1).rev().find(|&i| counts[i] > 0) else {
            break;
        };
        let tail = counts[n - 1];
        counts[pivot] -= 1;
        counts[pivot + 1] = tail + 1;
        if pivot + 1 != n - 1 {
            counts[n - 1] = 0;
        }
        for c in counts.iter_mut().take(n - 1).skip(pivot + 2) {
            *c = 0;
        }
    }
    points
}

/// Best point found by exhaustive evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct OracleMin {
    pub x_best: PortfolioWeights,
    pub value: f64,
    pub evaluated: usize,
    /// Points where the objective failed to evaluate (for example zero
    /// variance under the Sharpe ratio); they are skipped and counted.
    pub skipped: usize,
}

/// Exhaustively evaluates `obj` over the cloud. Ties are broken by the
/// first (lowest) point index, independent of evaluation order.
pub fn oracle_min<F>(obj: F, cloud: &SampleCloud) -> Result<OracleMin>
where
    F: Fn(&PortfolioWeights) -> Result<f64> + Sync,
{
    if cloud.points.is_empty() {
        return Err(Error::InvalidConfig("empty sample cloud".into()));
    }
    let evaluations: Vec<Option<f64>> = cloud
        .points
        .par_iter()
        .map(|x| obj(x).ok().filter(|v| v.is_finite()))
        .collect();

    let mut skipped = 0usize;
    let mut best: Option<(f64, usize)> = None;
    for (idx, value) in evaluations.iter().enumerate() {
        match value {
            None => skipped += 1,
            Some(v) => {
                if best.is_none_or(|(bv, _)| *v < bv) {
                    best = Some((*v, idx));
                }
            }
        }
    }
    let (value, idx) = best.ok_or_else(|| {
        Error::InvalidConfig("objective failed at every cloud point".into())
    })?;
    Ok(OracleMin {
        x_best: cloud.points[idx].clone(),
        value,
        evaluated: cloud.points.len() - skipped,
        skipped,
    })
}

/// True when no cloud point strictly improves all three criteria by more
/// than `eps` simultaneously. Cloud points where a criterion cannot be
/// evaluated cannot dominate and are ignored.
pub fn check_weak_pareto(
    model: &MarketModel,
    x: &PortfolioWeights,
    cloud: &SampleCloud,
    eps: f64,
) -> Result<bool> {
    let reference: Vec<f64> = CriterionId::ALL
        .iter()
        .map(|&c| objectives::eval(model, x, c))
        .collect::<Result<_>>()?;

    let dominated = cloud.points.par_iter().any(|y| {
        CriterionId::ALL.iter().enumerate().all(|(i, &c)| {
            objectives::eval(model, y, c)
                .map(|v| v < reference[i] - eps)
                .unwrap_or(false)
        })
    });
    Ok(!dominated)
}

/// JSON-serializable record of an oracle run.
#[derive(Debug, Clone, Serialize)]
pub struct OracleFixture {
    pub scheme: String,
    pub seed: Option<u64>,
    pub objective: String,
    pub best_point: Vec<f64>,
    pub best_value: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

impl OracleFixture {
    pub fn new(cloud: &SampleCloud, objective: impl Into<String>, result: &OracleMin) -> Self {
        let (scheme, seed) = match cloud.scheme {
            SampleScheme::Dirichlet { count, seed } => (format!("dirichlet:{count}"), Some(seed)),
            SampleScheme::Grid { resolution } => (format!("grid:{resolution}"), None),
        };
        Self {
            scheme,
            seed,
            objective: objective.into(),
            best_point: result.x_best.to_vec(),
            best_value: result.value,
            evaluated: result.evaluated,
            skipped: result.skipped,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_two_by_two() {
        let cloud = sample(SampleScheme::Grid { resolution: 2 }, 2, None).unwrap();
        let pts: Vec<Vec<f64>> = cloud.points.iter().map(|p| p.to_vec()).collect();
        assert_eq!(pts, vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0]]);
    }

    #[test]
    fn grid_count_formula() {
        // C(12, 2) = 66
        let cloud = sample(SampleScheme::Grid { resolution: 10 }, 3, None).unwrap();
        assert_eq!(cloud.points.len(), 66);
        assert_eq!(grid_size(10, 3), 66);
        assert_eq!(grid_size(12, 7), 18_564);
        for p in &cloud.points {
            for w in p.as_slice() {
                let scaled = w * 10.0;
                assert!((scaled - scaled.round()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn grid_cap_enforced() {
        let err = sample(SampleScheme::Grid { resolution: 100 }, 10, Some(1000)).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { .. }));
    }

    #[test]
    fn dirichlet_deterministic_and_feasible() {
        let a = sample(SampleScheme::Dirichlet { count: 500, seed: 7 }, 5, None).unwrap();
        let b = sample(SampleScheme::Dirichlet { count: 500, seed: 7 }, 5, None).unwrap();
        for (x, y) in a.points.iter().zip(b.points.iter()) {
            assert_eq!(x.as_slice(), y.as_slice());
        }
        for p in &a.points {
            assert!(PortfolioWeights::new(p.to_vec()).is_ok());
        }
    }

    #[test]
    fn prefix_property_makes_min_monotone() {
        let small = sample(SampleScheme::Dirichlet { count: 1_000, seed: 3 }, 4, None).unwrap();
        let large = sample(SampleScheme::Dirichlet { count: 10_000, seed: 3 }, 4, None).unwrap();
        for (x, y) in small.points.iter().zip(large.points.iter()) {
            assert_eq!(x.as_slice(), y.as_slice());
        }
        let obj = |x: &PortfolioWeights| Ok(x.as_slice()[0]);
        let m_small = oracle_min(obj, &small).unwrap();
        let m_large = oracle_min(obj, &large).unwrap();
        assert!(m_large.value <= m_small.value);
    }

    #[test]
    fn ties_break_to_first_index() {
        let cloud = sample(SampleScheme::Grid { resolution: 2 }, 2, None).unwrap();
        let m = oracle_min(|_x| Ok(1.0), &cloud).unwrap();
        assert_eq!(m.x_best.as_slice(), &[1.0, 0.0]);
        assert_eq!(m.evaluated, 3);
        assert_eq!(m.skipped, 0);
    }

    #[test]
    fn failed_points_are_skipped_and_counted() {
        let cloud = sample(SampleScheme::Grid { resolution: 2 }, 2, None).unwrap();
        let m = oracle_min(
            |x| {
                if x.as_slice()[0] == 0.5 {
                    Err(Error::ZeroVariance(0.0))
                } else {
                    Ok(x.as_slice()[0])
                }
            },
            &cloud,
        )
        .unwrap();
        assert_eq!(m.skipped, 1);
        assert_eq!(m.evaluated, 2);
        assert_eq!(m.value, 0.0);
    }
}
