//! Shared fixtures: the bundled seven-stock reference instance and its
//! published solution rows, used across the integration suites.

use ifolio::market::MarketModel;
use ifolio::objectives::PortfolioWeights;
use nalgebra::{DMatrix, DVector};

pub const N: usize = 7;

pub const MEAN_RETURNS: [f64; 7] = [0.0282, 0.0462, 0.0188, 0.0317, 0.01536, 0.0097, 0.01919];

#[rustfmt::skip]
pub const COVARIANCE: [f64; 49] = [
    0.0119,  0.0079,  0.0017,  0.0019,  0.0022, -0.0008,  0.0032,
    0.0079,  0.0157,  0.0016,  0.0013,  0.0005, -0.0026,  0.0035,
    0.0017,  0.0016,  0.0056, -0.0002,  0.0030,  0.0017, -0.0003,
    0.0019,  0.0013, -0.0002,  0.0093, -0.0007,  0.0010,  0.0024,
    0.0022,  0.0005,  0.0030, -0.0007,  0.0110,  0.0010,  0.0011,
   -0.0008, -0.0026,  0.0017,  0.0010,  0.0010,  0.0067,  0.0014,
    0.0032,  0.0035, -0.0003,  0.0024,  0.0011,  0.0014,  0.0130,
];

/// Back-solved from the reference solution rows; see the bundled model file.
pub const RISK_FREE_RATE: f64 = 0.005;

/// Published compromise solutions of the reference study: the crisp and
/// fuzzy solutions of the tri-criteria instance.
pub const REFERENCE_CRISP_MVS: [f64; 7] =
    [0.0289, 0.1147, 0.2274, 0.1857, 0.1111, 0.2654, 0.0668];
pub const REFERENCE_FUZZY_MVS: [f64; 7] =
    [0.1026, 0.3680, 0.1016, 0.1265, 0.1006, 0.1000, 0.1007];

pub fn reference_model() -> MarketModel {
    MarketModel::new(
        (1..=N).map(|k| format!("StC{k}")).collect(),
        DVector::from_row_slice(&MEAN_RETURNS),
        DMatrix::from_row_slice(N, N, &COVARIANCE),
        RISK_FREE_RATE,
    )
    .expect("reference instance satisfies the model invariants")
}

/// Normalizes a published row (printed to 4 digits) onto the simplex.
pub fn published_weights(row: &[f64; 7]) -> PortfolioWeights {
    let total: f64 = row.iter().sum();
    PortfolioWeights::new(row.iter().map(|w| w / total).collect()).unwrap()
}
