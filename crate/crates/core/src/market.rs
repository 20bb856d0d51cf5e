//! Market model construction: expected returns, covariance matrix and the
//! risk-free rate, either loaded from a model file or estimated from a
//! return-series CSV.
//!
//! Model file format (UTF-8, `#` starts a comment):
//!
//! ```text
//! [assets]
//! StC1, StC2
//!
//! [mean_returns]
//! 0.02, 0.031
//!
//! [covariance]
//! 0.010, 0.002
//! 0.002, 0.012
//!
//! [risk_free_rate]
//! 0.005
//! ```

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Maximum tolerated asymmetry `|Q[i][k] - Q[k][i]|` in a covariance matrix.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// A covariance matrix is accepted as positive semidefinite when
/// `lambda_min >= -PSD_TOLERANCE * lambda_max`.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Immutable market data: asset labels, per-period mean returns, return
/// covariance and the risk-free rate. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct MarketModel {
    labels: Vec<String>,
    mean_returns: DVector<f64>,
    covariance: DMatrix<f64>,
    risk_free_rate: f64,
    repaired: bool,
}

impl MarketModel {
    /// Validates every model invariant: `n >= 2`, matching dimensions,
    /// finite entries, symmetric covariance (within [`SYMMETRY_TOLERANCE`]),
    /// strictly positive diagonal and near positive semidefiniteness.
    pub fn new(
        labels: Vec<String>,
        mean_returns: DVector<f64>,
        covariance: DMatrix<f64>,
        risk_free_rate: f64,
    ) -> Result<Self> {
        let model = Self {
            labels,
            mean_returns,
            covariance,
            risk_free_rate,
            repaired: false,
        };
        model.check_invariants()?;
        Ok(model)
    }

    fn check_invariants(&self) -> Result<()> {
        let n = self.mean_returns.len();
        if n < 2 {
            return Err(Error::InvariantViolation(format!(
                "asset count: need n >= 2, got {n}"
            )));
        }
        if self.labels.len() != n {
            return Err(Error::DimensionMismatch {
                context: "asset labels",
                expected: n,
                actual: self.labels.len(),
            });
        }
        if self.covariance.nrows() != n || self.covariance.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "covariance matrix",
                expected: n,
                actual: self.covariance.nrows().max(self.covariance.ncols()),
            });
        }
        if self.mean_returns.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("mean returns"));
        }
        if self.covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("covariance matrix"));
        }
        if !self.risk_free_rate.is_finite() {
            return Err(Error::NonFiniteInput("risk-free rate"));
        }
        for i in 0..n {
            for k in (i + 1)..n {
                let gap = (self.covariance[(i, k)] - self.covariance[(k, i)]).abs();
                if gap > SYMMETRY_TOLERANCE {
                    return Err(Error::InvariantViolation(format!(
                        "symmetry: |Q[{i}][{k}] - Q[{k}][{i}]| = {gap:e} > {SYMMETRY_TOLERANCE:e}"
                    )));
                }
            }
        }
        for k in 0..n {
            if self.covariance[(k, k)] <= 0.0 {
                return Err(Error::InvariantViolation(format!(
                    "diagonal positivity: Q[{k}][{k}] = {} must be > 0",
                    self.covariance[(k, k)]
                )));
            }
        }
        let eigenvalues = self.covariance.clone().symmetric_eigenvalues();
        let lambda_min = eigenvalues.min();
        let lambda_max = eigenvalues.max();
        if lambda_min < -PSD_TOLERANCE * lambda_max {
            return Err(Error::InvariantViolation(format!(
                "positive semidefiniteness: lambda_min = {lambda_min:e} < -{PSD_TOLERANCE:e} * lambda_max ({lambda_max:e})"
            )));
        }
        Ok(())
    }

    pub fn n_assets(&self) -> usize {
        self.mean_returns.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn mean_returns(&self) -> &DVector<f64> {
        &self.mean_returns
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn risk_free_rate(&self) -> f64 {
        self.risk_free_rate
    }

    /// True when the sample covariance needed an eigenvalue repair during
    /// estimation. Loaded models are never repaired.
    pub fn was_repaired(&self) -> bool {
        self.repaired
    }
}

/// A `T x n` matrix of per-period realized returns.
#[derive(Debug, Clone)]
pub struct ReturnSeries {
    labels: Vec<String>,
    observations: DMatrix<f64>,
}

impl ReturnSeries {
    pub fn new(labels: Vec<String>, observations: DMatrix<f64>) -> Result<Self> {
        if observations.nrows() < 2 {
            return Err(Error::EmptySeries(observations.nrows()));
        }
        if labels.len() != observations.ncols() {
            return Err(Error::DimensionMismatch {
                context: "return series labels",
                expected: observations.ncols(),
                actual: labels.len(),
            });
        }
        if observations.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("return series"));
        }
        Ok(Self {
            labels,
            observations,
        })
    }

    /// Parses a CSV with a header row of asset labels and one row of
    /// decimal returns per period.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let labels: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .iter()
            .map(str::to_owned)
            .collect();
        let n = labels.len();
        let mut rows: Vec<f64> = Vec::new();
        let mut t = 0usize;
        for (idx, record) in reader.records().enumerate() {
            let line = idx + 2;
            let record = record.map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            if record.len() != n {
                return Err(Error::DimensionMismatch {
                    context: "return series row",
                    expected: n,
                    actual: record.len(),
                });
            }
            for field in record.iter() {
                let value: f64 = field.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("invalid decimal {field:?}"),
                })?;
                rows.push(value);
            }
            t += 1;
        }
        Self::new(labels, DMatrix::from_row_slice(t.max(1), n, &rows))
    }

    pub fn from_csv_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    pub fn n_periods(&self) -> usize {
        self.observations.nrows()
    }

    pub fn n_assets(&self) -> usize {
        self.observations.ncols()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn observations(&self) -> &DMatrix<f64> {
        &self.observations
    }
}

/// Estimates a market model from a return series: column means and the
/// sample covariance with divisor `T - 1`. A column with zero variance is
/// rejected as [`Error::DegenerateAsset`]. If rounding pushes the sample
/// covariance slightly indefinite, negative eigenvalues are clipped to zero
/// and the repair is recorded on the model.
pub fn estimate_model(series: &ReturnSeries, risk_free_rate: f64) -> Result<MarketModel> {
    if !risk_free_rate.is_finite() {
        return Err(Error::NonFiniteInput("risk-free rate"));
    }
    let t = series.n_periods();
    let n = series.n_assets();
    let obs = series.observations();

    let mut means = DVector::zeros(n);
    for k in 0..n {
        means[k] = obs.column(k).sum() / t as f64;
    }

    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for k in i..n {
            let mut acc = 0.0;
            for row in 0..t {
                acc += (obs[(row, i)] - means[i]) * (obs[(row, k)] - means[k]);
            }
            let value = acc / (t as f64 - 1.0);
            cov[(i, k)] = value;
            cov[(k, i)] = value;
        }
    }

    for k in 0..n {
        if cov[(k, k)] <= 0.0 {
            return Err(Error::DegenerateAsset {
                label: series.labels()[k].clone(),
            });
        }
    }

    // Sample covariance is symmetric by construction; the eigenvalue floor
    // only engages when rounding makes it marginally indefinite.
    let eig = cov.clone().symmetric_eigen();
    let mut repaired = false;
    let cov = if eig.eigenvalues.min() < 0.0 {
        repaired = true;
        let mut clipped = eig.eigenvalues.clone();
        for v in clipped.iter_mut() {
            *v = v.max(0.0);
        }
        let rebuilt =
            &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        (&rebuilt + rebuilt.transpose()) * 0.5
    } else {
        cov
    };

    let mut model = MarketModel::new(series.labels().to_vec(), means, cov, risk_free_rate)?;
    model.repaired = repaired;
    Ok(model)
}

/// Parses the sectioned model file format.
pub fn load_model_str(text: &str) -> Result<MarketModel> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Assets,
        MeanReturns,
        Covariance,
        RiskFreeRate,
    }

    let mut section = Section::None;
    let mut labels: Vec<String> = Vec::new();
    let mut means: Vec<f64> = Vec::new();
    let mut cov_rows: Vec<Vec<f64>> = Vec::new();
    let mut rate: Option<f64> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = match name.trim() {
                "assets" => Section::Assets,
                "mean_returns" => Section::MeanReturns,
                "covariance" => Section::Covariance,
                "risk_free_rate" => Section::RiskFreeRate,
                other => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("unknown section [{other}]"),
                    })
                }
            };
            continue;
        }
        match section {
            Section::None => {
                return Err(Error::Parse {
                    line: line_no,
                    message: "content before first section header".into(),
                })
            }
            Section::Assets => {
                labels.extend(line.split(',').map(|s| s.trim().to_owned()));
            }
            Section::MeanReturns => {
                means.extend(parse_decimals(line, line_no)?);
            }
            Section::Covariance => {
                cov_rows.push(parse_decimals(line, line_no)?);
            }
            Section::RiskFreeRate => {
                if rate.is_some() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "risk_free_rate given more than once".into(),
                    });
                }
                let values = parse_decimals(line, line_no)?;
                if values.len() != 1 {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "risk_free_rate must be a single decimal".into(),
                    });
                }
                rate = Some(values[0]);
            }
        }
    }

    let n = labels.len();
    if n == 0 {
        return Err(Error::Parse {
            line: 0,
            message: "missing [assets] section".into(),
        });
    }
    if means.len() != n {
        return Err(Error::DimensionMismatch {
            context: "mean_returns",
            expected: n,
            actual: means.len(),
        });
    }
    if cov_rows.len() != n {
        return Err(Error::DimensionMismatch {
            context: "covariance rows",
            expected: n,
            actual: cov_rows.len(),
        });
    }
    for row in &cov_rows {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                context: "covariance columns",
                expected: n,
                actual: row.len(),
            });
        }
    }
    let rate = rate.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing [risk_free_rate] section".into(),
    })?;

    let flat: Vec<f64> = cov_rows.into_iter().flatten().collect();
    MarketModel::new(
        labels,
        DVector::from_vec(means),
        DMatrix::from_row_slice(n, n, &flat),
        rate,
    )
}

pub fn load_model(path: impl AsRef<std::path::Path>) -> Result<MarketModel> {
    load_model_str(&std::fs::read_to_string(path)?)
}

/// Renders a model back into the file format. Numbers are printed with the
/// shortest representation that parses back to the identical `f64`, so a
/// save/load cycle is bit-exact.
pub fn save_model(model: &MarketModel) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    out.push_str("[assets]\n");
    out.push_str(&model.labels().join(", "));
    out.push_str("\n\n[mean_returns]\n");
    let means: Vec<String> = model.mean_returns().iter().map(f64::to_string).collect();
    out.push_str(&means.join(", "));
    out.push_str("\n\n[covariance]\n");
    for i in 0..model.n_assets() {
        let row: Vec<String> = model
            .covariance()
            .row(i)
            .iter()
            .map(f64::to_string)
            .collect();
        out.push_str(&row.join(", "));
        out.push('\n');
    }
    let _ = write!(out, "\n[risk_free_rate]\n{}\n", model.risk_free_rate());
    out
}

pub fn save_model_to(path: impl AsRef<std::path::Path>, model: &MarketModel) -> Result<()> {
    Ok(std::fs::write(path, save_model(model))?)
}

fn parse_decimals(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|field| {
            let field = field.trim();
            field.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid decimal {field:?}"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn series(rows: &[&[f64]], labels: &[&str]) -> ReturnSeries {
        let t = rows.len();
        let n = labels.len();
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        ReturnSeries::new(
            labels.iter().map(|s| s.to_string()).collect(),
            DMatrix::from_row_slice(t, n, &flat),
        )
        .unwrap()
    }

    #[test]
    fn sample_moments_match_hand_computation() {
        // Means (0.02, 0.02); asset B is constant so its variance is zero.
        let s = series(&[&[0.01, 0.02], &[0.03, 0.02]], &["A", "B"]);
        let err = estimate_model(&s, 0.001).unwrap_err();
        match err {
            Error::DegenerateAsset { label } => assert_eq!(label, "B"),
            other => panic!("expected DegenerateAsset, got {other:?}"),
        }
    }

    #[test]
    fn constant_columns_are_degenerate() {
        let s = series(&[&[0.01, 0.05], &[0.01, 0.02], &[0.01, 0.04]], &["A", "B"]);
        assert!(matches!(
            estimate_model(&s, 0.0),
            Err(Error::DegenerateAsset { .. })
        ));
    }

    #[test]
    fn estimator_shape_and_values() {
        let s = series(
            &[&[0.01, 0.04], &[0.03, 0.00], &[0.02, 0.02]],
            &["A", "B"],
        );
        let m = estimate_model(&s, 0.0).unwrap();
        assert_eq!(m.n_assets(), 2);
        assert_relative_eq!(m.mean_returns()[0], 0.02, epsilon = 1e-15);
        assert_relative_eq!(m.mean_returns()[1], 0.02, epsilon = 1e-15);
        // var(A) = ((-0.01)^2 + 0.01^2 + 0) / 2 = 1e-4
        assert_relative_eq!(m.covariance()[(0, 0)], 1e-4, epsilon = 1e-18);
        assert_relative_eq!(m.covariance()[(1, 1)], 4e-4, epsilon = 1e-18);
        // cov(A,B) = (-0.01*0.02 + 0.01*(-0.02) + 0) / 2 = -2e-4
        assert_relative_eq!(m.covariance()[(0, 1)], -2e-4, epsilon = 1e-18);
        assert_eq!(m.covariance()[(0, 1)], m.covariance()[(1, 0)]);
        assert!(!m.was_repaired());
    }

    #[test]
    fn short_series_rejected() {
        let r = ReturnSeries::new(
            vec!["A".into()],
            DMatrix::from_row_slice(1, 1, &[0.01]),
        );
        assert!(matches!(r, Err(Error::EmptySeries(1))));
    }

    #[test]
    fn estimate_is_permutation_equivariant() {
        let s = series(
            &[
                &[0.010, 0.040, -0.02],
                &[0.030, 0.000, 0.01],
                &[0.020, 0.025, 0.04],
                &[-0.01, 0.015, 0.00],
            ],
            &["A", "B", "C"],
        );
        let m = estimate_model(&s, 0.0).unwrap();

        // Permute columns (2, 0, 1) and re-estimate.
        let perm = [2usize, 0, 1];
        let obs = s.observations();
        let mut permuted = DMatrix::zeros(obs.nrows(), obs.ncols());
        for (new_col, &old_col) in perm.iter().enumerate() {
            permuted.set_column(new_col, &obs.column(old_col));
        }
        let sp = ReturnSeries::new(
            perm.iter().map(|&k| s.labels()[k].clone()).collect(),
            permuted,
        )
        .unwrap();
        let mp = estimate_model(&sp, 0.0).unwrap();

        for (new_i, &old_i) in perm.iter().enumerate() {
            assert_eq!(mp.mean_returns()[new_i], m.mean_returns()[old_i]);
            for (new_k, &old_k) in perm.iter().enumerate() {
                assert_eq!(
                    mp.covariance()[(new_i, new_k)],
                    m.covariance()[(old_i, old_k)]
                );
            }
        }
    }

    #[test]
    fn asymmetric_covariance_rejected() {
        let text = "\
[assets]
A, B
[mean_returns]
0.01, 0.02
[covariance]
0.01, 0.002
0.003, 0.02
[risk_free_rate]
0.0
";
        let err = load_model_str(text).unwrap_err();
        match err {
            Error::InvariantViolation(msg) => assert!(msg.contains("symmetry"), "{msg}"),
            other => panic!("expected InvariantViolation, got {other:?}"),
        }
    }

    #[test]
    fn indefinite_covariance_rejected() {
        let text = "\
[assets]
A, B
[mean_returns]
0.01, 0.02
[covariance]
0.01, 0.05
0.05, 0.01
[risk_free_rate]
0.0
";
        let err = load_model_str(text).unwrap_err();
        match err {
            Error::InvariantViolation(msg) => {
                assert!(msg.contains("semidefinite"), "{msg}")
            }
            other => panic!("expected InvariantViolation, got {other:?}"),
        }
    }

    #[test]
    fn comments_and_scientific_notation_parse() {
        let text = "\
# two-asset instance
[assets]
A, B
[mean_returns]
2e-2, 3.1e-2   # per period
[covariance]
1.0e-2, 2e-3
2e-3, 1.2e-2
[risk_free_rate]
5e-3
";
        let m = load_model_str(text).unwrap();
        assert_eq!(m.n_assets(), 2);
        assert_eq!(m.mean_returns()[0], 0.02);
        assert_eq!(m.risk_free_rate(), 0.005);
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let text = "\
[assets]
A, B, C
[mean_returns]
0.0282, 0.0462, 0.0188
[covariance]
0.0119, 0.0079, 0.0017
0.0079, 0.0157, 0.0016
0.0017, 0.0016, 0.0056
[risk_free_rate]
0.005
";
        let m1 = load_model_str(text).unwrap();
        let m2 = load_model_str(&save_model(&m1)).unwrap();
        assert_eq!(m1.labels(), m2.labels());
        assert_eq!(m1.mean_returns(), m2.mean_returns());
        assert_eq!(m1.covariance(), m2.covariance());
        assert_eq!(m1.risk_free_rate().to_bits(), m2.risk_free_rate().to_bits());
    }

    #[test]
    fn missing_sections_are_parse_errors() {
        assert!(matches!(
            load_model_str("[assets]\nA, B\n"),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(load_model_str(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_round_series_parses() {
        let s = ReturnSeries::from_csv_str("A,B\n0.01,0.02\n0.03,0.01\n").unwrap();
        assert_eq!(s.n_periods(), 2);
        assert_eq!(s.n_assets(), 2);
        assert_eq!(s.labels(), &["A".to_string(), "B".to_string()]);
    }

    #[test]
    fn csv_bad_field_is_parse_error() {
        let err = ReturnSeries::from_csv_str("A,B\n0.01,x\n0.0,0.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }
}
