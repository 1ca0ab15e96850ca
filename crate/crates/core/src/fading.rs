//! Small-scale fading models and the expectations over |h|^2 that the rate
//! formulas need.
//!
//! Every model is normalized so that E[|h|^2] = 1; the received power and all
//! array gains live elsewhere.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::exp_expectation;

/// Tabulated models whose raw mean lies further than this from one are rejected.
pub const TABULATED_MEAN_TOLERANCE: f64 = 0.01;

/// Allowed deviation of raw tabulated weights from a unit sum.
pub const TABULATED_WEIGHT_TOLERANCE: f64 = 1e-6;

/// Distribution of the fading power |h|^2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FadingModel {
    /// |h|^2 ~ Exp(1).
    #[default]
    Rayleigh,
    /// |h|^2 = 1 with probability one.
    Deterministic,
    /// Discrete distribution of |h|^2.
    Tabulated(Tabulated),
}

/// Discrete |h|^2 distribution with unit mean and unit total weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    points: Vec<(f64, f64)>,
}

impl Tabulated {
    /// The normalized `(|h|^2, weight)` pairs.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

impl FadingModel {
    /// Builds a tabulated model from `(value, weight)` pairs.
    ///
    /// Weights must sum to one within [`TABULATED_WEIGHT_TOLERANCE`]; they are
    /// then rescaled to sum to exactly one. A mean within 1% of unity is
    /// renormalized to exactly one by scaling the values; anything further off
    /// is rejected.
    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("tabulated fading needs at least one point"));
        }
        for &(v, w) in &points {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!("fading value {v} must be finite and >= 0")));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::domain(format!("fading weight {w} must be finite and >= 0")));
            }
        }
        let total: f64 = points.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > TABULATED_WEIGHT_TOLERANCE {
            return Err(Error::domain(format!("fading weights sum to {total}, expected 1")));
        }
        let mean: f64 = points.iter().map(|&(v, w)| v * w).sum::<f64>() / total;
        if (mean - 1.0).abs() > TABULATED_MEAN_TOLERANCE {
            return Err(Error::domain(format!(
                "tabulated fading has mean {mean}; E[|h|^2] must be within 1% of 1"
            )));
        }
        let points = points
            .into_iter()
            .map(|(v, w)| (v / mean, w / total))
            .collect();
        Ok(FadingModel::Tabulated(Tabulated { points }))
    }

    /// Reads a two-column `value,weight` CSV. A header row is optional.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let points = read_two_column_csv(reader, "fading")?;
        Self::tabulated(points)
    }

    pub fn from_csv_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    fn expect(&self, s: f64, f: impl Fn(f64) -> f64) -> f64 {
        match self {
            FadingModel::Rayleigh => exp_expectation(s, f),
            FadingModel::Deterministic => f(s),
            FadingModel::Tabulated(t) => t.points.iter().map(|&(v, w)| w * f(s * v)).sum(),
        }
    }

    /// E[ln(1 + s |h|^2)] in nats.
    pub fn expected_log1p(&self, s: f64) -> Result<f64> {
        check_scale(s)?;
        Ok(self.expect(s, f64::ln_1p))
    }

    /// E[s|h|^2 / (1 + s|h|^2)].
    ///
    /// Appears in the bandwidth stationarity condition as A/D - E[A/(D + B|h|^2)];
    /// evaluating it in this form avoids the cancellation of the difference.
    pub fn expected_snr_ratio(&self, s: f64) -> Result<f64> {
        check_scale(s)?;
        Ok(self.expect(s, |t| t / (1.0 + t)))
    }

    /// E[|h|^2].
    pub fn mean(&self) -> f64 {
        match self {
            FadingModel::Rayleigh | FadingModel::Deterministic => 1.0,
            FadingModel::Tabulated(t) => t.points.iter().map(|&(v, w)| v * w).sum(),
        }
    }

    /// kappa = E[|h|^4] / E[|h|^2]^2.
    pub fn kurtosis(&self) -> f64 {
        match self {
            FadingModel::Rayleigh => 2.0,
            FadingModel::Deterministic => 1.0,
            FadingModel::Tabulated(t) => {
                let m2: f64 = t.points.iter().map(|&(v, w)| v * v * w).sum();
                let m1 = self.mean();
                m2 / (m1 * m1)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FadingModel::Rayleigh => "rayleigh",
            FadingModel::Deterministic => "deterministic",
            FadingModel::Tabulated(_) => "tabulated",
        }
    }
}

fn check_scale(s: f64) -> Result<()> {
    if !s.is_finite() || s < 0.0 {
        return Err(Error::domain(format!("expectation scale {s} must be finite and >= 0")));
    }
    Ok(())
}

/// Two numeric columns; the first row is skipped if it does not parse.
pub(crate) fn read_two_column_csv<R: Read>(reader: R, what: &str) -> Result<Vec<(f64, f64)>> {
    Ok(read_numeric_rows(reader, 2, what)?
        .into_iter()
        .map(|r| (r[0], r[1]))
        .collect())
}

/// Rows of `cols` numeric fields. A first row that does not parse is taken as
/// a header; `#` starts a comment line.
pub(crate) fn read_numeric_rows<R: Read>(reader: R, cols: usize, what: &str) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut out = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(Error::config(format!(
                "{what} table row {} has {} columns, expected {cols}",
                idx + 1,
                rec.len()
            )));
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => out.push(row),
            Err(_) if idx == 0 => continue,
            Err(_) => {
                return Err(Error::config(format!(
                    "{what} table row {} is not numeric: {:?}",
                    idx + 1,
                    rec
                )))
            }
        }
    }
    Ok(out)
}
