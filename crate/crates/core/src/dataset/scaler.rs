use std::fmt;
use std::str::FromStr;

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Feature normalization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormScheme {
    /// Per-feature min-max to `[0, 1]` on the training data.
    A,
    /// Per-feature z-score with population standard deviation.
    B,
}

impl fmt::Display for NormScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormScheme::A => "A",
            NormScheme::B => "B",
        })
    }
}

impl FromStr for NormScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(NormScheme::A),
            "B" => Ok(NormScheme::B),
            _ => Err(Error::Domain(format!("unknown normalization scheme {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ColumnStats {
    MinMax { min: f64, max: f64 },
    ZScore { mean: f64, std: f64 },
}

impl ColumnStats {
    /// Constant training column; such features are mapped to 0.
    pub fn is_degenerate(&self) -> bool {
        match *self {
            ColumnStats::MinMax { min, max } => max == min,
            ColumnStats::ZScore { std, .. } => std == 0.0,
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        match *self {
            ColumnStats::MinMax { min, max } => (x - min) / (max - min),
            ColumnStats::ZScore { mean, std } => (x - mean) / std,
        }
    }

    pub fn invert(&self, z: f64) -> f64 {
        match *self {
            ColumnStats::MinMax { min, .. } if self.is_degenerate() => min,
            ColumnStats::ZScore { mean, .. } if self.is_degenerate() => mean,
            ColumnStats::MinMax { min, max } => z * (max - min) + min,
            ColumnStats::ZScore { mean, std } => z * std + mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalerParams {
    pub scheme: NormScheme,
    pub columns: Vec<String>,
    pub stats: Vec<ColumnStats>,
}

impl ScalerParams {
    pub fn dim(&self) -> usize {
        self.stats.len()
    }

    pub fn degenerate(&self) -> Vec<bool> {
        self.stats.iter().map(ColumnStats::is_degenerate).collect()
    }

    pub fn transform_row(&self, raw: &[f64]) -> Result<Vec<f64>> {
        if raw.len() != self.dim() {
            return Err(Error::Domain(format!(
                "feature vector has {} entries, scaler expects {}",
                raw.len(),
                self.dim()
            )));
        }
        Ok(raw.iter().zip(&self.stats).map(|(&x, s)| s.apply(x)).collect())
    }
}

pub fn fit_scaler(matrix: &FeatureMatrix, scheme: NormScheme) -> Result<ScalerParams> {
    let n = matrix.n_rows();
    if n == 0 || matrix.n_cols() == 0 {
        return Err(Error::Domain("cannot fit a scaler on an empty matrix".into()));
    }
    let stats = (0..matrix.n_cols())
        .map(|j| {
            let col = matrix.column(j);
            match scheme {
                NormScheme::A => {
                    let (min, max) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                        (lo.min(x), hi.max(x))
                    });
                    ColumnStats::MinMax { min, max }
                }
                NormScheme::B => {
                    let values: Vec<f64> = col.collect();
                    let mean = values.iter().sum::<f64>() / n as f64;
                    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
                    ColumnStats::ZScore {
                        mean,
                        std: var.sqrt(),
                    }
                }
            }
        })
        .collect();
    Ok(ScalerParams {
        scheme,
        columns: matrix.columns().to_vec(),
        stats,
    })
}

fn check_columns(matrix: &FeatureMatrix, params: &ScalerParams) -> Result<()> {
    if matrix.columns() != params.columns.as_slice() {
        let first = matrix
            .columns()
            .iter()
            .zip(&params.columns)
            .position(|(a, b)| a != b)
            .unwrap_or(matrix.n_cols().min(params.dim()));
        return Err(Error::Schema(format!(
            "matrix columns do not match scaler (first difference at column {})",
            first + 1
        )));
    }
    Ok(())
}

/// Scales every value; unseen values outside the training range are not clipped.
pub fn apply_scaler(matrix: &FeatureMatrix, params: &ScalerParams) -> Result<FeatureMatrix> {
    check_columns(matrix, params)?;
    Ok(matrix.map_values(|j, x| params.stats[j].apply(x)))
}

pub fn invert_scaler(matrix: &FeatureMatrix, params: &ScalerParams) -> Result<FeatureMatrix> {
    check_columns(matrix, params)?;
    Ok(matrix.map_values(|j, z| params.stats[j].invert(z)))
}
