//! Curve-prediction error metrics.
//!
//! A [`CurveBatch`] is `n_batch` sequences of `n_seq` points for one modulus.
//! [`wmape`] normalizes the absolute errors at each point index by the batch
//! sum of the true values, then averages over point indices;
//! [`wmape_pointwise`] is the variant that averages per-point relative errors
//! and sums them over the batch. The two agree for a single sequence.

use thiserror::Error;

/// Truth values below this magnitude are excluded from per-sample MAPE.
pub const DEFAULT_MAPE_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("shape mismatch: truth {truth:?} vs prediction {pred:?}")]
    ShapeMismatch {
        truth: (usize, usize),
        pred: (usize, usize),
    },
    #[error("ragged batch: sequence {index} has {len} points, expected {expected}")]
    Ragged {
        index: usize,
        len: usize,
        expected: usize,
    },
    #[error("empty batch")]
    Empty,
    #[error("degenerate batch: truth sums to zero at point indices {0:?}")]
    DegenerateBatch(Vec<usize>),
    #[error("degenerate sample: every truth value is below the floor (indices {0:?})")]
    DegeneratePoint(Vec<usize>),
}

/// `n_batch x n_seq` values, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveBatch {
    n_batch: usize,
    n_seq: usize,
    values: Vec<f64>,
}

impl CurveBatch {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, MetricsError> {
        let first = rows.first().ok_or(MetricsError::Empty)?.as_ref().len();
        if first == 0 {
            return Err(MetricsError::Empty);
        }
        let mut values = Vec::with_capacity(rows.len() * first);
        for (index, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != first {
                return Err(MetricsError::Ragged {
                    index,
                    len: row.len(),
                    expected: first,
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Self {
            n_batch: rows.len(),
            n_seq: first,
            values,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_batch, self.n_seq)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_seq..(i + 1) * self.n_seq]
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_seq + j]
    }
}

fn check_shapes(truth: &CurveBatch, pred: &CurveBatch) -> Result<(), MetricsError> {
    if truth.shape() != pred.shape() {
        return Err(MetricsError::ShapeMismatch {
            truth: truth.shape(),
            pred: pred.shape(),
        });
    }
    Ok(())
}

/// Batch-weighted MAPE:
/// `(1/N_seq) * sum_j [ sum_i |y_ij - p_ij| / sum_i |y_ij| ]`.
pub fn wmape(truth: &CurveBatch, pred: &CurveBatch) -> Result<f64, MetricsError> {
    check_shapes(truth, pred)?;
    let (nb, ns) = truth.shape();
    let mut degenerate = Vec::new();
    let mut total = 0.0;
    for j in 0..ns {
        let (mut err, mut scale) = (0.0, 0.0);
        for i in 0..nb {
            err += (truth.at(i, j) - pred.at(i, j)).abs();
            scale += truth.at(i, j).abs();
        }
        if scale == 0.0 {
            degenerate.push(j);
        } else {
            total += err / scale;
        }
    }
    if !degenerate.is_empty() {
        return Err(MetricsError::DegenerateBatch(degenerate));
    }
    Ok(total / ns as f64)
}

/// Per-point ratios summed over the batch:
/// `(1/N_seq) * sum_j sum_i |y_ij - p_ij| / |y_ij|`.
pub fn wmape_pointwise(truth: &CurveBatch, pred: &CurveBatch) -> Result<f64, MetricsError> {
    check_shapes(truth, pred)?;
    let (nb, ns) = truth.shape();
    let zeros: Vec<usize> = (0..ns)
        .filter(|&j| (0..nb).any(|i| truth.at(i, j) == 0.0))
        .collect();
    if !zeros.is_empty() {
        return Err(MetricsError::DegenerateBatch(zeros));
    }
    let total: f64 = (0..ns)
        .map(|j| {
            (0..nb)
                .map(|i| (truth.at(i, j) - pred.at(i, j)).abs() / truth.at(i, j).abs())
                .sum::<f64>()
        })
        .sum();
    Ok(total / ns as f64)
}

/// Mean absolute error over all points of all sequences.
pub fn mae(truth: &CurveBatch, pred: &CurveBatch) -> Result<f64, MetricsError> {
    check_shapes(truth, pred)?;
    let n = truth.values.len() as f64;
    Ok(truth
        .values
        .iter()
        .zip(&pred.values)
        .map(|(y, p)| (y - p).abs())
        .sum::<f64>()
        / n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleMape {
    pub mape: f64,
    /// Point indices whose truth magnitude fell below the floor.
    pub excluded: Vec<usize>,
}

/// Mean of `|y_j - p_j| / |y_j|` over points with `|y_j| >= floor`.
///
/// Near-zero truth values make the ratio explode; they are left out and
/// reported in [`SampleMape::excluded`]. An error is returned only when no
/// point survives.
pub fn mape_per_sample_with_floor(
    truth: &[f64],
    pred: &[f64],
    floor: f64,
) -> Result<SampleMape, MetricsError> {
    if truth.len() != pred.len() {
        return Err(MetricsError::ShapeMismatch {
            truth: (1, truth.len()),
            pred: (1, pred.len()),
        });
    }
    if truth.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut excluded = Vec::new();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (j, (&y, &p)) in truth.iter().zip(pred).enumerate() {
        if y.abs() < floor || y == 0.0 {
            excluded.push(j);
        } else {
            sum += (y - p).abs() / y.abs();
            count += 1;
        }
    }
    if count == 0 {
        return Err(MetricsError::DegeneratePoint(excluded));
    }
    Ok(SampleMape {
        mape: sum / count as f64,
        excluded,
    })
}

pub fn mape_per_sample(truth: &[f64], pred: &[f64]) -> Result<SampleMape, MetricsError> {
    mape_per_sample_with_floor(truth, pred, DEFAULT_MAPE_FLOOR)
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupStats {
    pub key: f64,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

/// Groups `(key, value)` pairs by key (exact after rounding to 1e-9) and
/// returns per-group mean and standard deviation, sorted by key.
pub fn group_stats(pairs: &[(f64, f64)]) -> Vec<GroupStats> {
    let round = |k: f64| (k * 1e9).round() / 1e9;
    let mut sorted: Vec<(f64, f64)> = pairs.iter().map(|&(k, v)| (round(k), v)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let key = sorted[start].0;
        let end = start + sorted[start..].iter().take_while(|p| p.0 == key).count();
        let vals: Vec<f64> = sorted[start..end].iter().map(|p| p.1).collect();
        let (mean, std) = mean_std(&vals);
        out.push(GroupStats {
            key,
            mean,
            std,
            count: vals.len(),
        });
        start = end;
    }
    out
}
