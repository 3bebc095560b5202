//! Relative L² error and batch aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::Field2D;

/// `rms(pred - truth) / rms(truth)` over all `n²` nodes, boundary included.
pub fn relative_l2(pred: &Field2D, truth: &Field2D) -> Result<f64> {
    pred.grid().check_same(&truth.grid())?;
    relative_l2_slices(pred.values(), truth.values())
}

pub(crate) fn relative_l2_slices(pred: &[f64], truth: &[f64]) -> Result<f64> {
    debug_assert_eq!(pred.len(), truth.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for (&p, &t) in pred.iter().zip(truth) {
        let d = p - t;
        num += d * d;
        den += t * t;
    }
    if den == 0.0 {
        return Err(LabError::ZeroNorm);
    }
    // The 1/HW factors cancel.
    Ok((num / den).sqrt())
}

/// Arithmetic mean of per-sample relative errors; zero-norm references are
/// skipped with a warning. Returns `None` when every sample was skipped.
pub fn batch_mean_relative_l2<'a, I>(pairs: I) -> Option<f64>
where
    I: IntoIterator<Item = (&'a Field2D, &'a Field2D)>,
{
    let mut sum = 0.0;
    let mut count = 0usize;
    for (k, (pred, truth)) in pairs.into_iter().enumerate() {
        match relative_l2(pred, truth) {
            Ok(e) => {
                sum += e;
                count += 1;
            }
            Err(err) => log::warn!("sample {k} excluded from batch mean: {err}"),
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Mean ± sample standard deviation over evaluation batches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStat {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

impl ErrorStat {
    /// Square root of the average variance of two stats, used when comparing
    /// neighbouring conditions.
    pub fn pooled_std(&self, other: &ErrorStat) -> f64 {
        (0.5 * (self.std * self.std + other.std * other.std)).sqrt()
    }
}

/// Sample mean and standard deviation (divisor `count - 1`; zero for one value).
pub fn aggregate(errors: &[f64]) -> Result<ErrorStat> {
    if errors.is_empty() {
        return Err(LabError::Empty("error list"));
    }
    let count = errors.len();
    let mean = errors.iter().sum::<f64>() / count as f64;
    let std = if count == 1 {
        0.0
    } else {
        (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    };
    Ok(ErrorStat { mean, std, count })
}
