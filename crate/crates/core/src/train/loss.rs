//! Losses and evaluation metrics.

use crate::error::{Error, Result};
use crate::scalar::{Mat, Real};
use serde::{Deserialize, Serialize};

/// Floor for `log10(MSE)` reporting; below solver precision anyway.
pub const LOG10_MSE_FLOOR: f64 = -12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    Mse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    Log10Mse,
}

impl MetricKind {
    pub fn higher_is_better(&self) -> bool {
        matches!(self, MetricKind::Accuracy)
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::Log10Mse => "log10_mse",
        }
    }

    /// The metric value that every real value improves upon.
    pub fn worst(&self) -> f64 {
        if self.higher_is_better() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    }

    pub fn improves(&self, candidate: f64, incumbent: f64) -> bool {
        if self.higher_is_better() {
            candidate > incumbent
        } else {
            candidate < incumbent
        }
    }
}

/// Mean squared error over all entries, with the gradient at `pred`.
pub fn mse_loss<T: Real>(pred: &Mat<T>, target: &Mat<T>) -> Result<(T, Mat<T>)> {
    if pred.shape() != target.shape() {
        return Err(Error::dims(format!(
            "mse shapes differ: {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    let count = T::of((pred.nrows() * pred.ncols()).max(1) as f64);
    let diff = pred - target;
    let loss = diff.iter().fold(T::zero(), |a, &d| a + d * d) / count;
    let grad = diff.map(|d| T::of(2.0) * d / count);
    Ok((loss, grad))
}

/// `log10(MSE)`, floored at [`LOG10_MSE_FLOOR`] to avoid `-inf` on exact fits.
pub fn log10_mse<T: Real>(pred: &Mat<T>, target: &Mat<T>) -> Result<f64> {
    let (mse, _) = mse_loss(pred, target)?;
    let v = mse.as_f64().log10();
    Ok(v.max(LOG10_MSE_FLOOR))
}

/// Mean negative log-softmax over the selected rows, with the gradient at
/// the logits (zero outside the selected rows).
///
/// `classes[r]` is the label of output row `r`; `rows` selects which rows
/// contribute (all rows when `None`).
pub fn cross_entropy_loss<T: Real>(
    logits: &Mat<T>,
    classes: &[usize],
    rows: Option<&[usize]>,
) -> Result<(T, Mat<T>)> {
    if classes.len() != logits.nrows() {
        return Err(Error::dims(format!(
            "{} labels for {} output rows",
            classes.len(),
            logits.nrows()
        )));
    }
    let all_rows: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all_rows = (0..logits.nrows()).collect();
            &all_rows
        }
    };
    if rows.is_empty() {
        return Err(Error::invalid("cross entropy over an empty row set"));
    }
    let k = logits.ncols();
    let inv = T::one() / T::of(rows.len() as f64);
    let mut grad = Mat::zeros(logits.nrows(), k);
    let mut loss = T::zero();
    for &r in rows {
        if r >= logits.nrows() {
            return Err(Error::invalid(format!("row {r} out of range")));
        }
        let label = classes[r];
        if label >= k {
            return Err(Error::invalid(format!(
                "label {label} out of range for {k} classes"
            )));
        }
        let row = logits.row(r);
        let max = row.iter().fold(T::of(f64::NEG_INFINITY), |a, &b| a.max(b));
        let mut total = T::zero();
        for c in 0..k {
            total += (row[c] - max).exp();
        }
        let log_z = total.ln() + max;
        loss += (log_z - row[label]) * inv;
        for c in 0..k {
            let softmax = (row[c] - log_z).exp();
            grad[(r, c)] = (softmax - if c == label { T::one() } else { T::zero() }) * inv;
        }
    }
    Ok((loss, grad))
}

/// Fraction of selected rows whose argmax equals the label.
pub fn accuracy<T: Real>(logits: &Mat<T>, classes: &[usize], rows: Option<&[usize]>) -> f64 {
    let all_rows: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all_rows = (0..logits.nrows()).collect();
            &all_rows
        }
    };
    if rows.is_empty() {
        return 0.0;
    }
    let mut correct = 0usize;
    for &r in rows {
        let row = logits.row(r);
        let mut best = 0;
        for c in 1..logits.ncols() {
            if row[c] > row[best] {
                best = c;
            }
        }
        if best == classes[r] {
            correct += 1;
        }
    }
    correct as f64 / rows.len() as f64
}
