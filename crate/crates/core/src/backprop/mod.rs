//! Backprop-trained baselines: logistic regression and a one-hidden-layer
//! sigmoid MLP, both with a logistic (two-class) or softmax output and mean
//! cross-entropy loss.

mod logistic;
mod mlp;
mod sgd;

use ndarray::{Array2, ArrayView2, ArrayViewD, ArrayViewMutD, Axis};

use crate::error::{Error, Result};
use crate::math::{self, sigmoid, softplus};

pub use logistic::LrParameters;
pub use mlp::MlpParameters;
pub use sgd::{accuracy, sgd_fit, SgdConfig, SgdEpoch, SgdLog};

/// Standard deviation of initial weights, matching the RBM.
pub const INIT_WEIGHT_STD: f64 = 0.01;

/// A differentiable classifier trainable by [`sgd_fit`]. Gradients share the
/// parameter type.
pub trait Network: Clone {
    fn n_features(&self) -> usize;

    fn n_classes(&self) -> usize;

    /// Class probabilities, one row per input.
    fn forward(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>>;

    /// Mean cross-entropy and its exact gradient.
    fn loss_and_gradients(&self, features: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, Self)>;

    /// `self += step * grad`.
    fn add_scaled(&mut self, grad: &Self, step: f64);

    /// Named parameter tensors, in a fixed order.
    fn tensors(&self) -> Vec<(&'static str, ArrayViewD<'_, f64>)>;

    fn tensors_mut(&mut self) -> Vec<(&'static str, ArrayViewMutD<'_, f64>)>;

    fn predict(&self, features: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let probs = self.forward(features)?;
        Ok(probs.rows().into_iter().map(math::argmax).collect())
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

/// Output units for `n_classes`: one logistic unit for two classes, a
/// softmax layer otherwise.
pub fn output_units(n_classes: usize) -> usize {
    if n_classes == 2 {
        1
    } else {
        n_classes
    }
}

fn check_width(expected: usize, features: ArrayView2<'_, f64>) -> Result<()> {
    if features.ncols() != expected {
        return Err(Error::shape("feature width", expected, features.ncols()));
    }
    Ok(())
}

fn check_labels(labels: &[usize], n_rows: usize, n_classes: usize) -> Result<()> {
    if labels.len() != n_rows {
        return Err(Error::shape("label count", n_rows, labels.len()));
    }
    if n_rows == 0 {
        return Err(Error::Domain("empty batch".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::Domain(format!("label {bad} out of range for {n_classes} classes")));
    }
    Ok(())
}

/// Turns output-layer logits into class probabilities.
fn probabilities(logits: &Array2<f64>) -> Array2<f64> {
    if logits.ncols() == 1 {
        let mut out = Array2::zeros((logits.nrows(), 2));
        for (mut row, &z) in out.rows_mut().into_iter().zip(logits.column(0)) {
            let p = sigmoid(z);
            row[0] = 1.0 - p;
            row[1] = p;
        }
        out
    } else {
        let mut out = logits.clone();
        for mut row in out.rows_mut() {
            let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            row.mapv_inplace(|v| (v - max).exp());
            let sum = row.sum();
            row /= sum;
        }
        out
    }
}

/// Mean cross-entropy of `logits` against `labels` and `∂loss/∂logits`.
fn cross_entropy(logits: &Array2<f64>, labels: &[usize]) -> (f64, Array2<f64>) {
    let n = logits.nrows() as f64;
    let mut delta = Array2::zeros(logits.raw_dim());
    let mut loss = 0.0;
    if logits.ncols() == 1 {
        for (i, &y) in labels.iter().enumerate() {
            let z = logits[[i, 0]];
            let y = y as f64;
            loss += softplus(z) - y * z;
            delta[[i, 0]] = (sigmoid(z) - y) / n;
        }
    } else {
        for (i, &y) in labels.iter().enumerate() {
            let row = logits.row(i);
            let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let sum: f64 = row.iter().map(|&v| (v - max).exp()).sum();
            let log_norm = max + sum.ln();
            loss += log_norm - row[y];
            for (k, &z) in row.iter().enumerate() {
                let p = (z - log_norm).exp();
                delta[[i, k]] = (p - if k == y { 1.0 } else { 0.0 }) / n;
            }
        }
    }
    (loss / n, delta)
}

/// Column sums; deltas arrive already divided by the batch size.
fn sum_rows(a: &Array2<f64>) -> ndarray::Array1<f64> {
    a.sum_axis(Axis(0))
}
