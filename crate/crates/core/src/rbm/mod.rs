//! Bernoulli-Bernoulli restricted Boltzmann machine.
//!
//! The visible layer holds a data block followed by a label block. Training
//! uses contrastive divergence ([`cd_gradient`]) or its persistent variant
//! ([`pcd_gradient`]); classification clamps the data block and samples the
//! label block ([`predict`]).
//!
//! Weights are indexed `n_hidden × n_visible`, so row `i` holds the fan-in of
//! hidden unit `i`. They are kept in column-major memory order: products with
//! sparse visible batches then touch contiguous columns only.

mod classify;
mod gradient;
mod model_file;
mod train;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, ShapeBuilder};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::math::{self, sigmoid};

pub use classify::{label_probabilities, predict, ClampedChain, SamplingConfig};
pub use gradient::{
    cd_gradient, negative_phase, pcd_gradient, positive_phase, GibbsChainState, GradientEstimate,
    PhaseStatistics,
};
pub use model_file::RbmModelFile;
pub use train::{
    decode_labels, encode_labels, fit, fit_with_chains, Algorithm, EpochRecord, RbmLayout,
    TrainConfig, TrainingLog,
};

/// Standard deviation of the initial weights.
pub const INIT_WEIGHT_STD: f64 = 0.01;

/// Batches with fewer nonzero entries than this fraction take the sparse
/// product path.
const SPARSE_DENSITY: f64 = 0.3;

fn column_major(a: Array2<f64>) -> Array2<f64> {
    if a.t().is_standard_layout() {
        return a;
    }
    let mut out = Array2::zeros(a.raw_dim().f());
    out.assign(&a);
    out
}

/// Nonzero `(column, value)` pairs per row, or `None` when the batch is too
/// dense for skipping zeros to pay off.
fn sparse_rows(batch: ArrayView2<'_, f64>) -> Option<Vec<Vec<(usize, f64)>>> {
    let nonzero = batch.iter().filter(|&&v| v != 0.0).count();
    if nonzero as f64 >= SPARSE_DENSITY * batch.len() as f64 {
        return None;
    }
    Some(
        batch
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(|(j, &v)| (j, v))
                    .collect()
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmParameters {
    weights: Array2<f64>,
    visible_bias: Array1<f64>,
    hidden_bias: Array1<f64>,
    n_label_units: usize,
}

impl RbmParameters {
    /// Builds parameters after checking shapes and finiteness.
    ///
    /// `n_label_units` may be zero for an RBM used purely generatively;
    /// [`fit`] and [`predict`] require at least one label unit.
    pub fn new(
        weights: Array2<f64>,
        visible_bias: Array1<f64>,
        hidden_bias: Array1<f64>,
        n_label_units: usize,
    ) -> Result<Self> {
        let (n_hidden, n_visible) = weights.dim();
        if visible_bias.len() != n_visible {
            return Err(Error::shape("visible bias", n_visible, visible_bias.len()));
        }
        if hidden_bias.len() != n_hidden {
            return Err(Error::shape("hidden bias", n_hidden, hidden_bias.len()));
        }
        if n_visible == 0 || n_hidden == 0 {
            return Err(Error::Config("RBM layers must be non-empty".into()));
        }
        if n_label_units >= n_visible {
            return Err(Error::Config(format!(
                "{n_label_units} label units leave no data units in a {n_visible}-unit visible layer"
            )));
        }
        let params = Self {
            weights: column_major(weights),
            visible_bias,
            hidden_bias,
            n_label_units,
        };
        if !params.is_finite() {
            return Err(Error::Domain("RBM parameters must be finite".into()));
        }
        Ok(params)
    }

    pub fn zeros(n_visible: usize, n_hidden: usize, n_label_units: usize) -> Result<Self> {
        Self::new(
            Array2::zeros((n_hidden, n_visible)),
            Array1::zeros(n_visible),
            Array1::zeros(n_hidden),
            n_label_units,
        )
    }

    /// Small Gaussian weights, zero biases.
    pub fn random<R: Rng + ?Sized>(
        n_visible: usize,
        n_hidden: usize,
        n_label_units: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let normal = Normal::new(0.0, INIT_WEIGHT_STD).expect("valid std");
        let mut params = Self::zeros(n_visible, n_hidden, n_label_units)?;
        for w in params.weights.iter_mut() {
            *w = normal.sample(rng);
        }
        Ok(params)
    }

    pub fn n_visible(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_hidden(&self) -> usize {
        self.weights.nrows()
    }

    pub fn n_label_units(&self) -> usize {
        self.n_label_units
    }

    /// Width of the data block (visible units before the label block).
    pub fn n_data_units(&self) -> usize {
        self.n_visible() - self.n_label_units
    }

    pub fn weights(&self) -> ArrayView2<'_, f64> {
        self.weights.view()
    }

    pub fn visible_bias(&self) -> ArrayView1<'_, f64> {
        self.visible_bias.view()
    }

    pub fn hidden_bias(&self) -> ArrayView1<'_, f64> {
        self.hidden_bias.view()
    }

    pub fn is_finite(&self) -> bool {
        math::all_finite(self.weights.view())
            && self.visible_bias.iter().all(|v| v.is_finite())
            && self.hidden_bias.iter().all(|v| v.is_finite())
    }

    /// The same machine with the roles of the two layers exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            weights: column_major(self.weights.t().to_owned()),
            visible_bias: self.hidden_bias.clone(),
            hidden_bias: self.visible_bias.clone(),
            n_label_units: 0,
        }
    }

    /// `params += step * grad`.
    pub fn apply(&mut self, grad: &GradientEstimate, step: f64) -> Result<()> {
        if grad.d_weights.dim() != self.weights.dim() {
            return Err(Error::shape(
                "gradient weights",
                format!("{:?}", self.weights.dim()),
                format!("{:?}", grad.d_weights.dim()),
            ));
        }
        self.weights.scaled_add(step, &grad.d_weights);
        self.visible_bias.scaled_add(step, &grad.d_visible_bias);
        self.hidden_bias.scaled_add(step, &grad.d_hidden_bias);
        Ok(())
    }

    /// `H(v, h) = -hᵀWv - bᵀv - cᵀh`.
    pub fn energy(&self, visible: ArrayView1<'_, f64>, hidden: ArrayView1<'_, f64>) -> Result<f64> {
        self.check_visible_len(visible.len())?;
        self.check_hidden_len(hidden.len())?;
        let interaction = hidden.dot(&self.weights.dot(&visible));
        Ok(-interaction - self.visible_bias.dot(&visible) - self.hidden_bias.dot(&hidden))
    }

    /// `p(h_i = 1 | v) = σ(Σ_j w_ij v_j + c_i)`.
    pub fn hidden_conditional(&self, visible: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.check_visible_len(visible.len())?;
        Ok((self.weights.dot(&visible) + &self.hidden_bias).mapv(sigmoid))
    }

    /// `p(v_j = 1 | h) = σ(Σ_i w_ij h_i + b_j)`.
    pub fn visible_conditional(&self, hidden: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.check_hidden_len(hidden.len())?;
        Ok((hidden.dot(&self.weights) + &self.visible_bias).mapv(sigmoid))
    }

    /// Row-wise [`hidden_conditional`](Self::hidden_conditional) for a
    /// `n × n_visible` batch.
    pub fn hidden_probabilities(&self, visible: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_visible_len(visible.ncols())?;
        Ok(self.hidden_probs(visible))
    }

    /// Row-wise [`visible_conditional`](Self::visible_conditional) for a
    /// `n × n_hidden` batch.
    pub fn visible_probabilities(&self, hidden: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_hidden_len(hidden.ncols())?;
        Ok(self.visible_probs(hidden))
    }

    pub(crate) fn hidden_probs(&self, visible: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut pre = match sparse_rows(visible) {
            Some(rows) => {
                let mut pre = Array2::zeros((visible.nrows(), self.n_hidden()));
                for (mut out, row) in pre.rows_mut().into_iter().zip(&rows) {
                    for &(j, v) in row {
                        out.scaled_add(v, &self.weights.column(j));
                    }
                }
                pre
            }
            None => visible.dot(&self.weights.t()),
        };
        math::add_row_vector(pre.view_mut(), self.hidden_bias.view());
        math::sigmoid_inplace(pre.view_mut());
        pre
    }

    pub(crate) fn visible_probs(&self, hidden: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut pre = hidden.dot(&self.weights);
        math::add_row_vector(pre.view_mut(), self.visible_bias.view());
        math::sigmoid_inplace(pre.view_mut());
        pre
    }

    /// `W += scale · hiddenᵀ visible`, `b += scale · Σ visible`,
    /// `c += scale · Σ hidden`, summing over batch rows.
    pub(crate) fn add_moments(&mut self, scale: f64, visible: ArrayView2<'_, f64>, hidden: ArrayView2<'_, f64>) {
        match sparse_rows(visible) {
            Some(rows) => {
                for (h, row) in hidden.rows().into_iter().zip(&rows) {
                    for &(j, v) in row {
                        self.weights.column_mut(j).scaled_add(scale * v, &h);
                    }
                }
            }
            None => general_mat_mul(scale, &hidden.t(), &visible, 1.0, &mut self.weights),
        }
        self.visible_bias.scaled_add(scale, &visible.sum_axis(Axis(0)));
        self.hidden_bias.scaled_add(scale, &hidden.sum_axis(Axis(0)));
    }

    pub(crate) fn label_weights(&self) -> ArrayView2<'_, f64> {
        self.weights
            .slice_axis(Axis(1), (self.n_data_units()..).into())
    }

    pub(crate) fn data_weights(&self) -> ArrayView2<'_, f64> {
        self.weights
            .slice_axis(Axis(1), (..self.n_data_units()).into())
    }

    pub(crate) fn label_bias(&self) -> ArrayView1<'_, f64> {
        self.visible_bias
            .slice_axis(Axis(0), (self.n_data_units()..).into())
    }

    fn check_visible_len(&self, len: usize) -> Result<()> {
        if len != self.n_visible() {
            return Err(Error::shape("visible vector", self.n_visible(), len));
        }
        Ok(())
    }

    fn check_hidden_len(&self, len: usize) -> Result<()> {
        if len != self.n_hidden() {
            return Err(Error::shape("hidden vector", self.n_hidden(), len));
        }
        Ok(())
    }
}

/// Draws each entry independently as 1 with probability `probs[k]`.
pub fn sample_bernoulli<R: Rng + ?Sized>(
    probs: ArrayView1<'_, f64>,
    rng: &mut R,
) -> Result<Array1<f64>> {
    for &p in probs {
        math::check_probability(p)?;
    }
    Ok(probs.mapv(|p| if rng.gen::<f64>() < p { 1.0 } else { 0.0 }))
}
