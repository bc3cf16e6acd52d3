use ndarray::{Array1, Array2, ArrayView2, ArrayViewD, ArrayViewMutD, Zip};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{check_labels, check_width, cross_entropy, sum_rows, output_units, probabilities, Network, INIT_WEIGHT_STD};
use crate::error::{Error, Result};
use crate::math;

/// One sigmoid hidden layer followed by the same output layer as
/// [`LrParameters`](super::LrParameters).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParameters {
    /// `n_hidden × n_features`.
    pub hidden_weights: Array2<f64>,
    pub hidden_bias: Array1<f64>,
    /// `n_outputs × n_hidden`.
    pub output_weights: Array2<f64>,
    pub output_bias: Array1<f64>,
}

struct Activations {
    hidden: Array2<f64>,
    logits: Array2<f64>,
}

impl MlpParameters {
    pub fn new(
        hidden_weights: Array2<f64>,
        hidden_bias: Array1<f64>,
        output_weights: Array2<f64>,
        output_bias: Array1<f64>,
    ) -> Result<Self> {
        if hidden_bias.len() != hidden_weights.nrows() {
            return Err(Error::shape("MLP hidden bias", hidden_weights.nrows(), hidden_bias.len()));
        }
        if output_weights.ncols() != hidden_weights.nrows() {
            return Err(Error::shape("MLP output fan-in", hidden_weights.nrows(), output_weights.ncols()));
        }
        if output_bias.len() != output_weights.nrows() || output_weights.nrows() == 0 {
            return Err(Error::shape("MLP output bias", output_weights.nrows(), output_bias.len()));
        }
        Ok(Self {
            hidden_weights,
            hidden_bias,
            output_weights,
            output_bias,
        })
    }

    pub fn zeros(n_features: usize, n_hidden: usize, n_classes: usize) -> Self {
        let n_out = output_units(n_classes);
        Self {
            hidden_weights: Array2::zeros((n_hidden, n_features)),
            hidden_bias: Array1::zeros(n_hidden),
            output_weights: Array2::zeros((n_out, n_hidden)),
            output_bias: Array1::zeros(n_out),
        }
    }

    pub fn random<R: Rng + ?Sized>(n_features: usize, n_hidden: usize, n_classes: usize, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, INIT_WEIGHT_STD).expect("valid std");
        let mut p = Self::zeros(n_features, n_hidden, n_classes);
        p.hidden_weights.mapv_inplace(|_| normal.sample(rng));
        p.output_weights.mapv_inplace(|_| normal.sample(rng));
        p
    }

    pub fn n_hidden(&self) -> usize {
        self.hidden_weights.nrows()
    }

    fn activations(&self, features: ArrayView2<'_, f64>) -> Activations {
        let mut hidden = features.dot(&self.hidden_weights.t());
        math::add_row_vector(hidden.view_mut(), self.hidden_bias.view());
        math::sigmoid_inplace(hidden.view_mut());
        let mut logits = hidden.dot(&self.output_weights.t());
        math::add_row_vector(logits.view_mut(), self.output_bias.view());
        Activations { hidden, logits }
    }
}

impl Network for MlpParameters {
    fn n_features(&self) -> usize {
        self.hidden_weights.ncols()
    }

    fn n_classes(&self) -> usize {
        if self.output_weights.nrows() == 1 {
            2
        } else {
            self.output_weights.nrows()
        }
    }

    fn forward(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_width(self.n_features(), features)?;
        Ok(probabilities(&self.activations(features).logits))
    }

    fn loss_and_gradients(&self, features: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, Self)> {
        check_width(self.n_features(), features)?;
        check_labels(labels, features.nrows(), self.n_classes())?;
        let act = self.activations(features);
        let (loss, output_delta) = cross_entropy(&act.logits, labels);

        // output layer → hidden layer → input weights
        let output_weights = output_delta.t().dot(&act.hidden);
        let output_bias = sum_rows(&output_delta);
        let mut hidden_delta = output_delta.dot(&self.output_weights);
        Zip::from(&mut hidden_delta)
            .and(&act.hidden)
            .for_each(|d, &h| *d *= h * (1.0 - h));
        let hidden_weights = hidden_delta.t().dot(&features);
        let hidden_bias = sum_rows(&hidden_delta);

        Ok((
            loss,
            Self {
                hidden_weights,
                hidden_bias,
                output_weights,
                output_bias,
            },
        ))
    }

    fn add_scaled(&mut self, grad: &Self, step: f64) {
        self.hidden_weights.scaled_add(step, &grad.hidden_weights);
        self.hidden_bias.scaled_add(step, &grad.hidden_bias);
        self.output_weights.scaled_add(step, &grad.output_weights);
        self.output_bias.scaled_add(step, &grad.output_bias);
    }

    fn tensors(&self) -> Vec<(&'static str, ArrayViewD<'_, f64>)> {
        vec![
            ("hidden_weights", self.hidden_weights.view().into_dyn()),
            ("hidden_bias", self.hidden_bias.view().into_dyn()),
            ("output_weights", self.output_weights.view().into_dyn()),
            ("output_bias", self.output_bias.view().into_dyn()),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, ArrayViewMutD<'_, f64>)> {
        vec![
            ("hidden_weights", self.hidden_weights.view_mut().into_dyn()),
            ("hidden_bias", self.hidden_bias.view_mut().into_dyn()),
            ("output_weights", self.output_weights.view_mut().into_dyn()),
            ("output_bias", self.output_bias.view_mut().into_dyn()),
        ]
    }
}
