use ndarray::{Array1, Array2, ArrayView2, ArrayViewD, ArrayViewMutD};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{check_labels, check_width, cross_entropy, sum_rows, output_units, probabilities, Network, INIT_WEIGHT_STD};
use crate::error::{Error, Result};
use crate::math;

/// Single-layer network: `softmax(x Wᵀ + b)`, or a logistic unit for two
/// classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LrParameters {
    /// `n_outputs × n_features`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LrParameters {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        if bias.len() != weights.nrows() {
            return Err(Error::shape("LR bias", weights.nrows(), bias.len()));
        }
        if weights.nrows() == 0 {
            return Err(Error::Config("LR needs at least one output".into()));
        }
        Ok(Self { weights, bias })
    }

    pub fn zeros(n_features: usize, n_classes: usize) -> Self {
        let n_out = output_units(n_classes);
        Self {
            weights: Array2::zeros((n_out, n_features)),
            bias: Array1::zeros(n_out),
        }
    }

    pub fn random<R: Rng + ?Sized>(n_features: usize, n_classes: usize, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, INIT_WEIGHT_STD).expect("valid std");
        let mut p = Self::zeros(n_features, n_classes);
        p.weights.mapv_inplace(|_| normal.sample(rng));
        p
    }

    fn logits(&self, features: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = features.dot(&self.weights.t());
        math::add_row_vector(z.view_mut(), self.bias.view());
        z
    }
}

impl Network for LrParameters {
    fn n_features(&self) -> usize {
        self.weights.ncols()
    }

    fn n_classes(&self) -> usize {
        if self.weights.nrows() == 1 {
            2
        } else {
            self.weights.nrows()
        }
    }

    fn forward(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_width(self.n_features(), features)?;
        Ok(probabilities(&self.logits(features)))
    }

    fn loss_and_gradients(&self, features: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, Self)> {
        check_width(self.n_features(), features)?;
        check_labels(labels, features.nrows(), self.n_classes())?;
        let (loss, delta) = cross_entropy(&self.logits(features), labels);
        let grad = Self {
            weights: delta.t().dot(&features),
            bias: sum_rows(&delta),
        };
        Ok((loss, grad))
    }

    fn add_scaled(&mut self, grad: &Self, step: f64) {
        self.weights.scaled_add(step, &grad.weights);
        self.bias.scaled_add(step, &grad.bias);
    }

    fn tensors(&self) -> Vec<(&'static str, ArrayViewD<'_, f64>)> {
        vec![
            ("weights", self.weights.view().into_dyn()),
            ("bias", self.bias.view().into_dyn()),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<(&'static str, ArrayViewMutD<'_, f64>)> {
        vec![
            ("weights", self.weights.view_mut().into_dyn()),
            ("bias", self.bias.view_mut().into_dyn()),
        ]
    }
}
