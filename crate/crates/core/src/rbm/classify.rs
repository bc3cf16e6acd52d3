use ndarray::{s, Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::train::decode_labels;
use super::RbmParameters;
use crate::error::{Error, Result};
use crate::math::{self, seeded_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub gibbs_steps: usize,
    pub n_rounds: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            gibbs_steps: 10,
            n_rounds: 10,
            seed: 0,
        }
    }
}

/// Gibbs chains over the label block with the data block held fixed.
///
/// The visible state is stored as `[data | labels]`; sweeps only ever write
/// the label columns. The data contribution to the hidden pre-activation is
/// computed once, since it cannot change while clamped.
#[derive(Debug, Clone)]
pub struct ClampedChain<'a> {
    params: &'a RbmParameters,
    visible: Array2<f64>,
    data_input: Array2<f64>,
}

impl<'a> ClampedChain<'a> {
    pub fn new(params: &'a RbmParameters, features: ArrayView2<'_, f64>) -> Result<Self> {
        if params.n_label_units() == 0 {
            return Err(Error::Config("model has no label units".into()));
        }
        if features.ncols() != params.n_data_units() {
            return Err(Error::shape("feature width", params.n_data_units(), features.ncols()));
        }
        let mut visible = Array2::zeros((features.nrows(), params.n_visible()));
        visible.slice_mut(s![.., ..params.n_data_units()]).assign(&features);
        let mut data_input = features.dot(&params.data_weights().t());
        math::add_row_vector(data_input.view_mut(), params.hidden_bias());
        Ok(Self {
            params,
            visible,
            data_input,
        })
    }

    pub fn visible(&self) -> ArrayView2<'_, f64> {
        self.visible.view()
    }

    pub fn labels(&self) -> ArrayView2<'_, f64> {
        self.visible.slice(s![.., self.params.n_data_units()..])
    }

    pub fn reset_labels(&mut self) {
        let start = self.params.n_data_units();
        self.visible.slice_mut(s![.., start..]).fill(0.0);
    }

    /// One sweep: sample hidden given the whole visible layer, then resample
    /// the label block. Returns the label-block probabilities of this sweep.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Array2<f64> {
        let start = self.params.n_data_units();
        let label_weights = self.params.label_weights();
        let mut hidden_pre = self.labels().dot(&label_weights.t());
        hidden_pre += &self.data_input;
        math::sigmoid_inplace(hidden_pre.view_mut());
        let hidden = math::bernoulli_matrix(hidden_pre.view(), rng);

        let mut label_probs = hidden.dot(&label_weights);
        math::add_row_vector(label_probs.view_mut(), self.params.label_bias());
        math::sigmoid_inplace(label_probs.view_mut());
        let sampled = math::bernoulli_matrix(label_probs.view(), rng);
        self.visible.slice_mut(s![.., start..]).assign(&sampled);
        label_probs
    }
}

/// Label-block probabilities from the last sweep of each round, averaged
/// over `n_rounds` rounds that each start from an all-zero label block.
pub fn label_probabilities(
    params: &RbmParameters,
    features: ArrayView2<'_, f64>,
    sampling: &SamplingConfig,
) -> Result<Array2<f64>> {
    if sampling.gibbs_steps == 0 || sampling.n_rounds == 0 {
        return Err(Error::Config("gibbs_steps and n_rounds must be positive".into()));
    }
    let mut chain = ClampedChain::new(params, features)?;
    let mut rng = seeded_rng(sampling.seed);
    let mut total = Array2::zeros((features.nrows(), params.n_label_units()));
    for _ in 0..sampling.n_rounds {
        chain.reset_labels();
        let mut last = Array2::zeros((0, 0));
        for _ in 0..sampling.gibbs_steps {
            last = chain.sweep(&mut rng);
        }
        total += &last;
    }
    Ok(total / sampling.n_rounds as f64)
}

pub fn predict(
    params: &RbmParameters,
    features: ArrayView2<'_, f64>,
    sampling: &SamplingConfig,
) -> Result<Vec<usize>> {
    label_probabilities(params, features, sampling).map(|p| decode_labels(p.view()))
}
