use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{RbmParameters, TrainConfig};
use crate::error::{Error, Result};

/// JSON form of a trained RBM. Weights are row-major `n_hidden × n_visible`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbmModelFile {
    pub n_visible: usize,
    pub n_hidden: usize,
    pub n_label_units: usize,
    pub weights: Vec<f64>,
    pub visible_bias: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub train_config: Option<TrainConfig>,
    pub seed: Option<u64>,
}

impl RbmModelFile {
    pub fn from_params(params: &RbmParameters, train_config: Option<TrainConfig>) -> Self {
        let seed = train_config.as_ref().map(|c| c.seed);
        Self {
            n_visible: params.n_visible(),
            n_hidden: params.n_hidden(),
            n_label_units: params.n_label_units(),
            weights: params.weights().iter().copied().collect(),
            visible_bias: params.visible_bias().to_vec(),
            hidden_bias: params.hidden_bias().to_vec(),
            train_config,
            seed,
        }
    }

    pub fn to_params(&self) -> Result<RbmParameters> {
        let weights = Array2::from_shape_vec((self.n_hidden, self.n_visible), self.weights.clone())
            .map_err(|_| {
                Error::shape(
                    "model weights",
                    self.n_hidden * self.n_visible,
                    self.weights.len(),
                )
            })?;
        RbmParameters::new(
            weights,
            Array1::from(self.visible_bias.clone()),
            Array1::from(self.hidden_bias.clone()),
            self.n_label_units,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self).expect("model serializes");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))
    }
}
