use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Network;
use crate::error::{Error, Result};
use crate::math::seeded_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub stop_at_perfect_train: bool,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            batch_size: 50,
            max_epochs: 500,
            stop_at_perfect_train: true,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdEpoch {
    pub epoch: usize,
    /// Mean cross-entropy over the full training set after the epoch.
    pub loss: f64,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SgdLog {
    pub epochs: Vec<SgdEpoch>,
}

pub fn accuracy(predicted: &[usize], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(labels).filter(|(p, y)| p == y).count();
    hits as f64 / labels.len() as f64
}

/// Mini-batch SGD, `params -= η·∇loss` per batch, reshuffling every epoch.
/// Stops early once training accuracy reaches 100% if the config asks for it.
pub fn sgd_fit<N: Network>(
    features: ArrayView2<'_, f64>,
    labels: &[usize],
    init: N,
    config: &SgdConfig,
) -> Result<(N, SgdLog)> {
    config.validate()?;
    if features.nrows() == 0 {
        return Err(Error::Domain("cannot train on an empty dataset".into()));
    }
    if features.nrows() != labels.len() {
        return Err(Error::shape("label count", features.nrows(), labels.len()));
    }
    let mut params = init;
    let mut rng = seeded_rng(config.seed);
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let mut log = SgdLog::default();
    for epoch in 0..config.max_epochs {
        order.shuffle(&mut rng);
        for idx in order.chunks(config.batch_size) {
            let x = features.select(Axis(0), idx);
            let y: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
            let (_, grad) = params.loss_and_gradients(x.view(), &y)?;
            params.add_scaled(&grad, -config.learning_rate);
        }
        if !params.is_finite() {
            return Err(Error::NonFinite { epoch });
        }
        let (loss, _) = params.loss_and_gradients(features, labels)?;
        let train_accuracy = accuracy(&params.predict(features)?, labels);
        log.epochs.push(SgdEpoch {
            epoch,
            loss,
            train_accuracy,
        });
        if config.stop_at_perfect_train && train_accuracy == 1.0 {
            break;
        }
    }
    Ok((params, log))
}
