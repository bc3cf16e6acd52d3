use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::gradient::{run_chain, GibbsChainState};
use super::RbmParameters;
use crate::error::{Error, Result};
use crate::math::{self, seeded_rng, seeded_stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Algorithm {
    Cd,
    Pcd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub cd_steps: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub algorithm: Algorithm,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            cd_steps: 1,
            batch_size: 50,
            epochs: 100,
            algorithm: Algorithm::Pcd,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.cd_steps == 0 {
            return Err(Error::Config("cd_steps must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbmLayout {
    pub n_hidden: usize,
    pub n_label_units: usize,
}

impl RbmLayout {
    /// One label unit for two classes, a one-hot block otherwise.
    pub fn for_classes(n_hidden: usize, n_classes: usize) -> Self {
        Self {
            n_hidden,
            n_label_units: if n_classes <= 2 { 1 } else { n_classes },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean squared difference between each batch and its mean-field
    /// one-step reconstruction, averaged over the epoch.
    pub reconstruction_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
}

/// Label block rows: a single 0/1 unit, or one-hot over `n_label_units`.
pub fn encode_labels(labels: &[usize], n_label_units: usize) -> Result<Array2<f64>> {
    if n_label_units == 0 {
        return Err(Error::Config("at least one label unit is required".into()));
    }
    let mut block = Array2::zeros((labels.len(), n_label_units));
    for (row, &label) in labels.iter().enumerate() {
        if n_label_units == 1 {
            if label > 1 {
                return Err(Error::Domain(format!(
                    "label {label} does not fit a single label unit"
                )));
            }
            block[[row, 0]] = label as f64;
        } else {
            if label >= n_label_units {
                return Err(Error::Domain(format!(
                    "label {label} does not fit {n_label_units} label units"
                )));
            }
            block[[row, label]] = 1.0;
        }
    }
    Ok(block)
}

/// Threshold 0.5 for one unit, argmax (lowest index on ties) otherwise.
pub fn decode_labels(label_probs: ArrayView2<'_, f64>) -> Vec<usize> {
    if label_probs.ncols() == 1 {
        label_probs.column(0).iter().map(|&p| usize::from(p > 0.5)).collect()
    } else {
        label_probs.rows().into_iter().map(math::argmax).collect()
    }
}

fn joint_visible(features: ArrayView2<'_, f64>, labels: &[usize], n_label_units: usize) -> Result<Array2<f64>> {
    if features.nrows() != labels.len() {
        return Err(Error::shape("label count", features.nrows(), labels.len()));
    }
    if let Some(bad) = features.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::Domain(format!("feature value {bad} outside [0, 1]")));
    }
    let block = encode_labels(labels, n_label_units)?;
    let mut visible = Array2::zeros((features.nrows(), features.ncols() + n_label_units));
    visible.slice_mut(s![.., ..features.ncols()]).assign(&features);
    visible.slice_mut(s![.., features.ncols()..]).assign(&block);
    Ok(visible)
}

/// Trains on the joint data+label visible layer.
///
/// Parameters start from [`RbmParameters::random`] and move by
/// `learning_rate · gradient` per mini-batch; rows are reshuffled every
/// epoch. With PCD, one chain per batch row is started from the first
/// training batch.
pub fn fit(
    features: ArrayView2<'_, f64>,
    labels: &[usize],
    layout: RbmLayout,
    config: &TrainConfig,
) -> Result<(RbmParameters, TrainingLog)> {
    fit_with_chains(features, labels, layout, config).map(|(p, log, _)| (p, log))
}

/// [`fit`], also returning the persistent chains when PCD is used.
pub fn fit_with_chains(
    features: ArrayView2<'_, f64>,
    labels: &[usize],
    layout: RbmLayout,
    config: &TrainConfig,
) -> Result<(RbmParameters, TrainingLog, Option<GibbsChainState>)> {
    config.validate()?;
    if layout.n_hidden == 0 {
        return Err(Error::Config("n_hidden must be positive".into()));
    }
    if layout.n_label_units == 0 {
        return Err(Error::Config("a classifier needs at least one label unit".into()));
    }
    if features.nrows() == 0 {
        return Err(Error::Domain("cannot train on an empty dataset".into()));
    }
    let visible = joint_visible(features, labels, layout.n_label_units)?;

    let mut rng = seeded_rng(config.seed);
    let mut params = RbmParameters::random(visible.ncols(), layout.n_hidden, layout.n_label_units, &mut rng)?;
    let mut chains: Option<GibbsChainState> = None;
    let mut order: Vec<usize> = (0..visible.nrows()).collect();
    let mut log = TrainingLog::default();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut squared_error = 0.0;
        let mut entries = 0usize;
        for idx in order.chunks(config.batch_size) {
            let batch = visible.select(Axis(0), idx);
            let positive_hidden = params.hidden_probs(batch.view());
            squared_error += squared_reconstruction_error(&params, batch.view(), positive_hidden.view());
            entries += batch.len();
            let negative = match config.algorithm {
                Algorithm::Cd => run_chain(
                    &params,
                    batch.view(),
                    Some(positive_hidden.clone()),
                    config.cd_steps,
                    &mut rng,
                ),
                Algorithm::Pcd => {
                    let mut state = match chains.take() {
                        Some(state) => state,
                        None => GibbsChainState::from_batch(
                            &params,
                            batch.view(),
                            seeded_stream(config.seed, 1),
                        )?,
                    };
                    let end = run_chain(&params, state.visible.view(), None, config.cd_steps, &mut state.rng);
                    state.visible = end.visible.clone();
                    state.hidden = end.hidden.clone();
                    chains = Some(state);
                    end
                }
            };
            // params += η (data moments − model moments), batch means
            let lr = config.learning_rate;
            params.add_moments(lr / batch.nrows() as f64, batch.view(), positive_hidden.view());
            params.add_moments(
                -lr / negative.visible_probs.nrows() as f64,
                negative.visible_probs.view(),
                negative.hidden_probs.view(),
            );
        }
        if !params.is_finite() {
            return Err(Error::NonFinite { epoch });
        }
        log.epochs.push(EpochRecord {
            epoch,
            reconstruction_error: squared_error / entries as f64,
        });
    }
    Ok((params, log, chains))
}

fn squared_reconstruction_error(params: &RbmParameters, batch: ArrayView2<'_, f64>, hidden: ArrayView2<'_, f64>) -> f64 {
    let recon = params.visible_probs(hidden);
    recon
        .iter()
        .zip(batch.iter())
        .map(|(r, v)| (r - v) * (r - v))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> (Array2<f64>, Vec<usize>) {
        let x = array![[0.9, 0.0, 0.2], [0.8, 0.1, 0.0], [0.0, 0.9, 0.7], [0.1, 1.0, 0.9]];
        (x, vec![0, 0, 1, 1])
    }

    #[test]
    fn encode_single_and_one_hot() {
        assert_eq!(encode_labels(&[0, 1, 1], 1).unwrap(), array![[0.0], [1.0], [1.0]]);
        assert_eq!(
            encode_labels(&[2, 0], 3).unwrap(),
            array![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]
        );
        assert!(matches!(encode_labels(&[2], 1), Err(Error::Domain(_))));
        assert!(matches!(encode_labels(&[3], 3), Err(Error::Domain(_))));
    }

    #[test]
    fn decode_threshold_and_argmax() {
        assert_eq!(decode_labels(array![[0.2], [0.5], [0.51]].view()), vec![0, 0, 1]);
        assert_eq!(decode_labels(array![[0.3, 0.3, 0.1], [0.1, 0.2, 0.7]].view()), vec![0, 2]);
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let (x, y) = toy();
        let config = TrainConfig { epochs: 0, seed: 4, ..TrainConfig::default() };
        let layout = RbmLayout { n_hidden: 5, n_label_units: 1 };
        let (params, log) = fit(x.view(), &y, layout, &config).unwrap();
        let init = RbmParameters::random(4, 5, 1, &mut seeded_rng(4)).unwrap();
        assert_eq!(params, init);
        assert!(log.epochs.is_empty());
    }

    #[test]
    fn config_and_domain_errors() {
        let (x, y) = toy();
        let layout = RbmLayout { n_hidden: 0, n_label_units: 1 };
        assert!(matches!(fit(x.view(), &y, layout, &TrainConfig::default()), Err(Error::Config(_))));
        let layout = RbmLayout { n_hidden: 3, n_label_units: 1 };
        let bad_lr = TrainConfig { learning_rate: 0.0, ..TrainConfig::default() };
        assert!(matches!(fit(x.view(), &y, layout, &bad_lr), Err(Error::Config(_))));
        let mut out_of_range = x.clone();
        out_of_range[[0, 0]] = 1.5;
        assert!(matches!(
            fit(out_of_range.view(), &y, layout, &TrainConfig::default()),
            Err(Error::Domain(_))
        ));
        assert!(matches!(fit(x.view(), &[0, 1, 2, 0], layout, &TrainConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn log_is_indexed_by_epoch() {
        let (x, y) = toy();
        let config = TrainConfig { epochs: 7, batch_size: 3, ..TrainConfig::default() };
        let (params, log) = fit(x.view(), &y, RbmLayout { n_hidden: 4, n_label_units: 1 }, &config).unwrap();
        assert!(params.is_finite());
        let epochs: Vec<usize> = log.epochs.iter().map(|r| r.epoch).collect();
        assert_eq!(epochs, (0..7).collect::<Vec<_>>());
        assert!(log.epochs.iter().all(|r| r.reconstruction_error.is_finite()));
    }

    #[test]
    fn identical_seeds_give_identical_models() {
        let (x, y) = toy();
        for algorithm in [Algorithm::Cd, Algorithm::Pcd] {
            let config = TrainConfig { epochs: 5, batch_size: 2, algorithm, seed: 77, ..TrainConfig::default() };
            let layout = RbmLayout { n_hidden: 3, n_label_units: 1 };
            let a = fit(x.view(), &y, layout, &config).unwrap();
            let b = fit(x.view(), &y, layout, &config).unwrap();
            assert_eq!(a, b);
        }
    }
}
