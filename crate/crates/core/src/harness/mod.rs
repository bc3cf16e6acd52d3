//! Experiment orchestration: the synthetic pipeline, the MNIST bit-flip
//! experiment, repetition/sweep scheduling, aggregation and CSV output.

mod pipeline;
mod report;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::backprop::SgdConfig;
use crate::error::{Error, Result};
use crate::rbm::{Algorithm, SamplingConfig, TrainConfig};

pub use pipeline::{run_experiment, run_mnist_repetition, run_pipeline, Cell, ExperimentOutput, MnistSource};
pub use report::{
    aggregate, emit, read_results, surface, SummaryRow, SurfaceRow, SweepTable, RESULTS_FILE, SPEC_FILE, SUMMARY_FILE,
    SURFACE_FILE, TIMINGS_FILE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    MnistFlip,
    DenseVsSparse,
    SparsitySweep,
    Surface3d,
    MlpVsRbm,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::MnistFlip => "mnist_flip",
            ExperimentKind::DenseVsSparse => "dense_vs_sparse",
            ExperimentKind::SparsitySweep => "sparsity_sweep",
            ExperimentKind::Surface3d => "surface_3d",
            ExperimentKind::MlpVsRbm => "mlp_vs_rbm",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        [
            ExperimentKind::MnistFlip,
            ExperimentKind::DenseVsSparse,
            ExperimentKind::SparsitySweep,
            ExperimentKind::Surface3d,
            ExperimentKind::MlpVsRbm,
        ]
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| Error::parse("experiment", format!("unknown experiment {name:?}")))
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    Lr,
    Mlp,
    Rbm,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lr => "LR",
            ModelKind::Mlp => "MLP",
            ModelKind::Rbm => "RBM",
        }
    }

    /// Tag mixed into the repetition seed to get this model's seed.
    pub fn seed_tag(self) -> u64 {
        match self {
            ModelKind::Lr => 1,
            ModelKind::Mlp => 2,
            ModelKind::Rbm => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSettings {
    pub n_samples: usize,
    pub covariance_scale: f64,
    pub train_fraction: f64,
}

impl Default for SyntheticSettings {
    fn default() -> Self {
        Self {
            n_samples: 2000,
            covariance_scale: DEFAULT_COVARIANCE_SCALE,
            train_fraction: 0.8,
        }
    }
}

/// Default per-coordinate variance multiplier for the synthetic Gaussians.
pub const DEFAULT_COVARIANCE_SCALE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnistSettings {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
    pub n_train: usize,
    pub n_test: usize,
    pub threshold: u8,
}

impl Default for MnistSettings {
    fn default() -> Self {
        let dir = PathBuf::from("data/mnist");
        Self {
            train_images: dir.join("train-images-idx3-ubyte.gz"),
            train_labels: dir.join("train-labels-idx1-ubyte.gz"),
            test_images: dir.join("t10k-images-idx3-ubyte.gz"),
            test_labels: dir.join("t10k-labels-idx1-ubyte.gz"),
            n_train: 5000,
            n_test: 1000,
            threshold: crate::mnist::DEFAULT_THRESHOLD,
        }
    }
}

/// Fully resolved settings of one experiment. Serialized as `spec.json`,
/// which is enough to re-run the experiment bit-for-bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentKind,
    pub models: Vec<ModelKind>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub dimensionality: Vec<usize>,
    pub sparsity: Vec<f64>,
    /// Pair the axes element-wise instead of taking their product.
    pub paired_axes: bool,
    pub synthetic: SyntheticSettings,
    pub mnist: MnistSettings,
    pub rbm_hidden: usize,
    pub mlp_hidden: usize,
    /// The seed field is replaced per run.
    pub rbm: TrainConfig,
    /// The seed field is replaced per run.
    pub sgd: SgdConfig,
    /// The seed field is replaced per run.
    pub sampling: SamplingConfig,
}

pub const SPARSITY_AXIS: [f64; 7] = [0.50, 0.60, 0.70, 0.80, 0.90, 0.95, 0.98];
pub const DIMENSIONALITY_AXIS: [usize; 4] = [500, 1000, 2000, 5000];

impl ExperimentSpec {
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let mut spec = Self {
            experiment,
            models: vec![ModelKind::Lr, ModelKind::Rbm],
            repetitions: 10,
            base_seed: 0,
            dimensionality: vec![5000],
            sparsity: SPARSITY_AXIS.to_vec(),
            paired_axes: false,
            synthetic: SyntheticSettings::default(),
            mnist: MnistSettings::default(),
            rbm_hidden: 500,
            mlp_hidden: 500,
            rbm: TrainConfig::default(),
            sgd: SgdConfig::default(),
            sampling: SamplingConfig::default(),
        };
        match experiment {
            ExperimentKind::MnistFlip => {
                spec.dimensionality = vec![crate::mnist::PIXELS];
                spec.sparsity = vec![];
                spec.rbm.epochs = 30;
                spec.rbm.algorithm = Algorithm::Cd;
            }
            ExperimentKind::DenseVsSparse => {
                spec.models = vec![ModelKind::Lr];
                spec.dimensionality = vec![500, 5000];
                spec.sparsity = vec![0.0, 0.95];
                spec.paired_axes = true;
            }
            ExperimentKind::SparsitySweep => {}
            ExperimentKind::Surface3d => spec.dimensionality = DIMENSIONALITY_AXIS.to_vec(),
            ExperimentKind::MlpVsRbm => {
                spec.models = vec![ModelKind::Mlp, ModelKind::Rbm];
                spec.sparsity = vec![0.95];
            }
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::Config("at least one model is required".into()));
        }
        if self.rbm_hidden == 0 || self.mlp_hidden == 0 {
            return Err(Error::Config("hidden layer sizes must be positive".into()));
        }
        self.rbm.validate()?;
        self.sgd.validate()?;
        if self.sampling.gibbs_steps == 0 || self.sampling.n_rounds == 0 {
            return Err(Error::Config("gibbs_steps and n_rounds must be positive".into()));
        }
        if self.experiment == ExperimentKind::MnistFlip {
            if self.mnist.n_train == 0 || self.mnist.n_test == 0 {
                return Err(Error::Config("MNIST sample sizes must be positive".into()));
            }
            return Ok(());
        }
        if self.dimensionality.is_empty() || self.sparsity.is_empty() {
            return Err(Error::Config("sweep axes must be non-empty".into()));
        }
        if self.paired_axes && self.dimensionality.len() != self.sparsity.len() {
            return Err(Error::Config(format!(
                "paired axes need equal lengths, got {} dimensionalities and {} sparsities",
                self.dimensionality.len(),
                self.sparsity.len()
            )));
        }
        if let Some(&s) = self.sparsity.iter().find(|s| !(0.0..1.0).contains(*s)) {
            return Err(Error::Config(format!("sparsity {s} outside [0, 1)")));
        }
        if self.dimensionality.contains(&0) {
            return Err(Error::Config("dimensionality must be positive".into()));
        }
        let s = &self.synthetic;
        if s.n_samples == 0 || s.n_samples % 2 != 0 {
            return Err(Error::Config(format!("n_samples must be even and positive, got {}", s.n_samples)));
        }
        if !(s.covariance_scale > 0.0) {
            return Err(Error::Config("covariance_scale must be positive".into()));
        }
        if !(s.train_fraction > 0.0 && s.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Grid cells in run order.
    pub fn cells(&self) -> Vec<Cell> {
        if self.experiment == ExperimentKind::MnistFlip {
            return vec![Cell {
                dimensionality: crate::mnist::PIXELS,
                sparsity: 0.0,
            }];
        }
        if self.paired_axes {
            self.dimensionality
                .iter()
                .zip(&self.sparsity)
                .map(|(&dimensionality, &sparsity)| Cell { dimensionality, sparsity })
                .collect()
        } else {
            self.dimensionality
                .iter()
                .flat_map(|&dimensionality| {
                    self.sparsity.iter().map(move |&sparsity| Cell { dimensionality, sparsity })
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub model: String,
    pub experiment: ExperimentKind,
    pub dimensionality: usize,
    pub sparsity: f64,
    pub repetition: usize,
    pub train_acc: f64,
    pub test_acc: f64,
    /// Data seed of the repetition; model seeds derive from it.
    pub seed: u64,
    pub wall_time_s: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for kind in [
            ExperimentKind::MnistFlip,
            ExperimentKind::DenseVsSparse,
            ExperimentKind::SparsitySweep,
            ExperimentKind::Surface3d,
            ExperimentKind::MlpVsRbm,
        ] {
            let spec = ExperimentSpec::defaults(kind);
            spec.validate().unwrap();
            assert_eq!(ExperimentKind::parse(kind.name()).unwrap(), kind);
        }
    }

    #[test]
    fn grid_shapes() {
        assert_eq!(ExperimentSpec::defaults(ExperimentKind::Surface3d).cells().len(), 28);
        assert_eq!(ExperimentSpec::defaults(ExperimentKind::DenseVsSparse).cells().len(), 2);
    }

    #[test]
    fn empty_axis_is_rejected() {
        let mut spec = ExperimentSpec::defaults(ExperimentKind::SparsitySweep);
        spec.sparsity.clear();
        assert!(spec.validate().unwrap_err().is_config());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = ExperimentSpec::defaults(ExperimentKind::Surface3d);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentSpec>(&json).unwrap(), spec);
    }
}
