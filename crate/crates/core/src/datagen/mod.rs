//! Two-class Gaussian datasets and the preprocessing chain
//! `generate → center → sparsify → rescale_unit_interval → split`.
//!
//! Each step checks the [`Stage`] recorded in the dataset metadata, so the
//! chain cannot be applied out of order.

mod io;

use std::fmt;

use ndarray::{Array1, Array2, Axis};
use rand::seq::{index, SliceRandom};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{derive_seed, seeded_rng};

pub use io::{read_csv, sidecar_path, write_csv};

const SPARSIFY_STREAM: u64 = 0x5350_4152;
const SPLIT_STREAM: u64 = 0x5350_4c54;

/// Smallest value a nonzero entry is mapped to by [`rescale_unit_interval`].
pub const UNIT_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub mean_class0: Vec<f64>,
    pub mean_class1: Vec<f64>,
    pub covariance_scale: f64,
    pub seed: u64,
}

impl GaussianSpec {
    /// Class 0 centred at the origin, class 1 at the all-fives vector.
    pub fn standard(n_samples: usize, n_features: usize, covariance_scale: f64, seed: u64) -> Self {
        Self {
            n_samples,
            n_features,
            mean_class0: vec![0.0; n_features],
            mean_class1: vec![5.0; n_features],
            covariance_scale,
            seed,
        }
    }

    /// Per-coordinate variance: `covariance_scale · ‖μ1 − μ0‖`.
    pub fn variance(&self) -> f64 {
        let norm = self
            .mean_class0
            .iter()
            .zip(&self.mean_class1)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        self.covariance_scale * norm
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.n_samples % 2 != 0 {
            return Err(Error::Config(format!(
                "n_samples must be even and positive, got {}",
                self.n_samples
            )));
        }
        if self.n_features == 0 {
            return Err(Error::Config("n_features must be positive".into()));
        }
        if self.mean_class0.len() != self.n_features {
            return Err(Error::shape("class 0 mean", self.n_features, self.mean_class0.len()));
        }
        if self.mean_class1.len() != self.n_features {
            return Err(Error::shape("class 1 mean", self.n_features, self.mean_class1.len()));
        }
        if !(self.covariance_scale > 0.0 && self.covariance_scale.is_finite()) {
            return Err(Error::Config(format!(
                "covariance_scale must be positive, got {}",
                self.covariance_scale
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Raw,
    Centered,
    Sparse,
    UnitScaled,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Raw => "raw",
            Stage::Centered => "centered",
            Stage::Sparse => "sparse",
            Stage::UnitScaled => "unit_scaled",
        })
    }
}

/// Affine map of nonzero values onto `[epsilon, 1]`; zeros stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitScaling {
    pub min: f64,
    pub max: f64,
    pub epsilon: f64,
}

impl UnitScaling {
    /// Identity when every nonzero value already lies in (0, 1].
    pub fn is_identity(&self) -> bool {
        self.epsilon == 0.0
    }

    /// Maps one value. Out-of-range values (e.g. from test data) are clamped.
    pub fn apply(&self, v: f64) -> f64 {
        if v == 0.0 {
            return 0.0;
        }
        if self.is_identity() {
            return v.clamp(f64::MIN_POSITIVE, 1.0);
        }
        let t = ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0);
        self.epsilon + (1.0 - self.epsilon) * t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub n_features: usize,
    pub sparsity_fraction: f64,
    pub seed: u64,
    pub stage: Stage,
    /// Positions kept per row by [`sparsify`].
    pub kept_per_row: Option<usize>,
    pub scaling: Option<UnitScaling>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    /// Index of each row in the originally generated matrix.
    pub row_ids: Vec<usize>,
    pub meta: DatasetMeta,
}

impl Dataset {
    /// Wraps an existing feature matrix as a raw-stage dataset.
    pub fn from_parts(features: Array2<f64>, labels: Vec<usize>, seed: u64) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::shape("label count", features.nrows(), labels.len()));
        }
        Ok(Self {
            meta: DatasetMeta {
                n_features: features.ncols(),
                sparsity_fraction: 0.0,
                seed,
                stage: Stage::Raw,
                kept_per_row: None,
                scaling: None,
            },
            row_ids: (0..labels.len()).collect(),
            features,
            labels,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    /// Fraction of exactly-zero entries in the feature matrix.
    pub fn zero_fraction(&self) -> f64 {
        if self.features.is_empty() {
            return 0.0;
        }
        self.features.iter().filter(|&&v| v == 0.0).count() as f64 / self.features.len() as f64
    }

    fn expect_stage(&self, allowed: &[Stage], expected: &'static str) -> Result<()> {
        if allowed.contains(&self.meta.stage) {
            Ok(())
        } else {
            Err(Error::State {
                expected,
                found: self.meta.stage.to_string(),
            })
        }
    }

    fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select(Axis(0), rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            row_ids: rows.iter().map(|&r| self.row_ids[r]).collect(),
            meta: self.meta.clone(),
        }
    }
}

/// Samples half the rows from each class Gaussian, class 0 first.
pub fn generate(spec: &GaussianSpec) -> Result<Dataset> {
    spec.validate()?;
    let std = spec.variance().sqrt();
    let mut rng = seeded_rng(spec.seed);
    let half = spec.n_samples / 2;
    let mut features = Array2::zeros((spec.n_samples, spec.n_features));
    for (i, mut row) in features.rows_mut().into_iter().enumerate() {
        let mean = if i < half { &spec.mean_class0 } else { &spec.mean_class1 };
        for (x, &mu) in row.iter_mut().zip(mean) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *x = mu + std * z;
        }
    }
    let labels = (0..spec.n_samples).map(|i| usize::from(i >= half)).collect();
    Dataset::from_parts(features, labels, spec.seed)
}

/// Subtracts every column's mean.
pub fn center(mut data: Dataset) -> Result<Dataset> {
    data.expect_stage(&[Stage::Raw], "raw")?;
    if data.n_samples() > 0 {
        let means: Array1<f64> = data.features.mean_axis(Axis(0)).expect("non-empty");
        data.features -= &means;
    }
    data.meta.stage = Stage::Centered;
    Ok(data)
}

/// Keeps `round((1 − sparsity) · n_features)` uniformly chosen positions per
/// row and zeroes the rest.
pub fn sparsify(mut data: Dataset, sparsity: f64) -> Result<Dataset> {
    data.expect_stage(&[Stage::Centered], "centered")?;
    if !(0.0..1.0).contains(&sparsity) {
        return Err(Error::Domain(format!("sparsity must lie in [0, 1), got {sparsity}")));
    }
    let n = data.meta.n_features;
    let keep = ((1.0 - sparsity) * n as f64).round() as usize;
    if keep < n {
        let mut rng = seeded_rng(derive_seed(data.meta.seed, SPARSIFY_STREAM));
        let mut mask = vec![false; n];
        for mut row in data.features.rows_mut() {
            mask.iter_mut().for_each(|m| *m = false);
            for j in index::sample(&mut rng, n, keep) {
                mask[j] = true;
            }
            for (x, &kept) in row.iter_mut().zip(&mask) {
                if !kept {
                    *x = 0.0;
                }
            }
        }
    }
    data.meta.sparsity_fraction = sparsity;
    data.meta.kept_per_row = Some(keep);
    data.meta.stage = Stage::Sparse;
    Ok(data)
}

/// Maps nonzero entries onto `[ε, 1]` by the global nonzero min/max; zeros
/// stay exactly zero. The map is stored in `meta.scaling` for
/// [`apply_unit_scaling`].
pub fn rescale_unit_interval(data: Dataset) -> Result<Dataset> {
    data.expect_stage(&[Stage::Sparse, Stage::Centered], "sparse or centered")?;
    let (min, max) = data
        .features
        .iter()
        .filter(|&&v| v != 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(min < max) {
        return Err(Error::Domain(format!(
            "nonzero value range is degenerate (min {min}, max {max})"
        )));
    }
    let epsilon = if min > 0.0 && max <= 1.0 { 0.0 } else { UNIT_EPSILON };
    apply_unit_scaling(data, &UnitScaling { min, max, epsilon })
}

/// Applies a previously fitted [`UnitScaling`].
pub fn apply_unit_scaling(mut data: Dataset, scaling: &UnitScaling) -> Result<Dataset> {
    data.expect_stage(&[Stage::Sparse, Stage::Centered], "sparse or centered")?;
    data.features.mapv_inplace(|v| scaling.apply(v));
    data.meta.scaling = Some(*scaling);
    data.meta.stage = Stage::UnitScaled;
    Ok(data)
}

/// Stratified seeded split. Each class contributes
/// `round(train_fraction · class_count)` rows to the training part.
pub fn split(data: &Dataset, train_fraction: f64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut rng = seeded_rng(derive_seed(data.meta.seed, SPLIT_STREAM));
    let n_classes = data.labels.iter().max().map_or(0, |&m| m + 1);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..n_classes {
        let mut rows: Vec<usize> = (0..data.n_samples()).filter(|&i| data.labels[i] == class).collect();
        rows.shuffle(&mut rng);
        let cut = (train_fraction * rows.len() as f64).round() as usize;
        train.extend_from_slice(&rows[..cut]);
        test.extend_from_slice(&rows[cut..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Domain(format!(
            "split of {} rows at {train_fraction} leaves an empty part",
            data.n_samples()
        )));
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((data.select_rows(&train), data.select_rows(&test)))
}

/// Runs the full chain: generate, center, sparsify, rescale.
pub fn prepare(spec: &GaussianSpec, sparsity: f64) -> Result<Dataset> {
    let data = center(generate(spec)?)?;
    rescale_unit_interval(sparsify(data, sparsity)?)
}
