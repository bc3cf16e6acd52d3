use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use ndarray::ArrayView2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{aggregate, surface, SurfaceRow, SweepTable};
use super::{ExperimentKind, ExperimentSpec, ModelKind, RunResult};
use crate::backprop::{accuracy, sgd_fit, LrParameters, MlpParameters, Network, SgdConfig};
use crate::datagen::{self, Dataset, GaussianSpec};
use crate::error::{Error, Result, StepContext};
use crate::math::{derive_seed, seeded_rng};
use crate::mnist::{self, ImageSet};
use crate::rbm::{self, RbmLayout, SamplingConfig, TrainConfig};

/// One point of the (dimensionality, sparsity) grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub dimensionality: usize,
    pub sparsity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub spec: ExperimentSpec,
    pub results: Vec<RunResult>,
    pub table: SweepTable,
    /// RBM − LR differences per cell; empty unless both models ran.
    pub surface: Vec<SurfaceRow>,
}

/// Binarized MNIST train and test pools.
#[derive(Debug, Clone)]
pub struct MnistSource {
    pub train: ImageSet,
    pub test: ImageSet,
}

impl MnistSource {
    pub fn load(spec: &ExperimentSpec) -> Result<Self> {
        let m = &spec.mnist;
        let train = mnist::load_idx(&m.train_images, &m.train_labels).step("load MNIST train")?;
        let test = mnist::load_idx(&m.test_images, &m.test_labels).step("load MNIST test")?;
        Ok(Self {
            train: mnist::binarize(&train, m.threshold)?,
            test: mnist::binarize(&test, m.threshold)?,
        })
    }
}

struct Split<'a> {
    train_x: ArrayView2<'a, f64>,
    train_y: &'a [usize],
    test_x: ArrayView2<'a, f64>,
    test_y: &'a [usize],
    n_classes: usize,
}

fn rbm_config(spec: &ExperimentSpec, seed: u64) -> (TrainConfig, SamplingConfig) {
    let train = TrainConfig {
        seed,
        ..spec.rbm.clone()
    };
    let sampling = SamplingConfig {
        seed: derive_seed(seed, 0x5052_4544),
        ..spec.sampling.clone()
    };
    (train, sampling)
}

fn fit_backprop<N: Network>(split: &Split<'_>, init: N, config: &SgdConfig) -> Result<(f64, f64)> {
    let (model, _) = sgd_fit(split.train_x, split.train_y, init, config)?;
    let train = accuracy(&model.predict(split.train_x)?, split.train_y);
    let test = accuracy(&model.predict(split.test_x)?, split.test_y);
    Ok((train, test))
}

/// Trains one model on the split and returns (train, test) accuracy.
fn evaluate(spec: &ExperimentSpec, model: ModelKind, split: &Split<'_>, data_seed: u64) -> Result<(f64, f64)> {
    let seed = derive_seed(data_seed, model.seed_tag());
    let n_features = split.train_x.ncols();
    let sgd = SgdConfig {
        seed,
        ..spec.sgd.clone()
    };
    match model {
        ModelKind::Lr => {
            let init = LrParameters::random(n_features, split.n_classes, &mut seeded_rng(seed));
            fit_backprop(split, init, &sgd).step("train LR")
        }
        ModelKind::Mlp => {
            let init = MlpParameters::random(n_features, spec.mlp_hidden, split.n_classes, &mut seeded_rng(seed));
            fit_backprop(split, init, &sgd).step("train MLP")
        }
        ModelKind::Rbm => {
            let (config, sampling) = rbm_config(spec, seed);
            let layout = RbmLayout::for_classes(spec.rbm_hidden, split.n_classes);
            let (params, _) = rbm::fit(split.train_x, split.train_y, layout, &config).step("train RBM")?;
            let train = rbm::predict(&params, split.train_x, &sampling).step("predict RBM")?;
            let test = rbm::predict(&params, split.test_x, &sampling).step("predict RBM")?;
            Ok((accuracy(&train, split.train_y), accuracy(&test, split.test_y)))
        }
    }
}

/// Synthetic pipeline for one grid cell and repetition: generate, center,
/// sparsify, rescale, split, then train and score every requested model on
/// the same split.
pub fn run_pipeline(spec: &ExperimentSpec, cell: Cell, repetition: usize) -> Result<Vec<RunResult>> {
    if spec.experiment == ExperimentKind::MnistFlip {
        return Err(Error::Config("use run_mnist_repetition for the MNIST experiment".into()));
    }
    let data_seed = spec.base_seed.wrapping_add(repetition as u64);
    let gaussian = GaussianSpec::standard(
        spec.synthetic.n_samples,
        cell.dimensionality,
        spec.synthetic.covariance_scale,
        data_seed,
    );
    let data = datagen::generate(&gaussian).step("generate")?;
    let data = datagen::center(data).step("center")?;
    let data = datagen::sparsify(data, cell.sparsity).step("sparsify")?;
    let data = datagen::rescale_unit_interval(data).step("rescale")?;
    let (train, test) = datagen::split(&data, spec.synthetic.train_fraction).step("split")?;

    let split = Split {
        train_x: train.features.view(),
        train_y: &train.labels,
        test_x: test.features.view(),
        test_y: &test.labels,
        n_classes: 2,
    };
    spec.models
        .iter()
        .map(|&model| {
            let start = Instant::now();
            let (train_acc, test_acc) = evaluate(spec, model, &split, data_seed)?;
            Ok(RunResult {
                model: model.name().to_string(),
                experiment: spec.experiment,
                dimensionality: cell.dimensionality,
                sparsity: cell.sparsity,
                repetition,
                train_acc,
                test_acc,
                seed: data_seed,
                wall_time_s: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// One repetition of the bit-flip experiment: every model on the original
/// and on the flipped version of the same stratified sample. Model ids are
/// `"<model>-original"` / `"<model>-flipped"`, and the sparsity column holds
/// the zero fraction of the training sample.
pub fn run_mnist_repetition(spec: &ExperimentSpec, source: &MnistSource, repetition: usize) -> Result<Vec<RunResult>> {
    let data_seed = spec.base_seed.wrapping_add(repetition as u64);
    let train = mnist::subsample(&source.train, spec.mnist.n_train, data_seed).step("subsample train")?;
    let test = mnist::subsample(&source.test, spec.mnist.n_test, derive_seed(data_seed, 0x7465_7374))
        .step("subsample test")?;
    let variants = [
        ("original", train.clone(), test.clone()),
        ("flipped", mnist::flip(&train)?, mnist::flip(&test)?),
    ];

    let mut results = Vec::new();
    for (name, train, test) in variants {
        let sparsity = train.zero_fraction();
        let train: Dataset = train.to_dataset(data_seed);
        let test: Dataset = test.to_dataset(data_seed);
        let split = Split {
            train_x: train.features.view(),
            train_y: &train.labels,
            test_x: test.features.view(),
            test_y: &test.labels,
            n_classes: mnist::N_DIGITS,
        };
        for &model in &spec.models {
            let start = Instant::now();
            let (train_acc, test_acc) = evaluate(spec, model, &split, data_seed)?;
            results.push(RunResult {
                model: format!("{}-{name}", model.name()),
                experiment: spec.experiment,
                dimensionality: train.meta.n_features,
                sparsity,
                repetition,
                train_acc,
                test_acc,
                seed: data_seed,
                wall_time_s: start.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(results)
}

/// Runs every (cell, repetition) job on up to `jobs` threads. `progress` is
/// called with (completed, total) after each job. Results come back in grid
/// order regardless of scheduling.
pub fn run_experiment(
    spec: &ExperimentSpec,
    jobs: usize,
    progress: &(dyn Fn(usize, usize) + Sync),
) -> Result<ExperimentOutput> {
    spec.validate()?;
    let source = if spec.experiment == ExperimentKind::MnistFlip {
        Some(MnistSource::load(spec)?)
    } else {
        None
    };
    let cells = spec.cells();
    let grid: Vec<(Cell, usize)> = cells
        .iter()
        .flat_map(|&cell| (0..spec.repetitions).map(move |rep| (cell, rep)))
        .collect();
    let total = grid.len();
    let done = AtomicUsize::new(0);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let per_job: Vec<Result<Vec<RunResult>>> = pool.install(|| {
        grid.par_iter()
            .map(|&(cell, rep)| {
                let out = match &source {
                    Some(source) => run_mnist_repetition(spec, source, rep),
                    None => run_pipeline(spec, cell, rep),
                };
                let finished = done.fetch_add(1, Ordering::SeqCst) + 1;
                progress(finished, total);
                out
            })
            .collect()
    });

    let mut results = Vec::new();
    for job in per_job {
        results.extend(job?);
    }
    let table = aggregate(&results)?;
    let surface = surface(&table);
    Ok(ExperimentOutput {
        spec: spec.clone(),
        results,
        table,
        surface,
    })
}
