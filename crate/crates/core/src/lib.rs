//! Bernoulli RBM classifiers trained with contrastive divergence, backprop
//! baselines, a sparse Gaussian dataset generator, MNIST IDX tooling and an
//! experiment harness comparing them on sparse high-dimensional data.
//!
//! ```
//! use sdr_hebb::datagen::{self, GaussianSpec};
//! use sdr_hebb::rbm::{self, RbmLayout, SamplingConfig, TrainConfig};
//!
//! let data = datagen::prepare(&GaussianSpec::standard(40, 20, 0.05, 1), 0.5)?;
//! let (train, test) = datagen::split(&data, 0.8)?;
//! let config = TrainConfig { epochs: 20, batch_size: 8, ..TrainConfig::default() };
//! let (model, _log) = rbm::fit(train.features.view(), &train.labels, RbmLayout::for_classes(16, 2), &config)?;
//! let predicted = rbm::predict(&model, test.features.view(), &SamplingConfig::default())?;
//! assert_eq!(predicted.len(), test.labels.len());
//! # Ok::<(), sdr_hebb::Error>(())
//! ```

pub mod backprop;
pub mod datagen;
pub mod error;
pub mod harness;
pub mod math;
pub mod mnist;
pub mod rbm;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/rbm.md")]
    pub mod rbm {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    pub mod baselines {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    pub mod synthetic {}
    #[doc = include_str!("../../../book/src/mnist.md")]
    pub mod mnist {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    pub mod experiments {}
    #[doc = include_str!("../../../book/src/reproducibility.md")]
    pub mod reproducibility {}
}
