//! Scalar activations and small array helpers shared by the models.

use ndarray::{Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis, Zip};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Generator used everywhere a seed is accepted.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn seeded_stream(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; derives well-separated child seeds from a parent.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^x) without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn sigmoid_inplace(mut a: ArrayViewMut2<'_, f64>) {
    a.mapv_inplace(sigmoid);
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Draws a 0/1 matrix with `P(out[k] = 1) = probs[k]`. Callers guarantee
/// `probs` lies in [0, 1].
pub(crate) fn bernoulli_matrix<R: Rng + ?Sized>(probs: ArrayView2<'_, f64>, rng: &mut R) -> Array2<f64> {
    let mut out = Array2::zeros(probs.raw_dim());
    // Row-major walk keeps the draw order independent of memory layout.
    for (o, &p) in out.iter_mut().zip(probs.iter()) {
        *o = if rng.gen::<f64>() < p { 1.0 } else { 0.0 };
    }
    out
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain(format!("probability {p} outside [0, 1]")))
    }
}

pub(crate) fn column_mean(a: ArrayView2<'_, f64>) -> ndarray::Array1<f64> {
    let n = a.nrows().max(1) as f64;
    a.sum_axis(Axis(0)) / n
}

pub(crate) fn all_finite(a: ArrayView2<'_, f64>) -> bool {
    a.iter().all(|v| v.is_finite())
}

pub(crate) fn add_row_vector(mut a: ArrayViewMut2<'_, f64>, v: ArrayView1<'_, f64>) {
    Zip::from(a.rows_mut()).for_each(|mut row| row += &v);
}
