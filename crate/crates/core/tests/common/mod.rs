//! Brute-force references for small RBMs. Nothing here calls the library's
//! energy or conditional code.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, Normal};
use sdr_hebb::math::seeded_rng;
use sdr_hebb::rbm::RbmParameters;

/// Bits of `index`, least significant first, as 0/1 floats.
pub fn bits(index: usize, len: usize) -> Vec<f64> {
    (0..len).map(|k| ((index >> k) & 1) as f64).collect()
}

/// Gaussian weights and biases with standard deviation `std`.
pub fn random_params(n_visible: usize, n_hidden: usize, n_label_units: usize, std: f64, seed: u64) -> RbmParameters {
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0, std).unwrap();
    let w = Array2::from_shape_fn((n_hidden, n_visible), |_| normal.sample(&mut rng));
    let b = Array1::from_shape_fn(n_visible, |_| normal.sample(&mut rng));
    let c = Array1::from_shape_fn(n_hidden, |_| normal.sample(&mut rng));
    RbmParameters::new(w, b, c, n_label_units).unwrap()
}

/// Energy summed term by term with plain loops.
pub fn energy(params: &RbmParameters, v: &[f64], h: &[f64]) -> f64 {
    let w = params.weights();
    let b = params.visible_bias();
    let c = params.hidden_bias();
    let mut e = 0.0;
    for i in 0..h.len() {
        for j in 0..v.len() {
            e -= w[[i, j]] * h[i] * v[j];
        }
    }
    for j in 0..v.len() {
        e -= b[j] * v[j];
    }
    for i in 0..h.len() {
        e -= c[i] * h[i];
    }
    e
}

/// Every joint state with its unnormalized weight `exp(-E)`.
pub struct Joint {
    pub n_visible: usize,
    pub n_hidden: usize,
    /// Indexed `[v_index][h_index]`.
    pub weight: Vec<Vec<f64>>,
    pub partition: f64,
}

impl Joint {
    pub fn enumerate(params: &RbmParameters) -> Self {
        let (m, n) = (params.n_visible(), params.n_hidden());
        let mut weight = vec![vec![0.0; 1 << n]; 1 << m];
        let mut partition = 0.0;
        for (vi, row) in weight.iter_mut().enumerate() {
            let v = bits(vi, m);
            for (hi, w) in row.iter_mut().enumerate() {
                *w = (-energy(params, &v, &bits(hi, n))).exp();
                partition += *w;
            }
        }
        Self {
            n_visible: m,
            n_hidden: n,
            weight,
            partition,
        }
    }

    pub fn probability(&self, vi: usize, hi: usize) -> f64 {
        self.weight[vi][hi] / self.partition
    }

    /// `p(h_i = 1 | v)` for a binary visible configuration.
    pub fn hidden_conditional(&self, vi: usize) -> Vec<f64> {
        let row = &self.weight[vi];
        let total: f64 = row.iter().sum();
        (0..self.n_hidden)
            .map(|i| {
                row.iter()
                    .enumerate()
                    .filter(|(hi, _)| (hi >> i) & 1 == 1)
                    .map(|(_, w)| w)
                    .sum::<f64>()
                    / total
            })
            .collect()
    }

    /// `p(v_j = 1 | h)` for a binary hidden configuration.
    pub fn visible_conditional(&self, hi: usize) -> Vec<f64> {
        let total: f64 = self.weight.iter().map(|row| row[hi]).sum();
        (0..self.n_visible)
            .map(|j| {
                self.weight
                    .iter()
                    .enumerate()
                    .filter(|(vi, _)| (vi >> j) & 1 == 1)
                    .map(|(_, row)| row[hi])
                    .sum::<f64>()
                    / total
            })
            .collect()
    }

    /// Exact average log-likelihood gradient over binary `data` rows:
    /// `⟨v hᵀ⟩_data − ⟨v hᵀ⟩_model` plus both bias terms.
    pub fn log_likelihood_gradient(&self, data: &Array2<f64>) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
        let (m, n) = (self.n_visible, self.n_hidden);
        let mut dw = Array2::zeros((n, m));
        let mut db = Array1::zeros(m);
        let mut dc = Array1::zeros(n);
        let rows = data.nrows() as f64;
        for row in data.rows() {
            let vi = row.iter().enumerate().map(|(j, &x)| (x as usize) << j).sum::<usize>();
            let ph = self.hidden_conditional(vi);
            for i in 0..n {
                dc[i] += ph[i] / rows;
                for j in 0..m {
                    dw[[i, j]] += ph[i] * row[j] / rows;
                }
            }
            for j in 0..m {
                db[j] += row[j] / rows;
            }
        }
        for (vi, hw) in self.weight.iter().enumerate() {
            let v = bits(vi, m);
            for (hi, &w) in hw.iter().enumerate() {
                let p = w / self.partition;
                let h = bits(hi, n);
                for i in 0..n {
                    dc[i] -= p * h[i];
                    for j in 0..m {
                        dw[[i, j]] -= p * h[i] * v[j];
                    }
                }
                for j in 0..m {
                    db[j] -= p * v[j];
                }
            }
        }
        (dw, db, dc)
    }
}

/// Most probable label under the exact conditional `p(label | data)`, for a
/// single label unit or a one-hot block after the data bits.
pub fn exact_label_argmax(joint: &Joint, data: &[f64], n_label_units: usize) -> usize {
    let n_data = data.len();
    let data_index = data.iter().enumerate().map(|(j, &x)| (x as usize) << j).sum::<usize>();
    let mass = |label_bits: usize| -> f64 { joint.weight[data_index | (label_bits << n_data)].iter().sum() };
    if n_label_units == 1 {
        usize::from(mass(1) > mass(0))
    } else {
        let scores: Vec<f64> = (0..n_label_units).map(|k| mass(1 << k)).collect();
        let mut best = 0;
        for (k, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = k;
            }
        }
        best
    }
}
