use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng;

use super::RbmParameters;
use crate::error::{Error, Result};
use crate::math::{self, SeededRng};

/// First and second moments of one phase: batch means of `h ⊗ v`, `v`, `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStatistics {
    /// `n_hidden × n_visible`, entry `(i, j)` is `mean(h_i v_j)`.
    pub weights: Array2<f64>,
    pub visible: Array1<f64>,
    pub hidden: Array1<f64>,
}

impl PhaseStatistics {
    fn from_states(visible: ArrayView2<'_, f64>, hidden: ArrayView2<'_, f64>) -> Self {
        let n = visible.nrows() as f64;
        let mut weights = Array2::zeros((hidden.ncols(), visible.ncols()));
        general_mat_mul(1.0 / n, &hidden.t(), &visible, 0.0, &mut weights);
        Self {
            weights,
            visible: math::column_mean(visible),
            hidden: math::column_mean(hidden),
        }
    }
}

/// Positive-minus-negative moment differences. The learning rate is applied
/// by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub d_weights: Array2<f64>,
    pub d_visible_bias: Array1<f64>,
    pub d_hidden_bias: Array1<f64>,
}

impl GradientEstimate {
    fn difference(positive: PhaseStatistics, negative: &PhaseStatistics) -> Self {
        let mut d_weights = positive.weights;
        d_weights -= &negative.weights;
        Self {
            d_weights,
            d_visible_bias: positive.visible - &negative.visible,
            d_hidden_bias: positive.hidden - &negative.hidden,
        }
    }

    pub fn is_finite(&self) -> bool {
        math::all_finite(self.d_weights.view())
            && self.d_visible_bias.iter().all(|v| v.is_finite())
            && self.d_hidden_bias.iter().all(|v| v.is_finite())
    }
}

/// Persistent fantasy particles for PCD.
#[derive(Debug, Clone)]
pub struct GibbsChainState {
    pub(crate) visible: Array2<f64>,
    pub(crate) hidden: Array2<f64>,
    pub(crate) rng: SeededRng,
}

impl GibbsChainState {
    pub fn new(visible: Array2<f64>, hidden: Array2<f64>, rng: SeededRng) -> Result<Self> {
        if visible.nrows() != hidden.nrows() {
            return Err(Error::shape("chain count", visible.nrows(), hidden.nrows()));
        }
        if visible.nrows() == 0 {
            return Err(Error::Domain("at least one chain is required".into()));
        }
        if !visible.iter().chain(hidden.iter()).all(|&x| x == 0.0 || x == 1.0) {
            return Err(Error::Domain("chain states must be binary".into()));
        }
        Ok(Self {
            visible,
            hidden,
            rng,
        })
    }

    /// Starts one chain per batch row from a Bernoulli draw of that row.
    pub fn from_batch(params: &RbmParameters, batch: ArrayView2<'_, f64>, mut rng: SeededRng) -> Result<Self> {
        check_batch(params, batch)?;
        let visible = math::bernoulli_matrix(batch, &mut rng);
        let hidden = math::bernoulli_matrix(params.hidden_probs(visible.view()).view(), &mut rng);
        Self::new(visible, hidden, rng)
    }

    pub fn n_chains(&self) -> usize {
        self.visible.nrows()
    }

    pub fn visible(&self) -> ArrayView2<'_, f64> {
        self.visible.view()
    }

    pub fn hidden(&self) -> ArrayView2<'_, f64> {
        self.hidden.view()
    }

    /// Advances every chain by `sweeps` full Gibbs sweeps without collecting
    /// statistics.
    pub fn advance(&mut self, params: &RbmParameters, sweeps: usize) -> Result<()> {
        self.check(params)?;
        for _ in 0..sweeps {
            let hp = params.hidden_probs(self.visible.view());
            self.hidden = math::bernoulli_matrix(hp.view(), &mut self.rng);
            let vp = params.visible_probs(self.hidden.view());
            self.visible = math::bernoulli_matrix(vp.view(), &mut self.rng);
        }
        Ok(())
    }

    pub(crate) fn check(&self, params: &RbmParameters) -> Result<()> {
        if self.visible.ncols() != params.n_visible() {
            return Err(Error::shape("chain visible width", params.n_visible(), self.visible.ncols()));
        }
        if self.hidden.ncols() != params.n_hidden() {
            return Err(Error::shape("chain hidden width", params.n_hidden(), self.hidden.ncols()));
        }
        Ok(())
    }
}

fn check_batch(params: &RbmParameters, batch: ArrayView2<'_, f64>) -> Result<()> {
    if batch.nrows() == 0 {
        return Err(Error::Domain("empty batch".into()));
    }
    if batch.ncols() != params.n_visible() {
        return Err(Error::shape("batch width", params.n_visible(), batch.ncols()));
    }
    Ok(())
}

/// Data-driven statistics: visible units clamped to `batch`, hidden units
/// at their conditional probabilities.
pub fn positive_phase(params: &RbmParameters, batch: ArrayView2<'_, f64>) -> Result<PhaseStatistics> {
    check_batch(params, batch)?;
    let hidden = params.hidden_probs(batch);
    Ok(PhaseStatistics::from_states(batch, hidden.view()))
}

/// Result of running a block of Gibbs sweeps from some starting visible state.
#[derive(Debug, Clone)]
pub struct NegativeChain {
    pub statistics: PhaseStatistics,
    /// Binary visible state after the last sweep.
    pub visible: Array2<f64>,
    /// Binary hidden state that produced the last visible sample.
    pub hidden: Array2<f64>,
}

/// End state of a block of Gibbs sweeps.
pub(crate) struct ChainEnd {
    pub visible_probs: Array2<f64>,
    /// `p(h | visible_probs)`.
    pub hidden_probs: Array2<f64>,
    pub visible: Array2<f64>,
    pub hidden: Array2<f64>,
}

pub(crate) fn run_chain<R: Rng + ?Sized>(
    params: &RbmParameters,
    start: ArrayView2<'_, f64>,
    start_hidden_probs: Option<Array2<f64>>,
    steps: usize,
    rng: &mut R,
) -> ChainEnd {
    let mut hidden_probs = match start_hidden_probs {
        Some(hp) => hp,
        None => params.hidden_probs(start),
    };
    let mut hidden = Array2::zeros((0, 0));
    let mut visible = Array2::zeros((0, 0));
    let mut visible_probs = Array2::zeros((0, 0));
    for step in 0..steps {
        if step > 0 {
            hidden_probs = params.hidden_probs(visible.view());
        }
        hidden = math::bernoulli_matrix(hidden_probs.view(), rng);
        visible_probs = params.visible_probs(hidden.view());
        visible = math::bernoulli_matrix(visible_probs.view(), rng);
    }
    ChainEnd {
        hidden_probs: params.hidden_probs(visible_probs.view()),
        visible_probs,
        visible,
        hidden,
    }
}

/// Runs `steps` sweeps from `start`. Hidden and visible states driving the
/// chain are sampled; the returned statistics use the last visible
/// probabilities and the hidden probabilities they induce.
///
/// `start_hidden_probs`, when given, must equal `p(h | start)`; it saves a
/// product when the caller has already computed it.
pub fn negative_phase<R: Rng + ?Sized>(
    params: &RbmParameters,
    start: ArrayView2<'_, f64>,
    start_hidden_probs: Option<Array2<f64>>,
    steps: usize,
    rng: &mut R,
) -> Result<NegativeChain> {
    check_batch(params, start)?;
    if steps == 0 {
        return Err(Error::Config("at least one Gibbs step is required".into()));
    }
    let end = run_chain(params, start, start_hidden_probs, steps, rng);
    Ok(NegativeChain {
        statistics: PhaseStatistics::from_states(end.visible_probs.view(), end.hidden_probs.view()),
        visible: end.visible,
        hidden: end.hidden,
    })
}

/// CD-τ: the negative chain restarts at the batch.
pub fn cd_gradient<R: Rng + ?Sized>(
    params: &RbmParameters,
    batch: ArrayView2<'_, f64>,
    cd_steps: usize,
    rng: &mut R,
) -> Result<GradientEstimate> {
    check_batch(params, batch)?;
    let hidden = params.hidden_probs(batch);
    let positive = PhaseStatistics::from_states(batch, hidden.view());
    let negative = negative_phase(params, batch, Some(hidden), cd_steps, rng)?;
    Ok(GradientEstimate::difference(positive, &negative.statistics))
}

/// PCD: the negative chain continues from the persistent particles, which
/// are returned advanced by `cd_steps` sweeps.
pub fn pcd_gradient(
    params: &RbmParameters,
    batch: ArrayView2<'_, f64>,
    mut chains: GibbsChainState,
    cd_steps: usize,
) -> Result<(GradientEstimate, GibbsChainState)> {
    check_batch(params, batch)?;
    chains.check(params)?;
    let positive = positive_phase(params, batch)?;
    let negative = negative_phase(params, chains.visible.view(), None, cd_steps, &mut chains.rng)?;
    chains.visible = negative.visible;
    chains.hidden = negative.hidden;
    Ok((GradientEstimate::difference(positive, &negative.statistics), chains))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::seeded_rng;
    use ndarray::{array, Array1};

    fn saturated_for(row: &[f64]) -> RbmParameters {
        let b: Array1<f64> = row.iter().map(|&v| if v > 0.5 { 30.0 } else { -30.0 }).collect();
        RbmParameters::new(Array2::zeros((3, row.len())), b, Array1::zeros(3), 1).unwrap()
    }

    #[test]
    fn gradient_vanishes_when_chain_reproduces_data() {
        let row = [1.0, 0.0, 1.0, 1.0];
        let params = saturated_for(&row);
        let batch = Array2::from_shape_fn((5, 4), |(_, j)| row[j]);
        let g = cd_gradient(&params, batch.view(), 1, &mut seeded_rng(1)).unwrap();
        assert!(g.d_weights.iter().all(|x| x.abs() < 1e-6));
        assert!(g.d_visible_bias.iter().all(|x| x.abs() < 1e-6));
        assert!(g.d_hidden_bias.iter().all(|x| x.abs() < 1e-6));
    }

    #[test]
    fn zero_column_has_zero_positive_statistic() {
        let mut rng = seeded_rng(2);
        let params = RbmParameters::random(5, 4, 1, &mut rng).unwrap();
        let mut batch = Array2::from_shape_fn((6, 5), |(i, j)| ((i * 3 + j) % 4) as f64 / 3.0);
        batch.column_mut(2).fill(0.0);
        let pos = positive_phase(&params, batch.view()).unwrap();
        assert!(pos.weights.column(2).iter().all(|&x| x == 0.0));
        assert!(pos.weights.column(1).iter().any(|&x| x != 0.0));
    }

    #[test]
    fn empty_batch_is_rejected() {
        let params = RbmParameters::zeros(3, 2, 1).unwrap();
        let batch = Array2::<f64>::zeros((0, 3));
        assert!(matches!(
            cd_gradient(&params, batch.view(), 1, &mut seeded_rng(0)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn pcd_first_step_matches_cd() {
        let mut rng = seeded_rng(9);
        let params = RbmParameters::random(6, 3, 1, &mut rng).unwrap();
        let batch = array![
            [1.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            [0.0, 1.0, 1.0, 1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0, 1.0, 1.0]
        ];
        let chain_rng = seeded_rng(42);
        let cd = cd_gradient(&params, batch.view(), 1, &mut chain_rng.clone()).unwrap();
        let chains = GibbsChainState::new(batch.clone(), Array2::zeros((3, 3)), chain_rng).unwrap();
        let (pcd, advanced) = pcd_gradient(&params, batch.view(), chains, 1).unwrap();
        assert_eq!(cd, pcd);
        assert_eq!(advanced.n_chains(), 3);
    }

    #[test]
    fn chain_state_validation() {
        let rng = seeded_rng(0);
        assert!(GibbsChainState::new(array![[0.5, 1.0]], array![[1.0]], rng.clone()).is_err());
        assert!(GibbsChainState::new(array![[0.0, 1.0]], array![[1.0], [0.0]], rng.clone()).is_err());
        let params = RbmParameters::zeros(3, 2, 1).unwrap();
        let chains = GibbsChainState::new(array![[0.0, 1.0]], array![[1.0, 0.0]], rng).unwrap();
        let batch = array![[1.0, 0.0, 1.0]];
        assert!(matches!(
            pcd_gradient(&params, batch.view(), chains, 1),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn zero_weight_chains_reach_independent_marginals() {
        let b = array![-1.0, 0.0, 1.5, -2.0];
        let params = RbmParameters::new(Array2::zeros((3, 4)), b.clone(), Array1::zeros(3), 1).unwrap();
        let start = Array2::zeros((200, 4));
        let mut chains =
            GibbsChainState::new(start, Array2::zeros((200, 3)), seeded_rng(17)).unwrap();
        let mut sums = Array1::<f64>::zeros(4);
        let sweeps = 1000;
        for _ in 0..sweeps {
            chains.advance(&params, 1).unwrap();
            sums += &chains.visible().sum_axis(ndarray::Axis(0));
        }
        let marginals = sums / (sweeps as f64 * 200.0);
        for (m, &bj) in marginals.iter().zip(b.iter()) {
            assert!((m - crate::math::sigmoid(bj)).abs() < 0.02, "{m} vs {}", crate::math::sigmoid(bj));
        }
    }
}
