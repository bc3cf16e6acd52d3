mod common;

use common::{bits, exact_label_argmax, random_params, Joint};
use ndarray::{array, Array1, Array2, Axis};
use proptest::prelude::*;
use rand::Rng;
use sdr_hebb::math::seeded_rng;
use sdr_hebb::rbm::{
    self, cd_gradient, pcd_gradient, positive_phase, sample_bernoulli, GibbsChainState, RbmLayout, RbmParameters,
    SamplingConfig, TrainConfig,
};

#[test]
fn energy_matches_term_by_term_sum() {
    let params = random_params(2, 2, 1, 1.0, 11);
    for vi in 0..4 {
        for hi in 0..4 {
            let (v, h) = (bits(vi, 2), bits(hi, 2));
            let lib = params.energy(Array1::from(v.clone()).view(), Array1::from(h.clone()).view()).unwrap();
            assert!((lib - common::energy(&params, &v, &h)).abs() < 1e-12);
        }
    }
}

#[test]
fn conditionals_match_enumeration() {
    let shapes = [(2, 1), (3, 2), (4, 4), (6, 5), (7, 5), (5, 7), (10, 2)];
    for (k, &(m, n)) in shapes.iter().enumerate() {
        let params = random_params(m, n, 1, 1.5, 100 + k as u64);
        let joint = Joint::enumerate(&params);
        for vi in 0..1 << m {
            let v = Array1::from(bits(vi, m));
            let lib = params.hidden_conditional(v.view()).unwrap();
            for (a, b) in lib.iter().zip(joint.hidden_conditional(vi)) {
                assert!((a - b).abs() < 1e-9, "m={m} n={n} p(h|v): {a} vs {b}");
            }
        }
        for hi in 0..1 << n {
            let h = Array1::from(bits(hi, n));
            let lib = params.visible_conditional(h.view()).unwrap();
            for (a, b) in lib.iter().zip(joint.visible_conditional(hi)) {
                assert!((a - b).abs() < 1e-9, "m={m} n={n} p(v|h): {a} vs {b}");
            }
        }
    }
}

#[test]
fn transposed_machine_swaps_conditionals() {
    let params = random_params(5, 3, 1, 1.0, 7);
    let t = params.transposed();
    let v = array![0.2, 1.0, 0.0, 0.7, 1.0];
    let a = params.hidden_conditional(v.view()).unwrap();
    let b = t.visible_conditional(v.view()).unwrap();
    for (x, y) in a.iter().zip(b.iter()) {
        assert!((x - y).abs() < 1e-15);
    }
}

#[test]
fn gibbs_sampling_leaves_boltzmann_distribution_invariant() {
    let params = random_params(3, 2, 1, 1.0, 5);
    let joint = Joint::enumerate(&params);
    let mut chain = GibbsChainState::new(Array2::zeros((1, 3)), Array2::zeros((1, 2)), seeded_rng(6)).unwrap();
    chain.advance(&params, 1000).unwrap();
    let sweeps = 200_000;
    let mut counts = vec![vec![0usize; 4]; 8];
    for _ in 0..sweeps {
        chain.advance(&params, 1).unwrap();
        let vi = chain.visible().iter().enumerate().map(|(j, &x)| (x as usize) << j).sum::<usize>();
        let hi = chain.hidden().iter().enumerate().map(|(i, &x)| (x as usize) << i).sum::<usize>();
        counts[vi][hi] += 1;
    }
    let mut tv = 0.0;
    for vi in 0..8 {
        for hi in 0..4 {
            tv += (counts[vi][hi] as f64 / sweeps as f64 - joint.probability(vi, hi)).abs();
        }
    }
    tv /= 2.0;
    assert!(tv < 0.02, "total variation {tv}");
}

#[test]
fn long_chain_cd_gradient_has_exact_signs() {
    let data = array![[1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]];
    // first seed whose exact gradient has no entry too close to zero to have a sign
    let (params, (dw, db, dc)) = (0..)
        .map(|seed| {
            let params = random_params(3, 2, 1, 1.0, seed);
            let grad = Joint::enumerate(&params).log_likelihood_gradient(&data);
            (params, grad)
        })
        .find(|(_, (dw, db, dc))| dw.iter().chain(db.iter()).chain(dc.iter()).all(|x| x.abs() > 0.02))
        .unwrap();

    // many copies of the batch act as many independent chains
    let copies = 5000;
    let views: Vec<_> = (0..copies).map(|_| data.view()).collect();
    let batch = ndarray::concatenate(Axis(0), &views).unwrap();
    // The negative statistic is taken at mean-field visible probabilities,
    // which biases magnitudes slightly; only signs are compared.
    let g = cd_gradient(&params, batch.view(), 50, &mut seeded_rng(3)).unwrap();
    for (a, e) in g.d_weights.iter().zip(dw.iter()) {
        assert_eq!(a.signum(), e.signum(), "weight gradient {a} vs exact {e}");
    }
    for (a, e) in g.d_visible_bias.iter().zip(db.iter()).chain(g.d_hidden_bias.iter().zip(dc.iter())) {
        assert_eq!(a.signum(), e.signum(), "bias gradient {a} vs exact {e}");
    }
}

#[test]
fn clamped_prediction_matches_exact_conditional() {
    let mut agree = 0;
    let mut rng = seeded_rng(99);
    for model in 0..100u64 {
        let params = random_params(5, 3, 1, 2.0, 1000 + model);
        let joint = Joint::enumerate(&params);
        let data: Vec<f64> = (0..4).map(|_| f64::from(u8::from(rng.gen_bool(0.5)))).collect();
        let expected = exact_label_argmax(&joint, &data, 1);
        let x = Array2::from_shape_vec((1, 4), data).unwrap();
        let sampling = SamplingConfig { seed: model, ..SamplingConfig::default() };
        let got = rbm::predict(&params, x.view(), &sampling).unwrap()[0];
        agree += usize::from(got == expected);
    }
    assert!(agree >= 95, "{agree}/100 predictions match the exact argmax");
}

#[test]
fn one_hot_prediction_on_strongly_coupled_model() {
    // data unit k drives hidden unit k which drives label unit k
    let mut w = Array2::zeros((3, 6));
    for k in 0..3 {
        w[[k, k]] = 6.0;
        w[[k, 3 + k]] = 6.0;
    }
    let b = array![0.0, 0.0, 0.0, -3.0, -3.0, -3.0];
    let c = Array1::from_elem(3, -4.0);
    let params = RbmParameters::new(w, b, c, 3).unwrap();
    let joint = Joint::enumerate(&params);
    let x = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let got = rbm::predict(&params, x.view(), &SamplingConfig::default()).unwrap();
    let expected: Vec<usize> = x.rows().into_iter().map(|r| exact_label_argmax(&joint, &r.to_vec(), 3)).collect();
    assert_eq!(got, expected);
    assert_eq!(got, vec![0, 1, 2]);
}

#[test]
fn bernoulli_rejects_bad_probabilities() {
    let mut rng = seeded_rng(0);
    assert!(sample_bernoulli(array![0.5, 1.5].view(), &mut rng).is_err());
    assert!(sample_bernoulli(array![-0.1].view(), &mut rng).is_err());
    assert!(sample_bernoulli(array![f64::NAN].view(), &mut rng).is_err());
    let mut counts = 0.0;
    for _ in 0..10_000 {
        counts += sample_bernoulli(array![0.5].view(), &mut rng).unwrap()[0];
    }
    assert!((0.48..=0.52).contains(&(counts / 10_000.0)));
}

#[test]
fn pcd_keeps_zero_columns_out_of_positive_phase() {
    let params = random_params(6, 4, 1, 0.5, 8);
    let batch = array![[1.0, 0.0, 0.3, 0.0, 1.0, 1.0], [0.5, 0.0, 0.0, 1.0, 0.2, 0.0]];
    let pos = positive_phase(&params, batch.view()).unwrap();
    assert!(pos.weights.column(1).iter().all(|&x| x == 0.0));
    let chains = GibbsChainState::new(array![[1.0, 0.0, 1.0, 0.0, 1.0, 1.0], [0.0; 6]], Array2::zeros((2, 4)), seeded_rng(1))
        .unwrap();
    let (g, chains) = pcd_gradient(&params, batch.view(), chains, 1).unwrap();
    assert_eq!(chains.n_chains(), 2);
    assert!(g.is_finite());
}

fn separable_toy() -> (Array2<f64>, Vec<usize>) {
    let mut rng = seeded_rng(4);
    let mut x = Array2::zeros((20, 2));
    let mut y = Vec::new();
    for i in 0..20 {
        let class = i % 2;
        let hi = rng.gen_range(0.7..1.0);
        let lo = rng.gen_range(0.0..0.3);
        x[[i, 0]] = if class == 1 { hi } else { lo };
        x[[i, 1]] = if class == 1 { lo } else { hi };
        y.push(class);
    }
    (x, y)
}

#[test]
fn fits_separable_toy_set() {
    let (x, y) = separable_toy();
    // nearest-prototype oracle confirms the labels follow the informative features
    for (row, &label) in x.rows().into_iter().zip(&y) {
        assert_eq!(usize::from(row[0] > row[1]), label);
    }
    let config = TrainConfig { epochs: 200, batch_size: 5, seed: 3, ..TrainConfig::default() };
    let (params, log) = rbm::fit(x.view(), &y, RbmLayout::for_classes(16, 2), &config).unwrap();
    assert_eq!(log.epochs.len(), 200);
    assert!(log.epochs.iter().enumerate().all(|(i, e)| e.epoch == i));
    let predicted = rbm::predict(&params, x.view(), &SamplingConfig::default()).unwrap();
    assert_eq!(predicted, y);
}

#[test]
fn identical_seeds_give_identical_models() {
    let (x, y) = separable_toy();
    for algorithm in [rbm::Algorithm::Cd, rbm::Algorithm::Pcd] {
        let config = TrainConfig { epochs: 15, batch_size: 4, seed: 77, algorithm, ..TrainConfig::default() };
        let (a, _) = rbm::fit(x.view(), &y, RbmLayout::for_classes(8, 2), &config).unwrap();
        let (b, _) = rbm::fit(x.view(), &y, RbmLayout::for_classes(8, 2), &config).unwrap();
        assert_eq!(a, b);
        let s = SamplingConfig::default();
        assert_eq!(rbm::predict(&a, x.view(), &s).unwrap(), rbm::predict(&b, x.view(), &s).unwrap());
    }
}

#[test]
fn rejects_out_of_range_features_and_empty_hidden_layer() {
    let x = array![[0.5, 1.2]];
    let err = rbm::fit(x.view(), &[0], RbmLayout::for_classes(4, 2), &TrainConfig::default()).unwrap_err();
    assert!(matches!(err, sdr_hebb::Error::Domain(_)));
    let x = array![[0.5, 0.2]];
    let err = rbm::fit(x.view(), &[0], RbmLayout::for_classes(0, 2), &TrainConfig::default()).unwrap_err();
    assert!(err.is_config());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_columns_never_reach_positive_statistics(
        seed in 0u64..10_000,
        rows in 1usize..12,
        cols in 2usize..10,
        zero_col in 0usize..10,
    ) {
        let zero_col = zero_col % cols;
        let params = random_params(cols, 5, 1, 2.0, seed);
        let mut rng = seeded_rng(seed ^ 0xabc);
        let mut batch = Array2::from_shape_fn((rows, cols), |_| rng.gen::<f64>());
        batch.column_mut(zero_col).fill(0.0);
        let pos = positive_phase(&params, batch.view()).unwrap();
        prop_assert!(pos.weights.column(zero_col).iter().all(|&x| x == 0.0));
        prop_assert_eq!(pos.visible[zero_col], 0.0);
    }
}
