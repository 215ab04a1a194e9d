use holdout_core::chain::{markovize, HigherOrderChainSpec, MarkovizedChain, StateSpace, TransitionKernel};
use holdout_core::predictors::{
    bayes_predictor, empirical_risk, erm_fit, exact_risk, holdout_select, LossSpec, PredictorTable,
};
use holdout_core::sampling::{Sampler, SeedSpec};
use proptest::prelude::*;

fn binary_chain(order: usize, p1: &[f64], embed: usize) -> MarkovizedChain {
    let rows = p1.iter().map(|&p| vec![1.0 - p, p]).collect();
    let spec = HigherOrderChainSpec::new(StateSpace::new(2).unwrap(), order, rows).unwrap();
    markovize(&spec, embed).unwrap()
}

fn bits(code: usize, len: usize) -> Vec<usize> {
    (0..len).map(|i| (code >> i) & 1).collect()
}

#[test]
fn erm_matches_brute_force_on_all_short_streams() {
    let chain = binary_chain(1, &[0.3, 0.6], 2);
    let losses = [LossSpec::misclassification(2), LossSpec::general(vec![vec![0.0, 1.0], vec![0.4, 0.0]]).unwrap()];
    let mut checked = 0;
    for len in 3..=12 {
        for code in 0..(1usize << len) {
            let states = chain.states_from_stream(&bits(code, len));
            for loss in &losses {
                for q in 0..=2 {
                    let fitted = erm_fit(q, &states, 2, loss).unwrap();
                    let fitted_risk = empirical_risk(&fitted, &states, loss, 0).unwrap();
                    let best = PredictorTable::enumerate(q, 2)
                        .map(|g| empirical_risk(&g, &states, loss, 0).unwrap())
                        .fold(f64::INFINITY, f64::min);
                    assert!(
                        (fitted_risk - best).abs() < 1e-12,
                        "len {len} code {code} q {q}: {fitted_risk} vs {best}"
                    );
                    checked += 1;
                }
            }
        }
    }
    assert_eq!(checked, 6 * ((1 << 13) - 8));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bayes_matches_exhaustive_table_argmin(
        p in 1usize..=3,
        order in 1usize..=3,
        probs in prop::collection::vec(0.01f64..0.99, 8),
        weight in 0.05f64..1.0,
    ) {
        let order = order.min(p);
        let chain = binary_chain(order, &probs[..1 << order], p);
        for loss in [LossSpec::misclassification(2), LossSpec::general(vec![vec![0.0, 1.0], vec![weight, 0.0]]).unwrap()] {
            let bayes = bayes_predictor(&chain, &loss).unwrap();
            prop_assert_eq!(bayes.order(), p);
            let bayes_risk = exact_risk(&bayes, &chain, &loss).unwrap();
            for q in 0..=p {
                for g in PredictorTable::enumerate(q, 2) {
                    prop_assert!(bayes_risk <= exact_risk(&g, &chain, &loss).unwrap() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn holdout_is_affine_invariant(stream in prop::collection::vec(0usize..2, 3..200)) {
        let chain = binary_chain(1, &[0.3, 0.6], 2);
        let states = chain.states_from_stream(&stream);
        let candidates: Vec<_> = (0..=2).flat_map(|q| PredictorTable::enumerate(q, 2)).collect();
        let base = LossSpec::misclassification(2);
        let shifted = LossSpec::general(vec![vec![0.25, 0.75], vec![0.75, 0.25]]).unwrap();
        let a = holdout_select(&candidates, &states, &base).unwrap();
        let b = holdout_select(&candidates, &states, &shifted).unwrap();
        prop_assert_eq!(a.index, b.index);
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((0.5 * x + 0.25 - y).abs() < 1e-12);
        }
    }
}

#[test]
fn empirical_risk_converges_to_exact() {
    let k = TransitionKernel::new(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let chain = markovize(&HigherOrderChainSpec::from_kernel(&k), 2).unwrap();
    let loss = LossSpec::misclassification(2);
    let traj = Sampler::new(&chain).stationary_trajectory(200_000, 1, SeedSpec::new(11, 0)).unwrap();
    for q in 0..=2 {
        for g in PredictorTable::enumerate(q, 2) {
            let emp = empirical_risk(&g, traj.learning(), &loss, 0).unwrap();
            let exact = exact_risk(&g, &chain, &loss).unwrap();
            assert!((emp - exact).abs() < 0.01, "{:?}: {emp} vs {exact}", g.entries());
        }
    }
}
