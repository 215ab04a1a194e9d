use super::{LossSpec, PredictorTable};
use crate::chain::MarkovizedChain;
use crate::{Error, Result};

/// Per-state loss `L(g(X_t))` for every composite state.
pub(crate) fn state_losses(g: &PredictorTable, chain: &MarkovizedChain, loss: &LossSpec) -> Result<Vec<f64>> {
    g.check_against(chain)?;
    loss.validate(chain.symbols())?;
    Ok((0..chain.size()).map(|x| loss.loss(g.predict_state(x), chain.target(x))).collect())
}

/// `𝕃(g) = E_Q L(g(X))`, summed exactly over the composite states.
pub fn exact_risk(g: &PredictorTable, chain: &MarkovizedChain, loss: &LossSpec) -> Result<f64> {
    let losses = state_losses(g, chain, loss)?;
    Ok(chain.stationary.probs.iter().zip(&losses).map(|(q, l)| q * l).sum())
}

/// `Var_Q(L(g(X)))`.
pub fn loss_variance(g: &PredictorTable, chain: &MarkovizedChain, loss: &LossSpec) -> Result<f64> {
    let losses = state_losses(g, chain, loss)?;
    let q = &chain.stationary.probs;
    let mean: f64 = q.iter().zip(&losses).map(|(q, l)| q * l).sum();
    Ok(q.iter().zip(&losses).map(|(q, l)| q * (l - mean).powi(2)).sum())
}

fn argmin_lowest(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for (i, v) in values.enumerate() {
        if v < best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// The Bayes table `g*` of order `p`: per context, the symbol minimising the
/// conditional expected loss, lowest symbol on ties.
pub fn bayes_predictor(chain: &MarkovizedChain, loss: &LossSpec) -> Result<PredictorTable> {
    loss.validate(chain.symbols())?;
    let s = chain.symbols();
    let p = chain.embedding_order;
    let table = (0..chain.codec.count(p))
        .map(|context| {
            let law = chain.base.next_symbol_law(context);
            argmin_lowest((0..s).map(|y| law.iter().enumerate().map(|(z, pz)| pz * loss.loss(y, z)).sum()))
        })
        .collect();
    PredictorTable::new(p, s, table)
}

/// Mean of `L(g(X_t))` over the last `len − b` states of `segment`.
pub fn empirical_risk(g: &PredictorTable, segment: &[usize], loss: &LossSpec, gap: usize) -> Result<f64> {
    if segment.is_empty() {
        return Err(Error::EmptySegment);
    }
    if gap >= segment.len() {
        return Err(Error::Range(format!("gap {gap} must be below the segment length {}", segment.len())));
    }
    let s = g.symbols();
    let tail = &segment[gap..];
    let total: f64 = tail.iter().map(|&x| loss.loss(g.predict_state(x), x % s)).sum();
    Ok(total / tail.len() as f64)
}

/// Empirical risk minimiser over all tables of order `q`.
///
/// The empirical loss of a table is a sum of independent per-context terms,
/// so minimising each context separately realises the argmin over the whole
/// class. Contexts never seen fall back to the most frequent target symbol.
pub fn erm_fit(order: usize, learn: &[usize], symbols: usize, training_loss: &LossSpec) -> Result<PredictorTable> {
    if learn.is_empty() {
        return Err(Error::EmptySegment);
    }
    training_loss.validate(symbols)?;
    let contexts = symbols.pow(order as u32);
    let mut counts = vec![vec![0u64; symbols]; contexts];
    let mut totals = vec![0u64; symbols];
    for &x in learn {
        let target = x % symbols;
        counts[(x / symbols) % contexts][target] += 1;
        totals[target] += 1;
    }
    let fallback = argmin_lowest(totals.iter().map(|&c| -(c as f64)));
    let table = counts
        .iter()
        .map(|row| {
            if row.iter().all(|&c| c == 0) {
                fallback
            } else {
                argmin_lowest((0..symbols).map(|y| {
                    row.iter().enumerate().map(|(z, &c)| c as f64 * training_loss.loss(y, z)).sum()
                }))
            }
        })
        .collect();
    PredictorTable::new(order, symbols, table)
}

/// `𝕃_b(g) = Σ_z K^{b+1}(x_n, z) L(g(z))`: expected loss `b + 1` steps after
/// the last learning state.
pub fn conditional_risk(
    g: &PredictorTable,
    chain: &MarkovizedChain,
    x_n: usize,
    gap: usize,
    loss: &LossSpec,
) -> Result<f64> {
    if x_n >= chain.size() {
        return Err(Error::Range(format!("state {x_n} outside 0..{}", chain.size())));
    }
    let losses = state_losses(g, chain, loss)?;
    let power = chain.kernel.power(gap + 1);
    Ok(power.row(x_n).iter().zip(&losses).map(|(p, l)| p * l).sum())
}

/// `Var_Q(𝟙{g ≠ g*}) = D (1 − D)` with `D` the stationary mass of states whose
/// contexts make the two tables disagree.
pub fn disagreement_variance(g: &PredictorTable, g_star: &PredictorTable, chain: &MarkovizedChain) -> Result<f64> {
    g.check_against(chain)?;
    g_star.check_against(chain)?;
    let d: f64 = chain
        .stationary
        .probs
        .iter()
        .enumerate()
        .filter(|&(x, _)| g.predict_state(x) != g_star.predict_state(x))
        .map(|(_, q)| q)
        .sum();
    let d = d.clamp(0.0, 1.0);
    Ok(d * (1.0 - d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{markovize, HigherOrderChainSpec, TransitionKernel};

    fn chain_from(rows: &[Vec<f64>]) -> MarkovizedChain {
        let k = TransitionKernel::new(rows).unwrap();
        markovize(&HigherOrderChainSpec::from_kernel(&k), 1).unwrap()
    }

    fn two_state() -> MarkovizedChain {
        chain_from(&[vec![0.9, 0.1], vec![0.2, 0.8]])
    }

    #[test]
    fn exact_risk_examples() {
        let miss = LossSpec::misclassification(2);
        let iid = chain_from(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        let constant = PredictorTable::constant(2, 0).unwrap();
        assert!((exact_risk(&constant, &iid, &miss).unwrap() - 0.5).abs() < 1e-12);

        let chain = two_state();
        let bayes = PredictorTable::new(1, 2, vec![0, 1]).unwrap();
        let anti = PredictorTable::new(1, 2, vec![1, 0]).unwrap();
        let r = exact_risk(&bayes, &chain, &miss).unwrap();
        assert!((r - (2.0 / 3.0 * 0.1 + 1.0 / 3.0 * 0.2)).abs() < 1e-12);
        let r_anti = exact_risk(&anti, &chain, &miss).unwrap();
        assert!((r_anti - (2.0 / 3.0 * 0.9 + 1.0 / 3.0 * 0.8)).abs() < 1e-12);
        assert!((r + r_anti - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bayes_examples() {
        let miss = LossSpec::misclassification(2);
        let g = bayes_predictor(&two_state(), &miss).unwrap();
        assert_eq!(g.entries(), &[0, 1]);

        let tie = chain_from(&[vec![0.5, 0.5], vec![0.2, 0.8]]);
        assert_eq!(bayes_predictor(&tie, &miss).unwrap().entries(), &[0, 1]);

        // L(0,1) = 1, L(1,0) = 0.2 on row (0.6, 0.4): 0.4 vs 0.12 -> predict 1
        let asym = LossSpec::general(vec![vec![0.0, 1.0], vec![0.2, 0.0]]).unwrap();
        let chain = chain_from(&[vec![0.6, 0.4], vec![0.6, 0.4]]);
        assert_eq!(bayes_predictor(&chain, &asym).unwrap().entries(), &[1, 1]);
    }

    #[test]
    fn empirical_risk_examples() {
        let chain = two_state();
        let miss = LossSpec::misclassification(2);
        let g = PredictorTable::constant(2, 0).unwrap();
        // targets 1,0,0,1 -> losses 1,0,0,1
        let seg: Vec<usize> = [[1, 0], [0, 1], [0, 0], [1, 0]].iter().map(|s| chain.encode_state(s)).collect();
        assert_eq!(empirical_risk(&g, &seg, &miss, 0).unwrap(), 0.5);
        assert_eq!(empirical_risk(&g, &seg, &miss, 2).unwrap(), 0.5);
        assert_eq!(empirical_risk(&g, &seg, &miss, 3).unwrap(), 1.0);
        assert!(matches!(empirical_risk(&g, &[], &miss, 0), Err(Error::EmptySegment)));
        assert!(empirical_risk(&g, &seg, &miss, 4).is_err());
    }

    #[test]
    fn erm_examples() {
        let chain = two_state();
        let miss = LossSpec::misclassification(2);
        let learn = chain.states_from_stream(&[0, 0, 0, 1]);
        let g = erm_fit(1, &learn, 2, &miss).unwrap();
        // context 0 seen with {0, 0, 1}; context 1 unseen -> global majority 0
        assert_eq!(g.entries(), &[0, 0]);

        let learn = chain.states_from_stream(&[1, 1, 0, 1, 1, 0]);
        let g = erm_fit(0, &learn, 2, &miss).unwrap();
        assert_eq!(g.entries(), &[1]); // targets 1,0,1,1,0: 60% ones
    }

    #[test]
    fn conditional_risk_converges() {
        let chain = two_state();
        let miss = LossSpec::misclassification(2);
        let g = bayes_predictor(&chain, &miss).unwrap();
        let full = exact_risk(&g, &chain, &miss).unwrap();
        for x in 0..chain.size() {
            let lb = conditional_risk(&g, &chain, x, 200, &miss).unwrap();
            assert!((lb - full).abs() <= 1e-10);
        }

        // i.i.d. symbols: the next target is already stationary, but an
        // order-1 context is the current symbol and needs one more step.
        let iid = chain_from(&[vec![0.3, 0.7], vec![0.3, 0.7]]);
        let constant = PredictorTable::constant(2, 0).unwrap();
        let order_one = PredictorTable::new(1, 2, vec![1, 0]).unwrap();
        for x in 0..iid.size() {
            let full = exact_risk(&constant, &iid, &miss).unwrap();
            assert!((conditional_risk(&constant, &iid, x, 0, &miss).unwrap() - full).abs() < 1e-12);
            let full = exact_risk(&order_one, &iid, &miss).unwrap();
            assert!((conditional_risk(&order_one, &iid, x, 1, &miss).unwrap() - full).abs() < 1e-12);
        }
    }

    #[test]
    fn disagreement_examples() {
        let chain = two_state();
        let bayes = PredictorTable::new(1, 2, vec![0, 1]).unwrap();
        let anti = PredictorTable::new(1, 2, vec![1, 0]).unwrap();
        assert_eq!(disagreement_variance(&bayes, &bayes, &chain).unwrap(), 0.0);
        assert!(disagreement_variance(&anti, &bayes, &chain).unwrap().abs() < 1e-12);

        let iid = chain_from(&[vec![0.5, 0.5], vec![0.5, 0.5]]);
        let a = PredictorTable::new(1, 2, vec![0, 1]).unwrap();
        let b = PredictorTable::new(1, 2, vec![0, 0]).unwrap();
        assert!((disagreement_variance(&a, &b, &iid).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn loss_variance_is_bernoulli_for_misclassification() {
        let chain = two_state();
        let miss = LossSpec::misclassification(2);
        let g = PredictorTable::new(1, 2, vec![0, 1]).unwrap();
        let r = exact_risk(&g, &chain, &miss).unwrap();
        assert!((loss_variance(&g, &chain, &miss).unwrap() - r * (1.0 - r)).abs() < 1e-12);
    }

    #[test]
    fn rejects_order_above_embedding() {
        let chain = two_state();
        let g = PredictorTable::new(2, 2, vec![0; 4]).unwrap();
        assert!(matches!(exact_risk(&g, &chain, &LossSpec::misclassification(2)), Err(Error::InvalidOrder(_))));
    }
}
