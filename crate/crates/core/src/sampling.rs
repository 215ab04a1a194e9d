//! Seeded simulation of markovized chains.
//!
//! Each trajectory draws from its own ChaCha stream keyed by the master seed,
//! the kind of draw, and the replication index, consuming exactly one `u64`
//! per step. Replications are therefore independent of evaluation order.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chain::MarkovizedChain;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub replication_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, replication_index: u64) -> Self {
        Self { master_seed, replication_index }
    }
}

#[derive(Debug, Clone, Copy)]
enum Draw {
    Stationary = 1,
    Continuation = 2,
}

fn rng_for(seed: SeedSpec, draw: Draw) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(draw as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(seed.replication_index);
    rng
}

/// A learning block of length `n` followed by a validation block of length `m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub n: usize,
    pub m: usize,
}

impl Trajectory {
    pub fn learning(&self) -> &[usize] {
        &self.states[..self.n]
    }

    pub fn validation(&self) -> &[usize] {
        &self.states[self.n..]
    }

    pub fn last_learning_state(&self) -> usize {
        self.states[self.n - 1]
    }
}

/// Inverse-CDF sampler with per-row cumulative sums.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    chain: &'a MarkovizedChain,
    stationary_cdf: Vec<f64>,
    row_cdfs: Vec<Vec<f64>>,
}

/// Cumulative sums whose positive-mass tail is pinned to exactly 1, so a
/// uniform in `[0, 1)` never lands on a zero-probability index.
fn cdf(probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let probs: Vec<f64> = probs.collect();
    let mut acc = 0.0;
    let mut out: Vec<f64> = probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    if let Some(last) = probs.iter().rposition(|&p| p > 0.0) {
        out[last..].iter_mut().for_each(|c| *c = 1.0);
    }
    out
}

impl<'a> Sampler<'a> {
    pub fn new(chain: &'a MarkovizedChain) -> Self {
        let stationary_cdf = cdf(chain.stationary.probs.iter().copied());
        let row_cdfs = (0..chain.size()).map(|x| cdf(chain.kernel.matrix().row(x).iter().copied())).collect();
        Self { chain, stationary_cdf, row_cdfs }
    }

    pub fn chain(&self) -> &MarkovizedChain {
        self.chain
    }

    fn pick(cdf: &[f64], u: f64) -> usize {
        cdf.partition_point(|&c| c <= u)
    }

    fn step(&self, from: usize, rng: &mut ChaCha8Rng) -> usize {
        Self::pick(&self.row_cdfs[from], rng.gen::<f64>())
    }

    /// `X_1 ~ Q`, then `n + m − 1` kernel steps.
    pub fn stationary_trajectory(&self, n: usize, m: usize, seed: SeedSpec) -> Result<Trajectory> {
        if n == 0 || m == 0 {
            return Err(Error::Range(format!("trajectory lengths must be positive (n = {n}, m = {m})")));
        }
        let mut rng = rng_for(seed, Draw::Stationary);
        let mut states = Vec::with_capacity(n + m);
        let mut x = Self::pick(&self.stationary_cdf, rng.gen::<f64>());
        states.push(x);
        for _ in 1..n + m {
            x = self.step(x, &mut rng);
            states.push(x);
        }
        Ok(Trajectory { states, n, m })
    }

    /// `m` states following `x_n`, drawn from the law of the validation block
    /// given the last learning state.
    pub fn conditional_continuation(&self, x_n: usize, m: usize, seed: SeedSpec) -> Result<Vec<usize>> {
        if x_n >= self.chain.size() {
            return Err(Error::Range(format!("state {x_n} outside 0..{}", self.chain.size())));
        }
        let mut rng = rng_for(seed, Draw::Continuation);
        let mut x = x_n;
        Ok((0..m)
            .map(|_| {
                x = self.step(x, &mut rng);
                x
            })
            .collect())
    }
}

pub fn sample_stationary_trajectory(chain: &MarkovizedChain, n: usize, m: usize, seed: SeedSpec) -> Result<Trajectory> {
    Sampler::new(chain).stationary_trajectory(n, m, seed)
}

pub fn sample_conditional_continuation(
    chain: &MarkovizedChain,
    x_n: usize,
    m: usize,
    seed: SeedSpec,
) -> Result<Vec<usize>> {
    Sampler::new(chain).conditional_continuation(x_n, m, seed)
}

/// One line per state: `t,composite_label,symbols` where `symbols` lists
/// `y_t;y_{t−1};…;y_{t−p}`.
pub fn write_trajectory_csv<W: Write>(mut out: W, chain: &MarkovizedChain, states: &[usize]) -> Result<()> {
    writeln!(out, "t,composite_label,symbols")?;
    for (t, &x) in states.iter().enumerate() {
        let symbols: Vec<String> = chain.decode_state(x).iter().map(|y| y.to_string()).collect();
        writeln!(out, "{},{},{}", t + 1, x, symbols.join(";"))?;
    }
    Ok(())
}
