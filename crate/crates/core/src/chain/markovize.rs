use nalgebra::DMatrix;
use serde::Serialize;

use super::kernel::{
    stationary_distribution, StateSpace, StationaryDistribution, TransitionKernel, ROW_SUM_TOL,
};
use crate::{Error, Result};

/// Default cap on `|𝒴|^{p+1}`.
pub const DEFAULT_COMPOSITE_CAP: usize = 4096;

/// Encoding of symbol windows as integers.
///
/// A window of `len` past symbols is stored most-recent-first, so digit `i`
/// (base `S`) is `y_{t−1−i}`. Composite states `(y_t, y_{t−1}, …, y_{t−p})`
/// use the same layout with `y_t` as digit 0. Hence for a composite label
/// `x`, the target symbol is `x mod S` and the order-`q` context is
/// `(x / S) mod S^q`.
///
/// Human-readable context strings list symbols oldest-first, comma
/// separated (`"y_{t−q},…,y_{t−1}"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ContextCodec {
    pub symbols: usize,
}

impl ContextCodec {
    pub fn new(symbols: StateSpace) -> Self {
        Self { symbols: symbols.size() }
    }

    pub fn count(&self, len: usize) -> usize {
        self.symbols.pow(len as u32)
    }

    /// Symbols most-recent-first.
    pub fn decode(&self, mut index: usize, len: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            out.push(index % self.symbols);
            index /= self.symbols;
        }
        out
    }

    /// Inverse of [`decode`](Self::decode).
    pub fn encode(&self, recent_first: &[usize]) -> usize {
        recent_first.iter().rev().fold(0, |acc, &y| acc * self.symbols + y)
    }

    pub fn format(&self, index: usize, len: usize) -> String {
        let mut syms = self.decode(index, len);
        syms.reverse();
        syms.iter().map(|y| y.to_string()).collect::<Vec<_>>().join(",")
    }

    /// Parses an oldest-first context string. Symbols may be comma
    /// separated, or concatenated digits when `S ≤ 10`. The empty string is
    /// the order-0 context.
    pub fn parse(&self, text: &str, len: usize) -> Result<usize> {
        let bad = |reason: String| Error::InvalidContext { context: text.to_string(), reason };
        let trimmed = text.trim();
        let tokens: Vec<&str> = if trimmed.is_empty() {
            Vec::new()
        } else if trimmed.contains(',') {
            trimmed.split(',').map(str::trim).collect()
        } else if self.symbols <= 10 {
            trimmed.char_indices().map(|(i, c)| &trimmed[i..i + c.len_utf8()]).collect()
        } else {
            vec![trimmed]
        };
        if tokens.len() != len {
            return Err(bad(format!("expected {len} symbols, found {}", tokens.len())));
        }
        let mut oldest_first = Vec::with_capacity(len);
        for tok in tokens {
            let y: usize = tok.parse().map_err(|_| bad(format!("{tok:?} is not a symbol")))?;
            if y >= self.symbols {
                return Err(bad(format!("symbol {y} outside 0..{}", self.symbols)));
            }
            oldest_first.push(y);
        }
        oldest_first.reverse();
        Ok(self.encode(&oldest_first))
    }

    pub fn target(&self, composite: usize) -> usize {
        composite % self.symbols
    }

    pub fn context(&self, composite: usize, order: usize) -> usize {
        (composite / self.symbols) % self.count(order)
    }

    /// Composite label reached from `composite` when the next symbol is
    /// `next`, in a window of `p + 1` symbols.
    pub fn shift(&self, composite: usize, next: usize, p: usize) -> usize {
        next + self.symbols * (composite % self.count(p))
    }
}

/// An order-`k` chain on `𝒴`: `conditional[c]` is the law of `y_t` given the
/// context `c` of the `k` previous symbols (encoded by [`ContextCodec`]).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HigherOrderChainSpec {
    pub symbols: StateSpace,
    pub order: usize,
    pub conditional: Vec<Vec<f64>>,
}

impl HigherOrderChainSpec {
    pub fn new(symbols: StateSpace, order: usize, conditional: Vec<Vec<f64>>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidOrder("chain order must be at least 1".into()));
        }
        let s = symbols.size();
        let codec = ContextCodec::new(symbols);
        let expected = s
            .checked_pow(order as u32)
            .ok_or_else(|| Error::InvalidOrder(format!("{s}^{order} contexts overflow")))?;
        if conditional.len() != expected {
            return Err(Error::InvalidOrder(format!(
                "order {order} over {s} symbols needs {expected} conditional rows, got {}",
                conditional.len()
            )));
        }
        for (c, row) in conditional.iter().enumerate() {
            let name = codec.format(c, order);
            if row.len() != s {
                return Err(Error::InvalidContext {
                    context: name,
                    reason: format!("row has {} entries, expected {s}", row.len()),
                });
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidContext { context: name, reason: format!("entry {v} outside [0, 1]") });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidContext { context: name, reason: format!("sums to {sum}, expected 1") });
            }
        }
        Ok(Self { symbols, order, conditional })
    }

    /// An order-1 chain whose conditional table is the kernel itself.
    pub fn from_kernel(kernel: &TransitionKernel) -> Self {
        Self { symbols: kernel.states(), order: 1, conditional: kernel.rows() }
    }

    pub fn codec(&self) -> ContextCodec {
        ContextCodec::new(self.symbols)
    }

    /// `P(y_t = · | context)` for a context of at least `order` symbols.
    pub fn next_symbol_law(&self, context: usize) -> &[f64] {
        &self.conditional[context % self.codec().count(self.order)]
    }
}

/// The order-1 chain `X_t = (Y_t, …, Y_{t−p})` on `𝒴^{p+1}`.
#[derive(Debug, Clone)]
pub struct MarkovizedChain {
    pub base: HigherOrderChainSpec,
    pub embedding_order: usize,
    pub kernel: TransitionKernel,
    pub stationary: StationaryDistribution,
    pub codec: ContextCodec,
}

impl MarkovizedChain {
    pub fn symbols(&self) -> usize {
        self.codec.symbols
    }

    pub fn size(&self) -> usize {
        self.kernel.size()
    }

    /// `(y_t, y_{t−1}, …, y_{t−p})`.
    pub fn decode_state(&self, composite: usize) -> Vec<usize> {
        self.codec.decode(composite, self.embedding_order + 1)
    }

    pub fn encode_state(&self, recent_first: &[usize]) -> usize {
        self.codec.encode(recent_first)
    }

    pub fn target(&self, composite: usize) -> usize {
        self.codec.target(composite)
    }

    /// Composite labels for a symbol stream `y_1, …, y_L`, one per position
    /// with a full window, i.e. `t = p+1..=L`.
    pub fn states_from_stream(&self, stream: &[usize]) -> Vec<usize> {
        let w = self.embedding_order + 1;
        stream
            .windows(w)
            .map(|win| {
                let recent_first: Vec<usize> = win.iter().rev().copied().collect();
                self.codec.encode(&recent_first)
            })
            .collect()
    }
}

pub fn markovize(base: &HigherOrderChainSpec, p: usize) -> Result<MarkovizedChain> {
    markovize_with_cap(base, p, DEFAULT_COMPOSITE_CAP)
}

pub fn markovize_with_cap(base: &HigherOrderChainSpec, p: usize, cap: usize) -> Result<MarkovizedChain> {
    if p < base.order {
        return Err(Error::InvalidOrder(format!(
            "embedding order {p} is below the chain order {}",
            base.order
        )));
    }
    let codec = base.codec();
    let states = base
        .symbols
        .size()
        .checked_pow(p as u32 + 1)
        .filter(|&n| n <= cap)
        .ok_or(Error::SizeOverflow {
            states: (base.symbols.size() as f64).powi(p as i32 + 1) as usize,
            cap,
        })?;
    let mut matrix = DMatrix::<f64>::zeros(states, states);
    for x in 0..states {
        let law = base.next_symbol_law(x);
        for (y, &prob) in law.iter().enumerate() {
            matrix[(x, codec.shift(x, y, p))] = prob;
        }
    }
    let kernel = TransitionKernel::from_matrix(matrix)?;
    let stationary = stationary_distribution(&kernel)?;
    Ok(MarkovizedChain { base: base.clone(), embedding_order: p, kernel, stationary, codec })
}
