use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::chain::{ContextCodec, MarkovizedChain, StateSpace};
use crate::{Error, Result};

/// A predictor `g: 𝒴^q → 𝒴` stored as a total lookup table indexed by the
/// most-recent-first context encoding of [`ContextCodec`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PredictorTable {
    order: usize,
    symbols: usize,
    table: Vec<usize>,
}

impl PredictorTable {
    pub fn new(order: usize, symbols: usize, table: Vec<usize>) -> Result<Self> {
        let expected = symbols.pow(order as u32);
        if table.len() != expected {
            return Err(Error::DimensionMismatch { left: table.len(), right: expected });
        }
        if let Some(y) = table.iter().find(|&&y| y >= symbols) {
            return Err(Error::Range(format!("prediction {y} outside 0..{symbols}")));
        }
        Ok(Self { order, symbols, table })
    }

    pub fn constant(symbols: usize, prediction: usize) -> Result<Self> {
        Self::new(0, symbols, vec![prediction])
    }

    /// Every table of order `q` over `symbols` symbols, in lexicographic
    /// order of `(g(0), g(1), …)`.
    pub fn enumerate(order: usize, symbols: usize) -> impl Iterator<Item = Self> {
        let contexts = symbols.pow(order as u32);
        let total = symbols.pow(contexts as u32);
        (0..total).map(move |mut code| {
            let mut table = vec![0; contexts];
            for slot in table.iter_mut().rev() {
                *slot = code % symbols;
                code /= symbols;
            }
            Self { order, symbols, table }
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn symbols(&self) -> usize {
        self.symbols
    }

    pub fn entries(&self) -> &[usize] {
        &self.table
    }

    pub fn predict_context(&self, context: usize) -> usize {
        self.table[context]
    }

    /// Prediction for composite state `x`, using the `q` symbols preceding
    /// its target.
    #[inline]
    pub fn predict_state(&self, composite: usize) -> usize {
        let context = (composite / self.symbols) % self.table.len();
        self.table[context]
    }

    pub(crate) fn check_against(&self, chain: &MarkovizedChain) -> Result<()> {
        if self.symbols != chain.symbols() {
            return Err(Error::DimensionMismatch { left: self.symbols, right: chain.symbols() });
        }
        if self.order > chain.embedding_order {
            return Err(Error::InvalidOrder(format!(
                "predictor order {} exceeds the embedding order {}",
                self.order, chain.embedding_order
            )));
        }
        Ok(())
    }

    pub fn to_map(&self) -> BTreeMap<String, usize> {
        let codec = ContextCodec { symbols: self.symbols };
        self.table.iter().enumerate().map(|(c, &y)| (codec.format(c, self.order), y)).collect()
    }

    /// Inverse of [`to_map`](Self::to_map); the order is read off the keys.
    pub fn from_map(symbols: usize, map: &BTreeMap<String, usize>) -> Result<Self> {
        let codec = ContextCodec::new(StateSpace::new(symbols)?);
        let first = map.keys().next().ok_or_else(|| Error::Config("empty predictor table".into()))?;
        let order = if first.trim().is_empty() {
            0
        } else if first.contains(',') {
            first.split(',').count()
        } else {
            first.trim().chars().count()
        };
        let mut table = vec![None; codec.count(order)];
        for (key, &y) in map {
            let idx = codec.parse(key, order)?;
            table[idx] = Some(y);
        }
        let table = table
            .into_iter()
            .enumerate()
            .map(|(c, y)| {
                y.ok_or_else(|| Error::InvalidContext { context: codec.format(c, order), reason: "missing".into() })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(order, symbols, table)
    }
}

impl Serialize for PredictorTable {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_map().serialize(serializer)
    }
}
