use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::kernel::{StateSpace, TransitionKernel};
use super::markovize::{ContextCodec, HigherOrderChainSpec};
use crate::{Error, Result};

/// JSON chain description: either `{"kernel": [[...]]}` for an order-1
/// chain, or `{"symbols": S, "order": k, "conditional": {context: [probs]}}`
/// with oldest-first context strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainInput {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbols: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditional: Option<BTreeMap<String, Vec<f64>>>,
}

impl ChainInput {
    pub fn from_kernel(rows: Vec<Vec<f64>>) -> Self {
        Self { kernel: Some(rows), symbols: None, order: None, conditional: None }
    }

    pub fn is_kernel(&self) -> bool {
        self.kernel.is_some()
    }

    pub fn to_spec(&self) -> Result<HigherOrderChainSpec> {
        match (&self.kernel, &self.conditional) {
            (Some(rows), None) => {
                if self.order.is_some_and(|k| k != 1) {
                    return Err(Error::Config("a \"kernel\" chain has order 1".into()));
                }
                Ok(HigherOrderChainSpec::from_kernel(&TransitionKernel::new(rows)?))
            }
            (None, Some(table)) => {
                let symbols = StateSpace::new(
                    self.symbols.ok_or_else(|| Error::Config("missing field \"symbols\"".into()))?,
                )?;
                let order = self.order.ok_or_else(|| Error::Config("missing field \"order\"".into()))?;
                let codec = ContextCodec::new(symbols);
                let count = codec.count(order);
                let mut rows: Vec<Option<Vec<f64>>> = vec![None; count];
                for (context, probs) in table {
                    let idx = codec.parse(context, order)?;
                    if rows[idx].replace(probs.clone()).is_some() {
                        return Err(Error::InvalidContext {
                            context: context.clone(),
                            reason: "duplicate context".into(),
                        });
                    }
                }
                let rows = rows
                    .into_iter()
                    .enumerate()
                    .map(|(idx, row)| {
                        row.ok_or_else(|| Error::InvalidContext {
                            context: codec.format(idx, order),
                            reason: "missing conditional row".into(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                HigherOrderChainSpec::new(symbols, order, rows)
            }
            (Some(_), Some(_)) => Err(Error::Config("give either \"kernel\" or \"conditional\", not both".into())),
            (None, None) => Err(Error::Config("chain needs a \"kernel\" or a \"conditional\" table".into())),
        }
    }
}
