use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Misclassification,
    GeneralBounded,
}

/// A loss `L(predicted, actual)` with values rescaled into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    /// `table[predicted][actual]`.
    pub table: Vec<Vec<f64>>,
    /// Marks a training loss that stands in for the selection loss.
    #[serde(default)]
    pub surrogate: bool,
}

impl LossSpec {
    pub fn misclassification(symbols: usize) -> Self {
        let table = (0..symbols)
            .map(|y| (0..symbols).map(|z| if y == z { 0.0 } else { 1.0 }).collect())
            .collect();
        Self { kind: LossKind::Misclassification, table, surrogate: false }
    }

    pub fn general(table: Vec<Vec<f64>>) -> Result<Self> {
        let s = table.len();
        for (y, row) in table.iter().enumerate() {
            if row.len() != s {
                return Err(Error::DimensionMismatch { left: row.len(), right: s });
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::Range(format!("loss entry {v} in row {y} lies outside [0, 1]")));
            }
        }
        Ok(Self { kind: LossKind::GeneralBounded, table, surrogate: false })
    }

    pub fn as_surrogate(mut self) -> Self {
        self.surrogate = true;
        self
    }

    pub fn symbols(&self) -> usize {
        self.table.len()
    }

    pub fn is_misclassification(&self) -> bool {
        self.kind == LossKind::Misclassification
    }

    #[inline]
    pub fn loss(&self, predicted: usize, actual: usize) -> f64 {
        self.table[predicted][actual]
    }

    /// Checks the table against the alphabet and, for the misclassification
    /// kind, that it really is `1 − I`.
    pub fn validate(&self, symbols: usize) -> Result<()> {
        if self.symbols() != symbols {
            return Err(Error::DimensionMismatch { left: self.symbols(), right: symbols });
        }
        if self.is_misclassification() && self.table != Self::misclassification(symbols).table {
            return Err(Error::Config("misclassification loss must be 1 - identity".into()));
        }
        Self::general(self.table.clone()).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn misclassification_is_one_minus_identity() {
        let l = LossSpec::misclassification(3);
        assert_eq!(l.loss(1, 1), 0.0);
        assert_eq!(l.loss(1, 2), 1.0);
        l.validate(3).unwrap();
        assert!(l.validate(2).is_err());
    }

    #[test]
    fn general_rejects_out_of_range() {
        assert!(LossSpec::general(vec![vec![0.0, 1.2], vec![0.0, 0.0]]).is_err());
        let mut fake = LossSpec::general(vec![vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap();
        fake.kind = LossKind::Misclassification;
        assert!(fake.validate(2).is_err());
    }
}
