use serde::{Deserialize, Serialize};

use crate::chain::MarkovizedChain;
use crate::{Error, Result};

/// Bisection bracket and tolerance for the critical radius.
pub const TAU_BRACKET: (f64, f64) = (1e-15, 1.0);
pub const TAU_TOLERANCE: f64 = 1e-12;
/// Margins at or below this count as zero.
pub const ZERO_MARGIN_TOL: f64 = 1e-12;

pub(crate) fn check_mt(alpha: f64, h: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Range(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Range(format!("h = {h} must be positive")));
    }
    Ok(())
}

/// A modulus `ω` with `ω(x)/√x` non-increasing, bounding the standard
/// deviation of the disagreement with `g*` by a function of the excess risk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `ω(r) = (r/h)^{α/2}`.
    MammenTsybakov { alpha: f64, h: f64 },
    /// `(x, ω(x))` pairs with increasing `x`; `ω(x)/√x` is interpolated
    /// linearly between grid points and held constant outside them.
    Tabulated { points: Vec<(f64, f64)> },
}

impl NoiseModel {
    pub fn mammen_tsybakov(alpha: f64, h: f64) -> Result<Self> {
        check_mt(alpha, h)?;
        Ok(NoiseModel::MammenTsybakov { alpha, h })
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        let model = NoiseModel::Tabulated { points };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::MammenTsybakov { alpha, h } => check_mt(*alpha, *h),
            NoiseModel::Tabulated { points } => {
                if points.is_empty() {
                    return Err(Error::Config("tabulated omega needs at least one point".into()));
                }
                for w in points.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(Error::Config(format!("omega grid not increasing at x = {}", w[1].0)));
                    }
                }
                for &(x, w) in points {
                    if !(x > 0.0 && x.is_finite()) || !(w >= 0.0 && w.is_finite()) {
                        return Err(Error::Config(format!("invalid omega grid point ({x}, {w})")));
                    }
                }
                let ratios: Vec<f64> = points.iter().map(|&(x, w)| w / x.sqrt()).collect();
                for (i, r) in ratios.windows(2).enumerate() {
                    if r[1] > r[0] * (1.0 + 1e-12) {
                        return Err(Error::Config(format!(
                            "omega(x)/sqrt(x) increases between x = {} and x = {}",
                            points[i].0,
                            points[i + 1].0
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn omega(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Range(format!("omega needs r >= 0, got {r}")));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        Ok(match self {
            NoiseModel::MammenTsybakov { alpha, h } => (r / h).powf(alpha / 2.0),
            NoiseModel::Tabulated { points } => r.sqrt() * tabulated_ratio(points, r),
        })
    }

    /// Smallest positive solution of `ω(ε) = √m ε`.
    pub fn tau_star(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return Err(Error::Range("m must be at least 1".into()));
        }
        match self {
            NoiseModel::MammenTsybakov { alpha, h } => Ok((m as f64 * h.powf(*alpha)).powf(-1.0 / (2.0 - alpha))),
            NoiseModel::Tabulated { points } => {
                let hi = TAU_BRACKET.1.min(points.last().map_or(1.0, |p| p.0));
                self.solve_tau(m, TAU_BRACKET.0, hi)
            }
        }
    }

    /// `τ*` by bisection on `ω(ε) − √m ε` over `[lo, hi]`.
    pub fn solve_tau(&self, m: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
        let root_m = (m as f64).sqrt();
        let f = |e: f64| self.omega(e).map(|w| w - root_m * e);
        if f(lo)? <= 0.0 || f(hi)? > 0.0 {
            return Err(Error::NoSolution { m: m as f64 });
        }
        // ω(ε)/√ε is non-increasing, so f changes sign exactly once.
        while hi - lo > TAU_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if f(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn tabulated_ratio(points: &[(f64, f64)], r: f64) -> f64 {
    let ratio = |i: usize| points[i].1 / points[i].0.sqrt();
    let last = points.len() - 1;
    if r <= points[0].0 {
        return ratio(0);
    }
    if r >= points[last].0 {
        return ratio(last);
    }
    let i = points.partition_point(|p| p.0 <= r) - 1;
    let (x0, x1) = (points[i].0, points[i + 1].0);
    let s = (r - x0) / (x1 - x0);
    ratio(i) * (1.0 - s) + ratio(i + 1) * s
}

/// Margin of a binary chain: `min |2η − 1|` over contexts, `η` the
/// conditional probability of symbol 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub h: f64,
    pub zero_margin: bool,
}

pub fn margin(chain: &MarkovizedChain) -> Result<Margin> {
    let s = chain.symbols();
    if s != 2 {
        return Err(Error::BinaryOnly { symbols: s });
    }
    let h = chain
        .base
        .conditional
        .iter()
        .map(|row| (2.0 * row[1] - 1.0).abs())
        .fold(f64::INFINITY, f64::min);
    Ok(Margin { h, zero_margin: h <= ZERO_MARGIN_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{markovize, HigherOrderChainSpec, TransitionKernel};

    #[test]
    fn mt_closed_form() {
        let m = NoiseModel::mammen_tsybakov(1.0, 0.6).unwrap();
        assert!((m.tau_star(100).unwrap() - 1.0 / 60.0).abs() < 1e-15);
        assert_eq!(m.omega(0.0).unwrap(), 0.0);
        assert!((m.omega(0.6).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bisection_matches_closed_form() {
        for &(alpha, h) in &[(1.0, 0.6), (0.5, 0.6), (0.25, 0.1), (0.8, 2.0)] {
            let model = NoiseModel::mammen_tsybakov(alpha, h).unwrap();
            for &m in &[10usize, 100, 1000, 100_000] {
                let closed = model.tau_star(m).unwrap();
                let solved = model.solve_tau(m, TAU_BRACKET.0, TAU_BRACKET.1).unwrap();
                assert!((closed - solved).abs() < 1e-10, "alpha {alpha} h {h} m {m}");
            }
        }
    }

    #[test]
    fn ratio_non_increasing_for_mt() {
        for &alpha in &[0.1, 0.5, 1.0] {
            let model = NoiseModel::mammen_tsybakov(alpha, 0.7).unwrap();
            let ratios: Vec<f64> =
                (1..=1000).map(|i| i as f64 / 1000.0).map(|x| model.omega(x).unwrap() / x.sqrt()).collect();
            assert!(ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
        }
    }

    #[test]
    fn tabulated_model() {
        // Samples of the α = 1, h = 0.6 model: ratio is constant, so the
        // interpolated model reproduces the closed form.
        let mt = NoiseModel::mammen_tsybakov(1.0, 0.6).unwrap();
        let points: Vec<(f64, f64)> = [1e-4, 1e-3, 0.01, 0.1, 1.0].iter().map(|&x| (x, mt.omega(x).unwrap())).collect();
        let tab = NoiseModel::tabulated(points).unwrap();
        assert!((tab.tau_star(100).unwrap() - 1.0 / 60.0).abs() < 1e-10);

        assert!(NoiseModel::tabulated(vec![(0.1, 0.1), (0.2, 1.0)]).is_err());
        assert!(NoiseModel::tabulated(vec![(0.2, 0.1), (0.1, 0.05)]).is_err());
        // ω(ε) = 0.01 √ε meets ε at 1e-4, beyond the last grid point.
        let flat = NoiseModel::tabulated(vec![(1e-8, 1e-6), (1e-6, 1e-5)]).unwrap();
        assert!(matches!(flat.tau_star(1), Err(Error::NoSolution { .. })));
    }

    #[test]
    fn margins() {
        let k = TransitionKernel::new(&[vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let chain = markovize(&HigherOrderChainSpec::from_kernel(&k), 1).unwrap();
        let m = margin(&chain).unwrap();
        assert!((m.h - 0.6).abs() < 1e-12 && !m.zero_margin);

        let k = TransitionKernel::new(&[vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        let chain = markovize(&HigherOrderChainSpec::from_kernel(&k), 1).unwrap();
        assert!(margin(&chain).unwrap().zero_margin);

        let three = TransitionKernel::new(&[vec![0.4, 0.3, 0.3], vec![0.3, 0.4, 0.3], vec![0.3, 0.3, 0.4]]).unwrap();
        let chain = markovize(&HigherOrderChainSpec::from_kernel(&three), 1).unwrap();
        assert!(matches!(margin(&chain), Err(Error::BinaryOnly { symbols: 3 })));
    }

}
