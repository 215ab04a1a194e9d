use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Row sums must match 1 within this absolute tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Bound on `‖QK − Q‖₁` accepted from the stationary solve.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;
/// Stationary masses at or below this value cannot be reversed.
pub const MIN_REVERSIBLE_MASS: f64 = 1e-14;

/// A finite alphabet `{0, …, S−1}` with `S ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct StateSpace(usize);

impl StateSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::StateSpaceTooSmall(size));
        }
        Ok(Self(size))
    }

    pub fn size(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for StateSpace {
    type Error = Error;

    fn try_from(size: usize) -> Result<Self> {
        Self::new(size)
    }
}

impl From<StateSpace> for usize {
    fn from(space: StateSpace) -> usize {
        space.0
    }
}

/// A row-stochastic, primitive transition matrix on a finite state space.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    matrix: DMatrix<f64>,
}

impl TransitionKernel {
    /// Validates a kernel given as rows.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        Self::with_tolerance(rows, ROW_SUM_TOL)
    }

    pub fn with_tolerance(rows: &[Vec<f64>], row_sum_tol: f64) -> Result<Self> {
        let size = rows.len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != size {
                return Err(Error::NotSquare { row, len: r.len(), expected: size });
            }
        }
        let matrix = DMatrix::from_fn(size, size, |i, j| rows[i][j]);
        Self::from_matrix_with_tolerance(matrix, row_sum_tol)
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        Self::from_matrix_with_tolerance(matrix, ROW_SUM_TOL)
    }

    pub fn from_matrix_with_tolerance(matrix: DMatrix<f64>, row_sum_tol: f64) -> Result<Self> {
        let size = matrix.nrows();
        if matrix.ncols() != size {
            return Err(Error::NotSquare { row: 0, len: matrix.ncols(), expected: size });
        }
        StateSpace::new(size)?;
        for i in 0..size {
            let mut sum = 0.0;
            for j in 0..size {
                let v = matrix[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidRow {
                        row: i,
                        reason: format!("entry {j} = {v} is outside [0, 1]"),
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > row_sum_tol {
                return Err(Error::InvalidRow { row: i, reason: format!("sums to {sum}, expected 1") });
            }
        }
        if !is_primitive(&matrix) {
            return Err(Error::NonPrimitive { bound: size * size });
        }
        Ok(Self { matrix })
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn states(&self) -> StateSpace {
        StateSpace(self.size())
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.matrix[(from, to)]
    }

    pub fn row(&self, from: usize) -> Vec<f64> {
        self.matrix.row(from).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.size()).map(|i| self.row(i)).collect()
    }

    /// `K^t` by repeated squaring.
    pub fn power(&self, t: usize) -> DMatrix<f64> {
        let mut result = DMatrix::identity(self.size(), self.size());
        let mut base = self.matrix.clone();
        let mut e = t;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        result
    }
}

/// Boolean-power primitivity test: some `K^t` with `t ≤ (S−1)² + 1` (the
/// Wielandt exponent, itself `≤ S²`) must be entrywise positive.
pub fn is_primitive(matrix: &DMatrix<f64>) -> bool {
    let n = matrix.nrows();
    let words = n.div_ceil(64);
    let support = BitMatrix::from_fn(n, words, |i, j| matrix[(i, j)] > 0.0);
    let wielandt = (n - 1) * (n - 1) + 1;
    support.power(wielandt).is_full()
}

#[derive(Clone)]
struct BitMatrix {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitMatrix {
    fn from_fn(n: usize, words: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = vec![0u64; n * words];
        for i in 0..n {
            for j in 0..n {
                if f(i, j) {
                    bits[i * words + j / 64] |= 1 << (j % 64);
                }
            }
        }
        Self { n, words, bits }
    }

    fn identity(n: usize, words: usize) -> Self {
        Self::from_fn(n, words, |i, j| i == j)
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0u64; self.n * self.words];
        for i in 0..self.n {
            let dst = &mut out[i * self.words..(i + 1) * self.words];
            for j in 0..self.n {
                if self.row(i)[j / 64] >> (j % 64) & 1 == 1 {
                    for (d, s) in dst.iter_mut().zip(other.row(j)) {
                        *d |= s;
                    }
                }
            }
        }
        Self { n: self.n, words: self.words, bits: out }
    }

    fn power(&self, mut e: usize) -> Self {
        let mut result = Self::identity(self.n, self.words);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    fn is_full(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.row(i)[j / 64] >> (j % 64) & 1 == 1))
    }
}

/// The invariant law `Q` of a kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub probs: Vec<f64>,
}

impl StationaryDistribution {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// `‖QK − Q‖₁`.
    pub fn residual(&self, kernel: &TransitionKernel) -> f64 {
        let q = DVector::from_column_slice(&self.probs);
        let qk = kernel.matrix().tr_mul(&q);
        (qk - q).iter().map(|v| v.abs()).sum()
    }
}

/// Solves `QK = Q`, `Σ Q = 1` by replacing the last balance equation with the
/// normalisation constraint.
pub fn stationary_distribution(kernel: &TransitionKernel) -> Result<StationaryDistribution> {
    stationary_distribution_with_tolerance(kernel, STATIONARY_RESIDUAL_TOL)
}

pub fn stationary_distribution_with_tolerance(
    kernel: &TransitionKernel,
    residual_tol: f64,
) -> Result<StationaryDistribution> {
    let n = kernel.size();
    let mut system = kernel.matrix().transpose() - DMatrix::<f64>::identity(n, n);
    for j in 0..n {
        system[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[n - 1] = 1.0;
    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or(Error::NumericalFailure { residual: f64::INFINITY, tolerance: residual_tol })?;

    let mut probs: Vec<f64> = solution.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    let q = StationaryDistribution { probs };
    let residual = q.residual(kernel);
    if !(residual <= residual_tol) {
        return Err(Error::NumericalFailure { residual, tolerance: residual_tol });
    }
    Ok(q)
}

/// `sup_A |P1(A) − P2(A)| = ½ Σ |P1_i − P2_i|`.
pub fn total_variation(p1: &[f64], p2: &[f64]) -> Result<f64> {
    if p1.len() != p2.len() {
        return Err(Error::DimensionMismatch { left: p1.len(), right: p2.len() });
    }
    let half_l1 = 0.5 * p1.iter().zip(p2).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(half_l1.clamp(0.0, 1.0))
}

/// The time reversal `K*(x, z) = Q(z) K(z, x) / Q(x)`, the adjoint of `K`
/// on `L²(Q)`.
pub fn time_reversal(kernel: &TransitionKernel, q: &StationaryDistribution) -> Result<TransitionKernel> {
    if q.len() != kernel.size() {
        return Err(Error::DimensionMismatch { left: q.len(), right: kernel.size() });
    }
    if let Some((state, &mass)) = q.probs.iter().enumerate().find(|(_, &m)| m <= MIN_REVERSIBLE_MASS) {
        return Err(Error::ZeroStationaryMass { state, mass });
    }
    let n = kernel.size();
    let k = kernel.matrix();
    let mut reversed = DMatrix::from_fn(n, n, |x, z| q.probs[z] * k[(z, x)] / q.probs[x]);
    // Row sums equal 1 up to the stationary residual; renormalise so the
    // result passes the strict kernel validation.
    for x in 0..n {
        let sum: f64 = reversed.row(x).sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidRow { row: x, reason: format!("reversed row sums to {sum}") });
        }
        reversed.row_mut(x).iter_mut().for_each(|v| *v = (*v / sum).min(1.0));
    }
    TransitionKernel::from_matrix_with_tolerance(reversed, 1e-10)
}
