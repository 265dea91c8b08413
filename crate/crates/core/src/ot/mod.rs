//! Ground costs and 1-Wasserstein optimal transport between finite
//! distributions.
//!
//! [`wasserstein1_exact`] solves the transportation linear program with the
//! transportation simplex and is the default everywhere. [`wasserstein1_sinkhorn`]
//! solves the entropically regularized problem and is meant for large batch
//! jobs where a small bias is acceptable.

mod simplex;
mod sinkhorn;

pub use simplex::transport_simplex;
pub use sinkhorn::{sinkhorn_log, SinkhornParams};

use thiserror::Error;

use crate::distributions::ComponentDistribution;

/// Marginal tolerance for exact plans.
pub const MARGINAL_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OtError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("sinkhorn did not converge after {iterations} iterations (marginal violation {violation:e})")]
    NotConverged { iterations: usize, violation: f64 },
}

/// Dense, row-major, nonnegative ground-cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    costs: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, costs: Vec<f64>) -> Result<Self, OtError> {
        if costs.len() != rows * cols {
            return Err(OtError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                costs.len()
            )));
        }
        if let Some(bad) = costs.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
            return Err(OtError::NumericalFailure(format!(
                "invalid cost entry {bad}"
            )));
        }
        Ok(CostMatrix { rows, cols, costs })
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self, OtError> {
        let costs = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self::new(rows, cols, costs)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.costs
    }

    pub fn max(&self) -> f64 {
        self.costs.iter().copied().fold(0.0, f64::max)
    }

    pub fn median(&self) -> f64 {
        let mut sorted = self.costs.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        if n == 0 {
            0.0
        } else if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        }
    }

    pub fn transpose(&self) -> CostMatrix {
        let costs = (0..self.cols)
            .flat_map(|j| (0..self.rows).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        CostMatrix {
            rows: self.cols,
            cols: self.rows,
            costs,
        }
    }
}

pub fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Pairwise Euclidean distances between two supports.
pub fn cost_matrix(
    alpha_support: &[Vec<f64>],
    beta_support: &[Vec<f64>],
) -> Result<CostMatrix, OtError> {
    let dim = alpha_support
        .first()
        .or(beta_support.first())
        .map_or(0, Vec::len);
    for (side, support) in [("alpha", alpha_support), ("beta", beta_support)] {
        if let Some((idx, v)) = support.iter().enumerate().find(|(_, v)| v.len() != dim) {
            return Err(OtError::DimensionMismatch(format!(
                "{side} support point {idx} has dimension {}, expected {dim}",
                v.len()
            )));
        }
    }
    CostMatrix::from_fn(alpha_support.len(), beta_support.len(), |i, j| {
        euclidean(&alpha_support[i], &beta_support[j])
    })
}

/// A coupling of two distributions and its transport cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows x cols` masses.
    pub gamma: Vec<f64>,
    pub objective: f64,
}

impl TransportPlan {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.gamma[i * self.cols + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.gamma
            .chunks(self.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// Largest absolute deviation of either marginal from `(a, b)`.
    pub fn marginal_violation(&self, a: &[f64], b: &[f64]) -> f64 {
        let rows = self
            .row_sums()
            .into_iter()
            .zip(a)
            .map(|(s, w)| (s - w).abs());
        let cols = self
            .col_sums()
            .into_iter()
            .zip(b)
            .map(|(s, w)| (s - w).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }
}

pub(crate) fn plan_objective(cost: &CostMatrix, gamma: &[f64]) -> f64 {
    cost.as_slice().iter().zip(gamma).map(|(c, g)| c * g).sum()
}

/// Scale nonnegative weights to sum to exactly one (up to rounding).
pub(crate) fn normalize(weights: &[f64], side: &str) -> Result<Vec<f64>, OtError> {
    if weights.is_empty() {
        return Err(OtError::NumericalFailure(format!(
            "{side} has empty support"
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(OtError::NumericalFailure(format!(
            "{side} has invalid weight {w}"
        )));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(OtError::NumericalFailure(format!(
            "{side} has zero total mass"
        )));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

fn check_shapes(a: &[f64], b: &[f64], cost: &CostMatrix) -> Result<(), OtError> {
    if cost.rows() != a.len() || cost.cols() != b.len() {
        return Err(OtError::DimensionMismatch(format!(
            "cost matrix is {}x{} but weights have lengths {} and {}",
            cost.rows(),
            cost.cols(),
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Exact W1 between two distributions under `costs`.
pub fn wasserstein1_exact(
    alpha: &ComponentDistribution,
    beta: &ComponentDistribution,
    costs: &CostMatrix,
) -> Result<TransportPlan, OtError> {
    transport_simplex(&alpha.weights, &beta.weights, costs)
}

/// Entropic approximation of W1. The reported objective excludes the entropy
/// term.
pub fn wasserstein1_sinkhorn(
    alpha: &ComponentDistribution,
    beta: &ComponentDistribution,
    costs: &CostMatrix,
    params: SinkhornParams,
) -> Result<TransportPlan, OtError> {
    sinkhorn_log(&alpha.weights, &beta.weights, costs, params)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_supports_have_zero_diagonal() {
        let pts = vec![vec![0.3, -1.0], vec![2.0, 5.5], vec![1e-3, 7.0]];
        let c = cost_matrix(&pts, &pts).unwrap();
        for i in 0..3 {
            assert_eq!(c.get(i, i), 0.0);
        }
    }

    #[test]
    fn three_four_five() {
        let c = cost_matrix(&[vec![0.0, 0.0]], &[vec![3.0, 4.0]]).unwrap();
        assert_eq!(c.as_slice(), &[5.0]);
    }

    #[test]
    fn matches_scalar_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let a: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let b: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let c = cost_matrix(&a, &b).unwrap();
        for i in 0..4 {
            for j in 0..6 {
                let mut acc = 0.0;
                for d in 0..5 {
                    acc += (a[i][d] - b[j][d]) * (a[i][d] - b[j][d]);
                }
                assert!((c.get(i, j) - acc.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ragged_support_is_rejected() {
        let err = cost_matrix(&[vec![0.0, 1.0]], &[vec![1.0]]).unwrap_err();
        assert!(matches!(err, OtError::DimensionMismatch(_)));
    }

    #[test]
    fn median_and_transpose() {
        let c = CostMatrix::new(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(c.median(), 3.5);
        let t = c.transpose();
        assert_eq!((t.rows(), t.cols()), (3, 2));
        assert_eq!(t.get(2, 1), 6.0);
        assert_eq!(t.get(0, 1), 4.0);
    }
}
