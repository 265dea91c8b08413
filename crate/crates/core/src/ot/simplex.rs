//! Transportation simplex (MODI / u-v method).
//!
//! The basis is a spanning tree on the bipartite graph of rows and columns
//! with `m + n - 1` cells, degenerate zero-flow cells included. Start from the
//! north-west corner rule; at each step compute dual potentials on the tree,
//! enter the lowest-index cell with negative reduced cost, and leave the
//! lowest-index cell among those attaining the ratio minimum on the cycle.
//! Choosing the lowest index on both sides is Bland's rule, which rules out
//! cycling on degenerate bases.

use super::{
    check_shapes, normalize, plan_objective, CostMatrix, OtError, TransportPlan, MARGINAL_TOL,
};

struct Basis {
    rows: usize,
    cols: usize,
    /// `(row, col)` of every basic cell.
    cells: Vec<(usize, usize)>,
    flows: Vec<f64>,
    /// Basis slot of each cell, row-major; `usize::MAX` when nonbasic.
    slot_of: Vec<usize>,
}

const NONBASIC: usize = usize::MAX;

impl Basis {
    fn north_west(a: &[f64], b: &[f64]) -> Basis {
        let (m, n) = (a.len(), b.len());
        let mut basis = Basis {
            rows: m,
            cols: n,
            cells: Vec::with_capacity(m + n - 1),
            flows: Vec::with_capacity(m + n - 1),
            slot_of: vec![NONBASIC; m * n],
        };
        let (mut ra, mut rb) = (a[0], b[0]);
        let (mut i, mut j) = (0, 0);
        loop {
            let x = ra.min(rb);
            basis.push(i, j, x);
            if i == m - 1 && j == n - 1 {
                break;
            }
            // Move down when the row is exhausted first (or tied); a tie
            // leaves a degenerate zero cell in the next row.
            let move_down = j == n - 1 || (i < m - 1 && ra <= rb);
            if move_down {
                rb -= x;
                i += 1;
                ra = a[i];
            } else {
                ra -= x;
                j += 1;
                rb = b[j];
            }
        }
        debug_assert_eq!(basis.cells.len(), m + n - 1);
        basis
    }

    fn push(&mut self, i: usize, j: usize, flow: f64) {
        self.slot_of[i * self.cols + j] = self.cells.len();
        self.cells.push((i, j));
        self.flows.push(flow.max(0.0));
    }

    /// Incident basis slots per node; rows are nodes `0..m`, columns `m..m+n`.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.rows + self.cols];
        for (slot, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push(slot);
            adj[self.rows + j].push(slot);
        }
        adj
    }

    fn potentials(
        &self,
        cost: &CostMatrix,
        adj: &[Vec<usize>],
    ) -> Result<(Vec<f64>, Vec<f64>), OtError> {
        let m = self.rows;
        let mut pot = vec![f64::NAN; m + self.cols];
        let mut seen = vec![false; m + self.cols];
        pot[0] = 0.0;
        seen[0] = true;
        let mut stack = vec![0usize];
        while let Some(node) = stack.pop() {
            for &slot in &adj[node] {
                let (i, j) = self.cells[slot];
                let other = if node < m { m + j } else { i };
                if !seen[other] {
                    // u_i + v_j = c_ij on every basic cell.
                    pot[other] = cost.get(i, j) - pot[node];
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(OtError::NumericalFailure(
                "basis is not a spanning tree".into(),
            ));
        }
        let v = pot.split_off(m);
        Ok((pot, v))
    }

    /// Basis slots on the tree path from column node `col` to row node `row`,
    /// in order starting at the column.
    fn path(&self, adj: &[Vec<usize>], row: usize, col: usize) -> Vec<usize> {
        let m = self.rows;
        let start = m + col;
        let mut via = vec![NONBASIC; m + self.cols];
        let mut seen = vec![false; m + self.cols];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(node) = stack.pop() {
            if node == row {
                break;
            }
            for &slot in &adj[node] {
                let (i, j) = self.cells[slot];
                let other = if node < m { m + j } else { i };
                if !seen[other] {
                    seen[other] = true;
                    via[other] = slot;
                    stack.push(other);
                }
            }
        }
        let mut slots = Vec::new();
        let mut node = row;
        while node != start {
            let slot = via[node];
            slots.push(slot);
            let (i, j) = self.cells[slot];
            node = if node < m { m + j } else { i };
        }
        slots.reverse();
        slots
    }
}

/// Exact optimal plan for the transportation problem with marginals `a`, `b`.
///
/// Weights are renormalized to unit mass before solving.
pub fn transport_simplex(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
) -> Result<TransportPlan, OtError> {
    check_shapes(a, b, cost)?;
    let a = normalize(a, "alpha")?;
    let b = normalize(b, "beta")?;
    let (m, n) = (a.len(), b.len());

    if m == 1 && n == 1 {
        return Ok(TransportPlan {
            rows: 1,
            cols: 1,
            gamma: vec![1.0],
            objective: cost.get(0, 0),
        });
    }

    let mut basis = Basis::north_west(&a, &b);
    let tol = 1e-12 * cost.max().max(1.0);
    let max_pivots = 1000 + 50 * m * n * (m + n);
    let mut pivots = 0usize;
    loop {
        let adj = basis.adjacency();
        let (u, v) = basis.potentials(cost, &adj)?;

        let entering = (0..m * n).find(|&cell| {
            basis.slot_of[cell] == NONBASIC && {
                let (i, j) = (cell / n, cell % n);
                cost.get(i, j) - u[i] - v[j] < -tol
            }
        });
        let Some(cell) = entering else { break };
        pivots += 1;
        if pivots > max_pivots {
            return Err(OtError::NumericalFailure(format!(
                "transportation simplex exceeded {max_pivots} pivots"
            )));
        }
        let (ei, ej) = (cell / n, cell % n);

        // The path from column ej to row ei closes a cycle with the entering
        // cell; its edges alternate -, +, -, ... starting at the column.
        let path = basis.path(&adj, ei, ej);
        let leave = path
            .iter()
            .step_by(2)
            .copied()
            .min_by(|&s, &t| {
                let (si, sj) = basis.cells[s];
                let (ti, tj) = basis.cells[t];
                basis.flows[s]
                    .total_cmp(&basis.flows[t])
                    .then((si * n + sj).cmp(&(ti * n + tj)))
            })
            .expect("cycle has a decreasing edge");
        let theta = basis.flows[leave];
        for (k, &slot) in path.iter().enumerate() {
            if k % 2 == 0 {
                basis.flows[slot] = (basis.flows[slot] - theta).max(0.0);
            } else {
                basis.flows[slot] += theta;
            }
        }
        let (li, lj) = basis.cells[leave];
        basis.slot_of[li * n + lj] = NONBASIC;
        basis.cells[leave] = (ei, ej);
        basis.flows[leave] = theta;
        basis.slot_of[cell] = leave;
    }

    let mut gamma = vec![0.0; m * n];
    for (&(i, j), &flow) in basis.cells.iter().zip(&basis.flows) {
        gamma[i * n + j] = flow;
    }
    let plan = TransportPlan {
        rows: m,
        cols: n,
        objective: plan_objective(cost, &gamma),
        gamma,
    };
    let violation = plan.marginal_violation(&a, &b);
    if violation > MARGINAL_TOL {
        return Err(OtError::NumericalFailure(format!(
            "plan violates marginals by {violation:e}"
        )));
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_short_circuits() {
        let c = CostMatrix::new(1, 1, vec![2.5]).unwrap();
        let plan = transport_simplex(&[1.0], &[1.0], &c).unwrap();
        assert_eq!(plan.objective, 2.5);
    }

    #[test]
    fn forced_plan_two_to_one() {
        let c = CostMatrix::new(2, 1, vec![3.0, 7.0]).unwrap();
        let plan = transport_simplex(&[0.4, 0.6], &[1.0], &c).unwrap();
        assert!((plan.objective - (0.4 * 3.0 + 0.6 * 7.0)).abs() < 1e-15);
    }

    #[test]
    fn identity_is_exactly_zero() {
        let pts: Vec<Vec<f64>> = (0..6)
            .map(|i| vec![i as f64, (i * i) as f64 * 0.1])
            .collect();
        let c = super::super::cost_matrix(&pts, &pts).unwrap();
        let w = [0.1, 0.2, 0.05, 0.3, 0.15, 0.2];
        let plan = transport_simplex(&w, &w, &c).unwrap();
        assert_eq!(plan.objective, 0.0);
    }

    #[test]
    fn north_west_corner_is_worse_than_optimum() {
        // NW corner ships everything along the anti-diagonal-expensive cells.
        let c = CostMatrix::new(2, 2, vec![10.0, 0.0, 0.0, 10.0]).unwrap();
        let plan = transport_simplex(&[0.5, 0.5], &[0.5, 0.5], &c).unwrap();
        assert_eq!(plan.objective, 0.0);
        assert_eq!(plan.get(0, 1), 0.5);
        assert_eq!(plan.get(1, 0), 0.5);
    }

    #[test]
    fn renormalizes_weights() {
        let c = CostMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let plan = transport_simplex(&[2.0, 2.0], &[1.0, 3.0], &c).unwrap();
        assert!((plan.objective - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        let c = CostMatrix::new(2, 2, vec![0.0; 4]).unwrap();
        assert!(matches!(
            transport_simplex(&[1.0], &[0.5, 0.5], &c),
            Err(OtError::DimensionMismatch(_))
        ));
        assert!(matches!(
            transport_simplex(&[0.0, 0.0], &[0.5, 0.5], &c),
            Err(OtError::NumericalFailure(_))
        ));
        assert!(matches!(
            transport_simplex(&[f64::NAN, 1.0], &[0.5, 0.5], &c),
            Err(OtError::NumericalFailure(_))
        ));
    }

    #[test]
    fn degenerate_equal_marginals() {
        // Equal partial sums make the north-west start degenerate.
        let c = CostMatrix::from_fn(3, 3, |i, j| ((i * 7 + j * 3) % 5) as f64).unwrap();
        let w = [1.0 / 3.0; 3];
        let plan = transport_simplex(&w, &w, &c).unwrap();
        // Brute force over the 6 permutation matrices (optimal for uniform
        // equal-size marginals).
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let best = perms
            .iter()
            .map(|p| (0..3).map(|i| c.get(i, p[i])).sum::<f64>() / 3.0)
            .fold(f64::INFINITY, f64::min);
        assert!((plan.objective - best).abs() < 1e-12);
    }
}
