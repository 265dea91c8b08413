//! Log-domain Sinkhorn iterations for entropically regularized transport.

use serde::{Deserialize, Serialize};

use super::{check_shapes, normalize, plan_objective, CostMatrix, OtError, TransportPlan};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinkhornParams {
    pub epsilon: f64,
    pub max_iters: usize,
    /// Stop once the max-norm marginal violation drops below this.
    pub tol: f64,
}

impl Default for SinkhornParams {
    fn default() -> Self {
        SinkhornParams {
            epsilon: 0.01,
            max_iters: 1_000_000,
            tol: 1e-6,
        }
    }
}

/// Ratio between consecutive regularization levels when annealing.
const SCALING_FACTOR: f64 = 0.5;
/// Marginal tolerance for intermediate annealing stages.
const STAGE_TOL: f64 = 1e-4;

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Alternate exact updates of the dual potentials `f` and `g`. After each `g`
/// update the column marginals hold exactly, so convergence is judged on the
/// rows.
///
/// Small `epsilon` is reached by annealing: the potentials are first solved
/// at a large regularization and warm-started through a geometric schedule
/// down to the target. Only the last stage must reach `tol`; `max_iters`
/// bounds the iterations of all stages together.
pub fn sinkhorn_log(
    a: &[f64],
    b: &[f64],
    cost: &CostMatrix,
    params: SinkhornParams,
) -> Result<TransportPlan, OtError> {
    check_shapes(a, b, cost)?;
    if !(params.epsilon > 0.0 && params.epsilon.is_finite()) {
        return Err(OtError::NumericalFailure(format!(
            "epsilon must be positive, got {}",
            params.epsilon
        )));
    }
    let a = normalize(a, "alpha")?;
    let b = normalize(b, "beta")?;
    let (m, n) = (a.len(), b.len());
    let eps = params.epsilon;
    let log_a: Vec<f64> = a.iter().map(|w| w.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|w| w.ln()).collect();

    let mut schedule = Vec::new();
    let mut stage = cost.max();
    while stage > eps * SCALING_FACTOR.recip() {
        schedule.push(stage);
        stage *= SCALING_FACTOR;
    }
    schedule.push(eps);

    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let mut lse = vec![0.0; m];
    let mut violation = f64::INFINITY;
    let mut used = 0;
    let mut converged = false;
    for (s, &stage_eps) in schedule.iter().enumerate() {
        let last = s + 1 == schedule.len();
        let stage_tol = if last {
            params.tol
        } else {
            params.tol.max(STAGE_TOL)
        };
        let mut fresh = true;
        loop {
            // Row sums of the current plan are exp(f_i / eps + lse_i), so the
            // log-sum-exp feeding the next f update also measures violation.
            for (i, out) in lse.iter_mut().enumerate() {
                *out = log_sum_exp((0..n).map(|j| (g[j] - cost.get(i, j)) / stage_eps));
            }
            if !fresh {
                violation = (0..m)
                    .map(|i| ((f[i] / stage_eps + lse[i]).exp() - a[i]).abs())
                    .fold(0.0, f64::max);
                if !violation.is_finite() {
                    return Err(OtError::NumericalFailure(
                        "sinkhorn potentials diverged".into(),
                    ));
                }
                if violation < stage_tol {
                    converged = last;
                    break;
                }
            }
            if used == params.max_iters {
                break;
            }
            used += 1;
            fresh = false;
            for i in 0..m {
                f[i] = stage_eps * (log_a[i] - lse[i]);
            }
            for j in 0..n {
                let l = log_sum_exp((0..m).map(|i| (f[i] - cost.get(i, j)) / stage_eps));
                g[j] = stage_eps * (log_b[j] - l);
            }
        }
        if used == params.max_iters && !converged {
            break;
        }
    }
    if !converged {
        return Err(OtError::NotConverged {
            iterations: params.max_iters,
            violation,
        });
    }

    let mut gamma: Vec<f64> = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| ((f[i] + g[j] - cost.get(i, j)) / eps).exp())
        .collect();
    round_to_marginals(&mut gamma, &a, &b);
    Ok(TransportPlan {
        rows: m,
        cols: n,
        objective: plan_objective(cost, &gamma),
        gamma,
    })
}

/// Project a nearly feasible plan onto the exact marginals: scale down rows
/// and columns that carry too much mass, then spread the remaining deficit as
/// a rank-one correction. Moves at most the residual violation.
fn round_to_marginals(gamma: &mut [f64], a: &[f64], b: &[f64]) {
    let n = b.len();
    for (row, &target) in gamma.chunks_mut(n).zip(a) {
        let sum: f64 = row.iter().sum();
        if sum > target {
            row.iter_mut().for_each(|x| *x *= target / sum);
        }
    }
    for (j, &target) in b.iter().enumerate() {
        let sum: f64 = gamma.iter().skip(j).step_by(n).sum();
        if sum > target {
            gamma
                .iter_mut()
                .skip(j)
                .step_by(n)
                .for_each(|x| *x *= target / sum);
        }
    }
    let row_deficit: Vec<f64> = gamma
        .chunks(n)
        .zip(a)
        .map(|(row, &t)| (t - row.iter().sum::<f64>()).max(0.0))
        .collect();
    let col_deficit: Vec<f64> = (0..n)
        .map(|j| (b[j] - gamma.iter().skip(j).step_by(n).sum::<f64>()).max(0.0))
        .collect();
    let total: f64 = row_deficit.iter().sum();
    if total > 0.0 {
        for (i, r) in row_deficit.iter().enumerate() {
            for (j, c) in col_deficit.iter().enumerate() {
                gamma[i * n + j] += r * c / total;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ot::transport_simplex;

    #[test]
    fn zero_budget_does_not_converge() {
        let c = CostMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let params = SinkhornParams {
            epsilon: 0.1,
            max_iters: 0,
            tol: 1e-9,
        };
        assert!(matches!(
            sinkhorn_log(&[0.5, 0.5], &[0.5, 0.5], &c, params),
            Err(OtError::NotConverged { iterations: 0, .. })
        ));
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        let c = CostMatrix::new(1, 1, vec![0.0]).unwrap();
        let params = SinkhornParams {
            epsilon: 0.0,
            ..Default::default()
        };
        assert!(sinkhorn_log(&[1.0], &[1.0], &c, params).is_err());
    }

    #[test]
    fn marginals_hold_at_convergence() {
        let c = CostMatrix::from_fn(3, 4, |i, j| (i as f64 - j as f64).abs()).unwrap();
        let a = [0.2, 0.5, 0.3];
        let b = [0.1, 0.4, 0.4, 0.1];
        let plan = sinkhorn_log(&a, &b, &c, SinkhornParams::default()).unwrap();
        assert!(plan.marginal_violation(&a, &b) < 1e-8);
        let exact = transport_simplex(&a, &b, &c).unwrap();
        assert!(plan.objective >= exact.objective - 1e-8);
    }

    #[test]
    fn identical_marginals_have_small_bias() {
        let c = CostMatrix::from_fn(4, 4, |i, j| (i as f64 - j as f64).abs()).unwrap();
        let w = [0.1, 0.2, 0.3, 0.4];
        let plan = sinkhorn_log(&w, &w, &c, SinkhornParams::default()).unwrap();
        assert!(plan.objective <= 0.05 * c.max());
    }
}
