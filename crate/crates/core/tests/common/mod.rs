//! Reference solvers and generators shared by the integration tests.
//!
//! The oracles here do not call into the crate's transport code.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random probability vector of length `n` with every entry positive.
pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// `n` random points in `[-1, 1]^dim`.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

pub fn euclid(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Row-major Euclidean cost matrix.
pub fn costs(xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Vec<f64> {
    xs.iter()
        .flat_map(|x| ys.iter().map(move |y| euclid(x, y)))
        .collect()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        r
    }
}

/// Flows on a spanning tree of the bipartite row/column graph, found by
/// repeatedly settling a leaf. `None` if some flow is negative.
fn tree_flows(tree: &[usize], m: usize, n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let mut supply: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut degree = vec![0usize; m + n];
    for &cell in tree {
        degree[cell / n] += 1;
        degree[m + cell % n] += 1;
    }
    let mut done = vec![false; tree.len()];
    let mut flows = vec![0.0; tree.len()];
    for _ in 0..tree.len() {
        let (k, leaf, other) = tree
            .iter()
            .enumerate()
            .filter(|(k, _)| !done[*k])
            .find_map(|(k, &cell)| {
                let (r, c) = (cell / n, m + cell % n);
                if degree[r] == 1 {
                    Some((k, r, c))
                } else if degree[c] == 1 {
                    Some((k, c, r))
                } else {
                    None
                }
            })?;
        let flow = supply[leaf];
        if flow < -1e-12 {
            return None;
        }
        flows[k] = flow;
        supply[other] -= flow;
        supply[leaf] = 0.0;
        degree[leaf] -= 1;
        degree[other] -= 1;
        done[k] = true;
    }
    Some(flows)
}

/// Exact transport cost by enumerating every basic solution.
///
/// The optimum of a transportation problem sits at a vertex of its polytope,
/// and every vertex is the flow on some spanning tree of the complete
/// bipartite graph between rows and columns. All spanning trees are listed by
/// a depth-first include/exclude search over cells with union-find cycle
/// pruning; each feasible tree's flow is evaluated directly.
pub fn enumerate_w1(a: &[f64], b: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let need = m + n - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(need);
    let mut parent: Vec<usize> = (0..m + n).collect();

    fn search(
        cell: usize,
        m: usize,
        n: usize,
        need: usize,
        chosen: &mut Vec<usize>,
        parent: &mut Vec<usize>,
        a: &[f64],
        b: &[f64],
        cost: &[f64],
        best: &mut f64,
    ) {
        if chosen.len() == need {
            if let Some(flows) = tree_flows(chosen, m, n, a, b) {
                let obj: f64 = chosen.iter().zip(&flows).map(|(&c, f)| cost[c] * f).sum();
                if obj < *best {
                    *best = obj;
                }
            }
            return;
        }
        if m * n - cell < need - chosen.len() {
            return;
        }
        let (r, c) = (cell / n, m + cell % n);
        let mut uf = UnionFind(parent.clone());
        let (ra, rb) = (uf.find(r), uf.find(c));
        if ra != rb {
            let saved = parent.clone();
            uf.0[ra] = rb;
            *parent = uf.0;
            chosen.push(cell);
            search(cell + 1, m, n, need, chosen, parent, a, b, cost, best);
            chosen.pop();
            *parent = saved;
        }
        search(cell + 1, m, n, need, chosen, parent, a, b, cost, best);
    }

    search(
        0,
        m,
        n,
        need,
        &mut chosen,
        &mut parent,
        a,
        b,
        cost,
        &mut best,
    );
    best
}

/// W1 on the real line: the integral of |F_a - F_b| over the merged support.
pub fn w1_on_line(xs: &[f64], a: &[f64], ys: &[f64], b: &[f64]) -> f64 {
    let mut points: Vec<f64> = xs.iter().chain(ys).copied().collect();
    points.sort_by(f64::total_cmp);
    let cdf = |v: &[f64], w: &[f64], t: f64| -> f64 {
        v.iter()
            .zip(w)
            .filter(|(x, _)| **x <= t)
            .map(|(_, w)| w)
            .sum()
    };
    points
        .windows(2)
        .map(|p| (cdf(xs, a, p[0]) - cdf(ys, b, p[0])).abs() * (p[1] - p[0]))
        .sum()
}

/// W1 on the real line from the sorted-quantile coupling: walk both sorted
/// supports, moving the smaller remaining mass each step.
pub fn quantile_coupling_w1(xs: &[f64], a: &[f64], ys: &[f64], b: &[f64]) -> f64 {
    let sorted = |v: &[f64], w: &[f64]| {
        let mut p: Vec<(f64, f64)> = v.iter().copied().zip(w.iter().copied()).collect();
        p.sort_by(|l, r| l.0.total_cmp(&r.0));
        p
    };
    let (p, q) = (sorted(xs, a), sorted(ys, b));
    let (mut i, mut j) = (0, 0);
    let (mut left_p, mut left_q) = (p[0].1, q[0].1);
    let mut total = 0.0;
    while i < p.len() && j < q.len() {
        let flow = left_p.min(left_q);
        total += flow * (p[i].0 - q[j].0).abs();
        left_p -= flow;
        left_q -= flow;
        if left_p <= left_q {
            i += 1;
            left_p = p.get(i).map_or(0.0, |x| x.1);
        } else {
            j += 1;
            left_q = q.get(j).map_or(0.0, |x| x.1);
        }
    }
    total
}
