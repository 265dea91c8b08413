use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{EvalError, EvalReport, ItemResult, ItemValue, Protocol};
use crate::metric::DistanceMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Medoids {
    /// Medoid row indices, ascending.
    pub medoids: Vec<usize>,
    /// Cluster of every row, as a position in `medoids`.
    pub assignment: Vec<usize>,
    /// Sum of distances from each row to its medoid.
    pub cost: f64,
    pub swaps: usize,
}

/// Seeded k-medoids++ start: the first medoid is uniform, each further one is
/// drawn with probability proportional to its squared distance from the
/// nearest medoid so far.
fn init_medoids(matrix: &DistanceMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = matrix.len();
    let mut medoids = vec![rng.gen_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| matrix.get(i, medoids[0])).collect();
    while medoids.len() < k {
        let total: f64 = nearest.iter().map(|d| d * d).sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, d) in nearest.iter().enumerate() {
                let w = d * d;
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // Fewer distinct points than k: fill with the lowest unused rows.
            (0..n).find(|i| !medoids.contains(i)).expect("k <= n")
        };
        medoids.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(matrix.get(i, next));
        }
    }
    medoids
}

/// Nearest and second-nearest medoid slot of every row. Ties go to the lower
/// slot.
fn nearest_two(matrix: &DistanceMatrix, medoids: &[usize]) -> Vec<(usize, f64, f64)> {
    (0..matrix.len())
        .map(|i| {
            let (mut best, mut d1, mut d2) = (0, f64::INFINITY, f64::INFINITY);
            for (slot, &m) in medoids.iter().enumerate() {
                let d = matrix.get(i, m);
                if d < d1 {
                    d2 = d1;
                    d1 = d;
                    best = slot;
                } else if d < d2 {
                    d2 = d;
                }
            }
            (best, d1, d2)
        })
        .collect()
}

/// PAM-style k-medoids: seeded start, then up to `iterations` rounds that
/// each apply the single best cost-reducing (medoid, non-medoid) swap.
pub fn k_medoids(
    matrix: &DistanceMatrix,
    k: usize,
    iterations: usize,
    seed: u64,
) -> Result<Medoids, EvalError> {
    let n = matrix.len();
    if k == 0 || k > n {
        return Err(EvalError::InvalidArgument(format!(
            "k = {k} must be in 1..={n}"
        )));
    }
    if k > 1 && (0..n).all(|i| (0..i).all(|j| matrix.get(i, j) == 0.0)) {
        return Err(EvalError::DegenerateMatrix(format!(
            "all distances are zero but k = {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut medoids = init_medoids(matrix, k, &mut rng);
    let scale = (0..n)
        .map(|i| matrix.row(i).iter().copied().fold(0.0, f64::max))
        .fold(1.0, f64::max);
    let mut swaps = 0;
    for _ in 0..iterations {
        let near = nearest_two(matrix, &medoids);
        let mut best: Option<(f64, usize, usize)> = None;
        for slot in 0..k {
            for cand in (0..n).filter(|c| !medoids.contains(c)) {
                let delta: f64 = (0..n)
                    .map(|i| {
                        let (owner, d1, d2) = near[i];
                        let dc = matrix.get(i, cand);
                        if owner == slot {
                            dc.min(d2) - d1
                        } else {
                            dc.min(d1) - d1
                        }
                    })
                    .sum();
                if best.is_none_or(|(b, _, _)| delta < b) {
                    best = Some((delta, slot, cand));
                }
            }
        }
        match best {
            Some((delta, slot, cand)) if delta < -1e-12 * scale => {
                medoids[slot] = cand;
                swaps += 1;
            }
            _ => break,
        }
    }
    medoids.sort_unstable();
    let near = nearest_two(matrix, &medoids);
    Ok(Medoids {
        assignment: near.iter().map(|&(slot, _, _)| slot).collect(),
        cost: near.iter().map(|&(_, d, _)| d).sum(),
        medoids,
        swaps,
    })
}

/// Fraction of items whose label is the majority label of their cluster.
pub fn purity(assignment: &[usize], labels: &[&str]) -> f64 {
    if assignment.is_empty() {
        return 1.0;
    }
    let mut counts: HashMap<usize, HashMap<&str, usize>> = HashMap::new();
    for (&c, &l) in assignment.iter().zip(labels) {
        *counts.entry(c).or_default().entry(l).or_insert(0) += 1;
    }
    let majority: usize = counts
        .values()
        .map(|m| m.values().copied().max().unwrap_or(0))
        .sum();
    majority as f64 / assignment.len() as f64
}

/// Classical (Torgerson) MDS into `dims` coordinates.
///
/// Double-centres the squared distances, keeps the top `dims` eigenpairs, and
/// scales each eigenvector by the square root of its (clamped) eigenvalue.
/// Each axis is signed so that its largest-magnitude entry (lowest index on
/// ties) is positive.
pub fn classical_mds(matrix: &DistanceMatrix, dims: usize) -> Vec<Vec<f64>> {
    let n = matrix.len();
    if n == 0 {
        return Vec::new();
    }
    let sq = DMatrix::from_fn(n, n, |i, j| matrix.get(i, j).powi(2));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand)
    });
    let eigen = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        eigen.eigenvalues[y]
            .total_cmp(&eigen.eigenvalues[x])
            .then(x.cmp(&y))
    });

    let mut coords = vec![vec![0.0; dims]; n];
    for (axis, &e) in order.iter().take(dims).enumerate() {
        let scale = eigen.eigenvalues[e].max(0.0).sqrt();
        let column = eigen.eigenvectors.column(e);
        let mut pivot = 0;
        for i in 1..n {
            if column[i].abs() > column[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if column[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            coords[i][axis] = sign * column[i] * scale;
        }
    }
    coords
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateRow {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub cluster: usize,
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutput {
    pub report: EvalReport,
    pub medoids: Medoids,
    pub coordinates: Vec<CoordinateRow>,
}

impl ClusterOutput {
    /// `id,x,y,cluster,domain` rows with a header line.
    pub fn coordinates_csv(&self) -> String {
        let mut out = String::from("id,x,y,cluster,domain\n");
        for row in &self.coordinates {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                csv_field(&row.id),
                row.x,
                row.y,
                row.cluster,
                csv_field(&row.domain)
            ));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// k-medoids clustering with purity and 2D coordinates.
///
/// Rows missing from `labels` count as their own singleton label.
pub fn cluster(
    matrix: &DistanceMatrix,
    labels: &BTreeMap<String, String>,
    k: usize,
    iterations: usize,
    seed: u64,
) -> Result<ClusterOutput, EvalError> {
    let medoids = k_medoids(matrix, k, iterations, seed)?;
    let row_labels: Vec<&str> = matrix
        .ids()
        .iter()
        .map(|id| labels.get(id).map_or(id.as_str(), String::as_str))
        .collect();
    let coords = classical_mds(matrix, 2);

    let mut report = EvalReport::new(Protocol::Cluster, "");
    report
        .numbers
        .insert("purity".into(), purity(&medoids.assignment, &row_labels));
    report.numbers.insert("cost".into(), medoids.cost);
    report.numbers.insert("k".into(), k as f64);
    report.numbers.insert("swaps".into(), medoids.swaps as f64);
    report.per_item = Some(
        matrix
            .ids()
            .iter()
            .zip(&medoids.assignment)
            .map(|(id, &c)| ItemResult {
                id: id.clone(),
                value: ItemValue::Cluster(c),
            })
            .collect(),
    );
    let coordinates = matrix
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| CoordinateRow {
            id: id.clone(),
            x: coords[i][0],
            y: coords[i][1],
            cluster: medoids.assignment[i],
            domain: row_labels[i].to_string(),
        })
        .collect();
    Ok(ClusterOutput {
        report,
        medoids,
        coordinates,
    })
}
