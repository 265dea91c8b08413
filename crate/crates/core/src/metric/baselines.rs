//! Utterance-embedding baselines: mean-vector cosine distance and a
//! conversational edit distance.

use serde::{Deserialize, Serialize};

use crate::ot::euclidean;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    /// One minus the cosine of the mean utterance vectors.
    SbertCosine,
    /// Edit distance over utterance sequences with embedding costs.
    ConvEd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub kind: BaselineKind,
    /// Baselines read raw utterances unless this is set.
    pub masking: bool,
    pub include_system: bool,
}

impl BaselineConfig {
    pub fn new(kind: BaselineKind) -> Self {
        BaselineConfig {
            kind,
            masking: false,
            include_system: true,
        }
    }

    pub fn masked(mut self, masking: bool) -> Self {
        self.masking = masking;
        self
    }
}

fn mean(vectors: &[Vec<f64>]) -> Vec<f64> {
    let dim = vectors.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; dim];
    for v in vectors {
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    let n = vectors.len().max(1) as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `1 - cos(mean(a), mean(b))`, clamped to `[0, 2]`.
///
/// Equal means give exactly zero. A zero mean has no direction; it is at
/// distance 1 from any nonzero mean.
pub fn mean_cosine_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    if ma == mb {
        return 0.0;
    }
    let (na, nb) = (norm(&ma), norm(&mb));
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    let dot: f64 = ma.iter().zip(&mb).map(|(x, y)| x * y).sum();
    (1.0 - dot / (na * nb)).clamp(0.0, 2.0)
}

/// Levenshtein-style alignment cost between two utterance sequences.
///
/// Substituting `x` for `y` costs `|x - y|`; inserting or deleting `x` costs
/// `|x|`.
pub fn conv_edit_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let gap_a: Vec<f64> = a.iter().map(|v| norm(v)).collect();
    let gap_b: Vec<f64> = b.iter().map(|v| norm(v)).collect();
    let mut prev: Vec<f64> = std::iter::once(0.0)
        .chain(gap_b.iter().scan(0.0, |acc, g| {
            *acc += g;
            Some(*acc)
        }))
        .collect();
    let mut cur = vec![0.0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = prev[0] + gap_a[i];
        for (j, y) in b.iter().enumerate() {
            let substitute = prev[j] + euclidean(x, y);
            let delete = prev[j + 1] + gap_a[i];
            let insert = cur[j] + gap_b[j];
            cur[j + 1] = substitute.min(delete).min(insert);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }

    #[test]
    fn identical_sequences_are_zero() {
        let s = vec![v(&[0.6, 0.8]), v(&[1.0, 0.0]), v(&[0.0, -1.0])];
        assert_eq!(mean_cosine_distance(&s, &s), 0.0);
        assert_eq!(conv_edit_distance(&s, &s), 0.0);
    }

    #[test]
    fn single_insertion_costs_the_norm() {
        let x = v(&[0.6, 0.8]);
        let y = v(&[3.0, 4.0]);
        assert_eq!(
            conv_edit_distance(std::slice::from_ref(&x), &[x.clone(), y.clone()]),
            5.0
        );
        assert_eq!(conv_edit_distance(&[x.clone(), y], &[x]), 5.0);
    }

    #[test]
    fn edit_distance_matches_recursive_definition() {
        fn naive(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
            match (a.split_last(), b.split_last()) {
                (None, None) => 0.0,
                (Some((x, ra)), None) => naive(ra, b) + norm(x),
                (None, Some((y, rb))) => naive(a, rb) + norm(y),
                (Some((x, ra)), Some((y, rb))) => (naive(ra, rb) + euclidean(x, y))
                    .min(naive(ra, b) + norm(x))
                    .min(naive(a, rb) + norm(y)),
            }
        }
        let a = vec![
            v(&[1.0, 0.0]),
            v(&[0.0, 1.0]),
            v(&[0.7, 0.7]),
            v(&[-1.0, 0.2]),
        ];
        let b = vec![v(&[0.0, 1.0]), v(&[1.0, 0.1]), v(&[0.3, -0.9])];
        assert!((conv_edit_distance(&a, &b) - naive(&a, &b)).abs() < 1e-12);
        assert!((conv_edit_distance(&b, &a) - naive(&b, &a)).abs() < 1e-12);
    }

    #[test]
    fn reordering_changes_edit_distance_but_not_mean() {
        let a = vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        let b = vec![v(&[0.0, 1.0]), v(&[1.0, 0.0])];
        assert!(conv_edit_distance(&a, &b) > 0.0);
        assert_eq!(mean_cosine_distance(&a, &b), 0.0);
    }

    #[test]
    fn cosine_is_clamped_and_opposite_is_two() {
        let a = vec![v(&[1.0, 0.0])];
        let b = vec![v(&[-1.0, 0.0])];
        assert_eq!(mean_cosine_distance(&a, &b), 2.0);
        let zero = vec![v(&[1.0, 0.0]), v(&[-1.0, 0.0])];
        assert_eq!(mean_cosine_distance(&zero, &a), 1.0);
    }
}
