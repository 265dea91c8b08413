use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EvalError, EvalReport, ItemResult, ItemValue, Protocol};
use crate::metric::DistanceMatrix;

/// Fold index of every matrix row, stratified by label.
///
/// Each class is shuffled with the seeded generator and dealt round-robin
/// into folds; the dealing position carries over between classes (taken in
/// label order) so fold sizes stay balanced.
pub fn stratified_folds(labels: &[&str], folds: usize, seed: u64) -> Result<Vec<usize>, EvalError> {
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (idx, label) in labels.iter().enumerate() {
        by_class.entry(label).or_default().push(idx);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; labels.len()];
    let mut dealt = 0;
    for (class, mut members) in by_class {
        if members.len() < folds {
            return Err(EvalError::InsufficientData(format!(
                "class {class:?} has {} members, fewer than {folds} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for idx in members {
            fold_of[idx] = dealt % folds;
            dealt += 1;
        }
    }
    Ok(fold_of)
}

/// Majority label among `neighbors` (sorted nearest first); ties go to the
/// tied label that appears nearest.
fn vote<'a>(neighbors: &[usize], labels: &[&'a str]) -> &'a str {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for &n in neighbors {
        *counts.entry(labels[n]).or_insert(0) += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    neighbors
        .iter()
        .map(|&n| labels[n])
        .find(|l| counts[l] == best)
        .expect("at least one neighbor")
}

/// Cross-validated k-NN classification accuracy.
///
/// `labels` maps every matrix id to its class. Reported `accuracy` is the
/// mean of the per-fold accuracies.
pub fn knn_classify(
    matrix: &DistanceMatrix,
    labels: &BTreeMap<String, String>,
    k: usize,
    folds: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidArgument("k must be at least 1".into()));
    }
    if folds < 2 {
        return Err(EvalError::InvalidArgument(
            "at least 2 folds are required".into(),
        ));
    }
    let row_labels: Vec<&str> = matrix
        .ids()
        .iter()
        .map(|id| {
            labels
                .get(id)
                .map(String::as_str)
                .ok_or_else(|| EvalError::InvalidArgument(format!("no label for {id:?}")))
        })
        .collect::<Result<_, _>>()?;
    let fold_of = stratified_folds(&row_labels, folds, seed)?;
    let n = matrix.len();

    let per_fold: Vec<(usize, usize, Vec<(usize, &str)>)> = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let train: Vec<usize> = (0..n).filter(|&i| fold_of[i] != fold).collect();
            if train.len() < k {
                return Err(EvalError::InsufficientData(format!(
                    "k = {k} exceeds the {} training items of fold {fold}",
                    train.len()
                )));
            }
            let mut correct = 0;
            let mut predictions = Vec::new();
            for test in (0..n).filter(|&i| fold_of[i] == fold) {
                let mut neighbors = train.clone();
                neighbors.sort_by(|&a, &b| {
                    matrix
                        .get(test, a)
                        .total_cmp(&matrix.get(test, b))
                        .then(a.cmp(&b))
                });
                let predicted = vote(&neighbors[..k], &row_labels);
                if predicted == row_labels[test] {
                    correct += 1;
                }
                predictions.push((test, predicted));
            }
            Ok((correct, predictions.len(), predictions))
        })
        .collect::<Result<_, _>>()?;

    let accuracy = per_fold
        .iter()
        .map(|(correct, total, _)| *correct as f64 / *total as f64)
        .sum::<f64>()
        / folds as f64;
    let mut predictions: Vec<(usize, &str)> =
        per_fold.into_iter().flat_map(|(_, _, p)| p).collect();
    predictions.sort_by_key(|&(i, _)| i);

    let mut report = EvalReport::new(Protocol::Knn, "");
    report.numbers.insert("accuracy".into(), accuracy);
    report.numbers.insert("k".into(), k as f64);
    report.numbers.insert("folds".into(), folds as f64);
    report.numbers.insert("items".into(), n as f64);
    report.per_item = Some(
        predictions
            .into_iter()
            .map(|(i, label)| ItemResult {
                id: matrix.ids()[i].clone(),
                value: ItemValue::Label(label.to_string()),
            })
            .collect(),
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks(
        sizes: &[usize],
        within: f64,
        across: f64,
    ) -> (DistanceMatrix, BTreeMap<String, String>) {
        let mut ids = Vec::new();
        let mut classes = Vec::new();
        for (c, &size) in sizes.iter().enumerate() {
            for i in 0..size {
                ids.push(format!("c{c}_{i}"));
                classes.push(c);
            }
        }
        let n = ids.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    values[i * n + j] = if classes[i] == classes[j] {
                        within
                    } else {
                        across
                    };
                }
            }
        }
        let labels = ids
            .iter()
            .zip(&classes)
            .map(|(id, c)| (id.clone(), format!("D{c}")))
            .collect();
        (DistanceMatrix::from_full(ids, values).unwrap(), labels)
    }

    #[test]
    fn separated_classes_are_perfect() {
        let (m, labels) = blocks(&[10, 10], 0.0, 5.0);
        let report = knn_classify(&m, &labels, 3, 5, 1).unwrap();
        assert_eq!(report.number("accuracy"), Some(1.0));
    }

    #[test]
    fn shuffled_labels_fall_to_chance() {
        use rand::seq::SliceRandom;
        let (m, labels) = blocks(&[30, 30], 0.0, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut total = 0.0;
        let shuffles = 100;
        for s in 0..shuffles {
            let mut values: Vec<String> = labels.values().cloned().collect();
            values.shuffle(&mut rng);
            let shuffled = labels.keys().cloned().zip(values).collect();
            total += knn_classify(&m, &shuffled, 5, 5, s)
                .unwrap()
                .number("accuracy")
                .unwrap();
        }
        let mean = total / shuffles as f64;
        assert!((mean - 0.5).abs() < 0.1, "mean shuffled accuracy {mean}");
    }

    #[test]
    fn small_class_is_insufficient() {
        let (m, labels) = blocks(&[10, 3], 0.0, 1.0);
        assert!(matches!(
            knn_classify(&m, &labels, 1, 5, 0),
            Err(EvalError::InsufficientData(_))
        ));
    }

    #[test]
    fn k_larger_than_training_set() {
        let (m, labels) = blocks(&[4, 4], 0.0, 1.0);
        assert!(matches!(
            knn_classify(&m, &labels, 50, 2, 0),
            Err(EvalError::InsufficientData(_))
        ));
    }

    #[test]
    fn deterministic() {
        let (m, labels) = blocks(&[7, 9, 6], 1.0, 1.0);
        let a = knn_classify(&m, &labels, 3, 3, 5).unwrap();
        let b = knn_classify(&m, &labels, 3, 3, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn folds_are_stratified_and_balanced() {
        let labels: Vec<&str> = ["a"; 10].iter().chain(["b"; 5].iter()).copied().collect();
        let folds = stratified_folds(&labels, 5, 3).unwrap();
        for f in 0..5 {
            assert_eq!(folds[..10].iter().filter(|&&x| x == f).count(), 2);
            assert_eq!(folds[10..].iter().filter(|&&x| x == f).count(), 1);
        }
    }

    #[test]
    fn tie_goes_to_nearest() {
        let labels = ["x", "y", "y", "x"];
        assert_eq!(vote(&[1, 0, 3, 2], &labels), "y");
        assert_eq!(vote(&[0, 1], &labels), "x");
    }
}
