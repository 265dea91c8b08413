use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use taskdiff::corpus::Corpus;
use taskdiff::distributions::{required_keys, ProfileOptions};
use taskdiff::embedding::{hash_embedding_set, EmbeddingSet};
use taskdiff::eval::{
    ablation_preset, ablation_run, cluster, knn_classify, reorder_perturb, ItemValue,
};
use taskdiff::metric::{
    pairwise_matrix, BaselineConfig, BaselineKind, DistanceMatrix, Metric, MetricConfig,
};
use taskdiff::synthetic::{synthetic_corpus, SyntheticConfig};

fn embed(corpus: &Corpus) -> EmbeddingSet {
    let keys: Vec<_> = corpus
        .conversations()
        .iter()
        .flat_map(|c| {
            [true, false].into_iter().flat_map(move |masking| {
                required_keys(
                    c,
                    ProfileOptions {
                        masking,
                        include_system: true,
                    },
                )
            })
        })
        .collect();
    hash_embedding_set(&keys, 128, 0).unwrap()
}

fn setup(per_domain: usize) -> (Corpus, EmbeddingSet, DistanceMatrix) {
    let corpus = synthetic_corpus(&SyntheticConfig {
        conversations_per_domain: per_domain,
        ..Default::default()
    });
    let emb = embed(&corpus);
    let m = pairwise_matrix(&corpus, &emb, &Metric::TaskDiff(MetricConfig::default())).unwrap();
    (corpus, emb, m)
}

#[test]
fn knn_separates_synthetic_domains() {
    let (corpus, _, m) = setup(20);
    let report = knn_classify(&m, &corpus.labels(), 5, 5, 0).unwrap();
    assert_eq!(report.number("accuracy"), Some(1.0));
    let per_item = report.per_item.unwrap();
    assert_eq!(per_item.len(), 60);
    assert!(per_item
        .iter()
        .all(|r| matches!(r.value, ItemValue::Label(_))));
}

#[test]
fn knn_with_shuffled_labels_is_near_chance() {
    let (corpus, _, m) = setup(20);
    let ids: Vec<String> = corpus.labels().into_keys().collect();
    let mut values: Vec<String> = corpus.labels().into_values().collect();
    let mut total = 0.0;
    let runs = 50;
    for seed in 0..runs {
        values.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let labels: BTreeMap<String, String> =
            ids.iter().cloned().zip(values.iter().cloned()).collect();
        total += knn_classify(&m, &labels, 5, 5, seed)
            .unwrap()
            .number("accuracy")
            .unwrap();
    }
    let mean = total / runs as f64;
    assert!(
        (mean - 1.0 / 3.0).abs() < 0.1,
        "mean shuffled accuracy {mean}"
    );
}

#[test]
fn clustering_recovers_domains() {
    let (corpus, _, m) = setup(15);
    let out = cluster(&m, &corpus.labels(), 3, 100, 1).unwrap();
    assert_eq!(out.report.number("purity"), Some(1.0));
    assert_eq!(out.medoids.medoids.len(), 3);
    let again = cluster(&m, &corpus.labels(), 3, 100, 1).unwrap();
    assert_eq!(again.coordinates_csv(), out.coordinates_csv());
}

#[test]
fn ablation_rows_all_report() {
    let corpus = synthetic_corpus(&SyntheticConfig {
        conversations_per_domain: 12,
        ..Default::default()
    });
    let emb = embed(&corpus);
    let rows = ablation_preset(MetricConfig::default());
    let report = ablation_run(&corpus, &emb, &rows, 30, 3, 3, 5).unwrap();
    let names: Vec<&str> = report.numbers.keys().map(String::as_str).collect();
    assert_eq!(
        names,
        [
            "cosine",
            "cosine+masking",
            "ot-utterances",
            "ot-utterances+masking",
            "taskdiff"
        ]
    );
    assert!(report.numbers.values().all(|a| (0.0..=1.0).contains(a)));
    assert_eq!(report.number("taskdiff"), Some(1.0));
    // Same seed, same sample, same numbers.
    assert_eq!(
        ablation_run(&corpus, &emb, &rows, 30, 3, 3, 5).unwrap(),
        report
    );
}

#[test]
fn reordering_leaves_taskdiff_at_zero_but_not_conved() {
    let (corpus, emb, _) = setup(10);
    let metrics = vec![
        (
            "taskdiff".to_string(),
            Metric::TaskDiff(MetricConfig::default()),
        ),
        (
            "conved".to_string(),
            Metric::Baseline(BaselineConfig::new(BaselineKind::ConvEd).masked(true)),
        ),
        (
            "cosine".to_string(),
            Metric::Baseline(BaselineConfig::new(BaselineKind::SbertCosine)),
        ),
    ];
    for fraction in [0.3, 1.0] {
        let reports = reorder_perturb(&corpus, &emb, fraction, 3, &metrics).unwrap();
        assert_eq!(reports[0].number("max_distance"), Some(0.0));
        assert_eq!(reports[0].number("perturbed_conversations"), Some(30.0));
        for item in reports[1].per_item.as_ref().unwrap() {
            let ItemValue::Distance(d) = item.value else {
                panic!()
            };
            assert!(d > 0.0, "{} unchanged under convED", item.id);
        }
        assert!(reports[2].number("max_distance").unwrap() < 1e-12);
    }
}
