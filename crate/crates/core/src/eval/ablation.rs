use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{knn_classify, EvalError, EvalReport, Protocol};
use crate::corpus::Corpus;
use crate::embedding::EmbeddingSet;
use crate::metric::{pairwise_matrix, BaselineConfig, BaselineKind, Metric, MetricConfig};

/// Default number of sampled dialogues.
pub const ABLATION_SAMPLE: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub name: String,
    pub metric: Metric,
}

impl AblationRow {
    pub fn new(name: impl Into<String>, metric: Metric) -> Self {
        AblationRow {
            name: name.into(),
            metric,
        }
    }
}

/// The five standard rows: mean-embedding cosine without and with masking,
/// utterance-only transport without and with masking, and the full metric.
pub fn ablation_preset(full: MetricConfig) -> Vec<AblationRow> {
    let cosine = BaselineConfig::new(BaselineKind::SbertCosine);
    let with_system = |mut c: MetricConfig| {
        c.include_system = full.include_system;
        c.solver = full.solver;
        c
    };
    vec![
        AblationRow::new(
            "cosine",
            Metric::Baseline(BaselineConfig {
                include_system: full.include_system,
                ..cosine
            }),
        ),
        AblationRow::new(
            "cosine+masking",
            Metric::Baseline(BaselineConfig {
                include_system: full.include_system,
                ..cosine.masked(true)
            }),
        ),
        AblationRow::new(
            "ot-utterances",
            Metric::TaskDiff(with_system(MetricConfig::utterances_only(false))),
        ),
        AblationRow::new(
            "ot-utterances+masking",
            Metric::TaskDiff(with_system(MetricConfig::utterances_only(true))),
        ),
        AblationRow::new("taskdiff", Metric::TaskDiff(full)),
    ]
}

/// k-NN accuracy for each row on a seeded sample of at most `sample_size`
/// conversations.
pub fn ablation_run(
    corpus: &Corpus,
    embeddings: &EmbeddingSet,
    rows: &[AblationRow],
    sample_size: usize,
    k: usize,
    folds: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::InvalidArgument(
            "no configurations to compare".into(),
        ));
    }
    let sample = if corpus.len() > sample_size {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = index::sample(&mut rng, corpus.len(), sample_size).into_vec();
        picked.sort_unstable();
        corpus
            .subset(&picked)
            .map_err(|e| EvalError::InvalidArgument(e.to_string()))?
    } else {
        corpus.clone()
    };
    let labels = sample.labels();
    let mut report = EvalReport::new(Protocol::Ablation, "ablation");
    for row in rows {
        let matrix = pairwise_matrix(&sample, embeddings, &row.metric)?;
        let knn = knn_classify(&matrix, &labels, k, folds, seed)?;
        report.numbers.insert(
            row.name.clone(),
            knn.number("accuracy").expect("knn reports accuracy"),
        );
    }
    Ok(report)
}
