use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{EvalError, EvalReport, ItemResult, ItemValue, Protocol};
use crate::corpus::{Conversation, Corpus};
use crate::embedding::EmbeddingSet;
use crate::metric::Metric;

/// `ceil(fraction * turns)`, ignoring floating-point dust above an integer.
pub fn selected_count(fraction: f64, turns: usize) -> usize {
    let raw = fraction * turns as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(turns)
}

/// Derange whole turns at `selected_count(fraction, len)` random positions.
///
/// Fewer than two selected positions leaves the conversation unchanged.
pub fn perturb_conversation(
    conversation: &Conversation,
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Conversation {
    let n = conversation.turns.len();
    let m = selected_count(fraction, n);
    let mut out = conversation.clone();
    if m < 2 {
        return out;
    }
    let mut positions = index::sample(rng, n, m).into_vec();
    positions.sort_unstable();
    // Rejection sampling gives a uniform derangement; the acceptance rate
    // tends to 1/e.
    let mut perm: Vec<usize> = (0..m).collect();
    loop {
        perm.shuffle(rng);
        if perm.iter().enumerate().all(|(k, &p)| k != p) {
            break;
        }
    }
    for (k, &p) in perm.iter().enumerate() {
        out.turns[positions[k]] = conversation.turns[positions[p]].clone();
    }
    out
}

/// Per-conversation generator: the run seed with the conversation index as
/// stream, so results do not depend on scheduling.
fn conversation_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Mean distance between each conversation and its perturbed copy, one
/// report per metric.
pub fn reorder_perturb(
    corpus: &Corpus,
    embeddings: &EmbeddingSet,
    fraction: f64,
    seed: u64,
    metrics: &[(String, Metric)],
) -> Result<Vec<EvalReport>, EvalError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(EvalError::InvalidArgument(format!(
            "fraction {fraction} is outside [0, 1]"
        )));
    }
    let perturbed: Vec<Conversation> = corpus
        .conversations()
        .par_iter()
        .enumerate()
        .map(|(i, c)| perturb_conversation(c, fraction, &mut conversation_rng(seed, i)))
        .collect();
    let moved = corpus
        .conversations()
        .iter()
        .zip(&perturbed)
        .filter(|(a, b)| a.turns != b.turns)
        .count();

    let mut reports = Vec::with_capacity(metrics.len());
    for (name, metric) in metrics {
        metric.validate()?;
        let distances: Vec<f64> = corpus
            .conversations()
            .par_iter()
            .zip(&perturbed)
            .map(|(original, shuffled)| metric.distance(original, shuffled, embeddings))
            .collect::<Vec<_>>()
            .into_iter()
            .collect::<Result<_, _>>()?;
        let mean = distances.iter().sum::<f64>() / distances.len() as f64;
        let mut report = EvalReport::new(Protocol::Reorder, name.clone());
        report.numbers.insert("avg_distance".into(), mean);
        report.numbers.insert(
            "max_distance".into(),
            distances.iter().copied().fold(0.0, f64::max),
        );
        report.numbers.insert("fraction".into(), fraction);
        report
            .numbers
            .insert("perturbed_conversations".into(), moved as f64);
        report.per_item = Some(
            corpus
                .conversations()
                .iter()
                .zip(distances)
                .map(|(c, d)| ItemResult {
                    id: c.id.clone(),
                    value: ItemValue::Distance(d),
                })
                .collect(),
        );
        reports.push(report);
    }
    Ok(reports)
}
