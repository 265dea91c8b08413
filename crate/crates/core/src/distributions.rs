//! Per-conversation probability distributions over utterance, intent, and
//! slot embeddings.
//!
//! Supports are sorted by label, so a distribution depends only on the bag of
//! turns and never on their order.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Conversation, Speaker};
use crate::embedding::{EmbeddingError, EmbeddingKey, EmbeddingSet};
use crate::masking::utterance_text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Component {
    Utterances,
    Intents,
    Slots,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::Utterances, Component::Intents, Component::Slots];

    pub fn name(self) -> &'static str {
        match self {
            Component::Utterances => "utterances",
            Component::Intents => "intents",
            Component::Slots => "slots",
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum DistributionError {
    #[error("{component}: {source}")]
    Missing {
        component: Component,
        #[source]
        source: EmbeddingError,
    },
    #[error("conversation has no {0} to build a distribution from")]
    EmptySupport(Component),
}

impl DistributionError {
    pub fn missing_key(&self) -> Option<&str> {
        match self {
            DistributionError::Missing {
                source: EmbeddingError::MissingEmbedding(key),
                ..
            } => Some(key),
            _ => None,
        }
    }
}

/// A finite distribution over embedding vectors.
///
/// `support`, `weights`, and `labels` are aligned, non-empty, and sorted by
/// label. Weights are positive and sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentDistribution {
    pub component: Component,
    #[serde(skip)]
    pub support: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub labels: Vec<String>,
}

impl ComponentDistribution {
    /// Build from per-label occurrence counts. Labels with zero count are
    /// dropped.
    pub fn from_counts<F>(
        component: Component,
        counts: &BTreeMap<String, usize>,
        mut embed: F,
    ) -> Result<Self, DistributionError>
    where
        F: FnMut(&str) -> Result<Vec<f64>, EmbeddingError>,
    {
        let total: usize = counts.values().sum();
        if total == 0 {
            return Err(DistributionError::EmptySupport(component));
        }
        let mut support = Vec::with_capacity(counts.len());
        let mut weights = Vec::with_capacity(counts.len());
        let mut labels = Vec::with_capacity(counts.len());
        for (label, &count) in counts.iter().filter(|(_, &c)| c > 0) {
            support.push(
                embed(label).map_err(|source| DistributionError::Missing { component, source })?,
            );
            weights.push(count as f64 / total as f64);
            labels.push(label.clone());
        }
        Ok(ComponentDistribution {
            component,
            support,
            weights,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// How utterances are turned into embedding keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProfileOptions {
    pub masking: bool,
    pub include_system: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            masking: true,
            include_system: true,
        }
    }
}

/// Texts of the turns that contribute utterance mass, in turn order.
pub fn retained_utterances(conversation: &Conversation, options: ProfileOptions) -> Vec<String> {
    conversation
        .turns
        .iter()
        .filter(|t| options.include_system || t.speaker == Speaker::User)
        .map(|t| utterance_text(t, options.masking))
        .collect()
}

/// Uniform mass over retained turns; identical texts share one support point.
pub fn utterance_distribution(
    conversation: &Conversation,
    embeddings: &EmbeddingSet,
    options: ProfileOptions,
) -> Result<ComponentDistribution, DistributionError> {
    let mut counts = BTreeMap::new();
    for text in retained_utterances(conversation, options) {
        *counts.entry(text).or_insert(0) += 1;
    }
    ComponentDistribution::from_counts(Component::Utterances, &counts, |text| {
        embeddings.lookup_f64(&EmbeddingKey::utterance(text))
    })
}

/// Occurrence counts of intents (one per turn the intent is active in) or
/// slots (one per filling).
pub fn component_counts(
    conversation: &Conversation,
    component: Component,
) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for turn in &conversation.turns {
        match component {
            Component::Intents => {
                for intent in &turn.active_intents {
                    *counts.entry(intent.clone()).or_insert(0) += 1;
                }
            }
            Component::Slots => {
                for filling in &turn.slot_fillings {
                    *counts.entry(filling.slot_name.clone()).or_insert(0) += 1;
                }
            }
            Component::Utterances => {}
        }
    }
    counts
}

/// Intent or slot frequency distribution over canonical-name embeddings.
///
/// # Panics
///
/// If `component` is [`Component::Utterances`].
pub fn categorical_distribution(
    conversation: &Conversation,
    component: Component,
    embeddings: &EmbeddingSet,
) -> Result<ComponentDistribution, DistributionError> {
    let key: fn(&str) -> EmbeddingKey = match component {
        Component::Intents => |n| EmbeddingKey::intent(n),
        Component::Slots => |n| EmbeddingKey::slot(n),
        Component::Utterances => {
            panic!("utterances are not categorical; use utterance_distribution")
        }
    };
    let counts = component_counts(conversation, component);
    ComponentDistribution::from_counts(component, &counts, |name| embeddings.lookup_f64(&key(name)))
}

/// The three component distributions of one conversation.
///
/// A component is `None` when the conversation carries nothing for it; the
/// metric decides how such components are scored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConversationProfile {
    pub conversation_id: String,
    pub utterances: Option<ComponentDistribution>,
    pub intents: Option<ComponentDistribution>,
    pub slots: Option<ComponentDistribution>,
}

impl ConversationProfile {
    pub fn component(&self, component: Component) -> Option<&ComponentDistribution> {
        match component {
            Component::Utterances => self.utterances.as_ref(),
            Component::Intents => self.intents.as_ref(),
            Component::Slots => self.slots.as_ref(),
        }
    }
}

fn allow_empty(
    result: Result<ComponentDistribution, DistributionError>,
) -> Result<Option<ComponentDistribution>, DistributionError> {
    match result {
        Ok(d) => Ok(Some(d)),
        Err(DistributionError::EmptySupport(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Build a profile, leaving empty components as `None`. Missing embeddings
/// are still errors.
pub fn build_profile_partial(
    conversation: &Conversation,
    embeddings: &EmbeddingSet,
    options: ProfileOptions,
) -> Result<ConversationProfile, DistributionError> {
    Ok(ConversationProfile {
        conversation_id: conversation.id.clone(),
        utterances: allow_empty(utterance_distribution(conversation, embeddings, options))?,
        intents: allow_empty(categorical_distribution(
            conversation,
            Component::Intents,
            embeddings,
        ))?,
        slots: allow_empty(categorical_distribution(
            conversation,
            Component::Slots,
            embeddings,
        ))?,
    })
}

/// Build a profile in which every component must be non-empty.
pub fn build_profile(
    conversation: &Conversation,
    embeddings: &EmbeddingSet,
    options: ProfileOptions,
) -> Result<ConversationProfile, DistributionError> {
    Ok(ConversationProfile {
        conversation_id: conversation.id.clone(),
        utterances: Some(utterance_distribution(conversation, embeddings, options)?),
        intents: Some(categorical_distribution(
            conversation,
            Component::Intents,
            embeddings,
        )?),
        slots: Some(categorical_distribution(
            conversation,
            Component::Slots,
            embeddings,
        )?),
    })
}

/// Every embedding key a conversation needs under `options`.
pub fn required_keys(conversation: &Conversation, options: ProfileOptions) -> Vec<EmbeddingKey> {
    let mut keys: Vec<EmbeddingKey> = retained_utterances(conversation, options)
        .into_iter()
        .map(EmbeddingKey::utterance)
        .collect();
    keys.extend(
        component_counts(conversation, Component::Intents)
            .into_keys()
            .map(EmbeddingKey::intent),
    );
    keys.extend(
        component_counts(conversation, Component::Slots)
            .into_keys()
            .map(EmbeddingKey::slot),
    );
    keys
}
