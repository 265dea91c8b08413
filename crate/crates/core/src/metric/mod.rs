//! The composed conversation distance, its baselines, and pairwise matrices.

mod baselines;
mod matrix;

pub use baselines::{conv_edit_distance, mean_cosine_distance, BaselineConfig, BaselineKind};
pub use matrix::{pairwise_matrix, DistanceMatrix, MatrixFormatError, DMAT_MAGIC};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Conversation;
use crate::distributions::{
    build_profile_partial, retained_utterances, Component, ComponentDistribution,
    ConversationProfile, DistributionError, ProfileOptions,
};
use crate::embedding::{EmbeddingError, EmbeddingKey, EmbeddingSet};
use crate::ot::{cost_matrix, sinkhorn_log, transport_simplex, OtError, SinkhornParams};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("invalid metric configuration: {0}")]
    InvalidConfig(String),
    #[error("conversation {conversation:?}: {source}")]
    Profile {
        conversation: String,
        #[source]
        source: DistributionError,
    },
    #[error("conversation {conversation:?}: {source}")]
    Embedding {
        conversation: String,
        #[source]
        source: EmbeddingError,
    },
    #[error("{component} transport: {source}")]
    Transport {
        component: Component,
        #[source]
        source: OtError,
    },
    #[error("pair ({first:?}, {second:?}): {source}")]
    Pair {
        first: String,
        second: String,
        #[source]
        source: Box<MetricError>,
    },
}

impl MetricError {
    /// The embedding key whose absence caused this error, if any.
    pub fn missing_key(&self) -> Option<&str> {
        match self {
            MetricError::Profile { source, .. } => source.missing_key(),
            MetricError::Embedding {
                source: EmbeddingError::MissingEmbedding(key),
                ..
            } => Some(key),
            MetricError::Pair { source, .. } => source.missing_key(),
            _ => None,
        }
    }

    pub fn is_numerical(&self) -> bool {
        match self {
            MetricError::Transport { .. } => true,
            MetricError::Pair { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Solver {
    Exact,
    Sinkhorn(SinkhornParams),
}

/// How a component that is empty in exactly one conversation is scored.
///
/// A component empty on both sides contributes nothing under either policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EmptyComponentPolicy {
    Skip,
    MaxPenalty(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub gamma_intents: f64,
    pub gamma_utterances: f64,
    pub gamma_slots: f64,
    pub masking_enabled: bool,
    pub include_system: bool,
    pub solver: Solver,
    pub empty_component_policy: EmptyComponentPolicy,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            gamma_intents: 2.0,
            gamma_utterances: 1.0,
            gamma_slots: 1.0,
            masking_enabled: true,
            include_system: true,
            solver: Solver::Exact,
            empty_component_policy: EmptyComponentPolicy::Skip,
        }
    }
}

impl MetricConfig {
    /// Transport over utterances only, as in the "embeddings + OT" ablation rows.
    pub fn utterances_only(masking: bool) -> Self {
        MetricConfig {
            gamma_intents: 0.0,
            gamma_utterances: 1.0,
            gamma_slots: 0.0,
            masking_enabled: masking,
            ..Default::default()
        }
    }

    pub fn gamma(&self, component: Component) -> f64 {
        match component {
            Component::Utterances => self.gamma_utterances,
            Component::Intents => self.gamma_intents,
            Component::Slots => self.gamma_slots,
        }
    }

    pub fn profile_options(&self) -> ProfileOptions {
        ProfileOptions {
            masking: self.masking_enabled,
            include_system: self.include_system,
        }
    }

    pub fn validate(&self) -> Result<(), MetricError> {
        let gammas = [self.gamma_intents, self.gamma_utterances, self.gamma_slots];
        if gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(MetricError::InvalidConfig(format!(
                "weights must be finite and nonnegative, got {gammas:?}"
            )));
        }
        if gammas.iter().all(|g| *g == 0.0) {
            return Err(MetricError::InvalidConfig(
                "at least one weight must be positive".into(),
            ));
        }
        if let EmptyComponentPolicy::MaxPenalty(v) = self.empty_component_policy {
            if !(v.is_finite() && v >= 0.0) {
                return Err(MetricError::InvalidConfig(format!("invalid penalty {v}")));
            }
        }
        if let Solver::Sinkhorn(p) = self.solver {
            if !(p.epsilon.is_finite() && p.epsilon > 0.0) {
                return Err(MetricError::InvalidConfig(format!(
                    "invalid epsilon {}",
                    p.epsilon
                )));
            }
        }
        Ok(())
    }
}

/// W1 between two component distributions under the configured solver.
pub fn component_w1(
    alpha: &ComponentDistribution,
    beta: &ComponentDistribution,
    solver: Solver,
) -> Result<f64, MetricError> {
    let component = alpha.component;
    let wrap = |source| MetricError::Transport { component, source };
    let costs = cost_matrix(&alpha.support, &beta.support).map_err(wrap)?;
    let plan = match solver {
        Solver::Exact => transport_simplex(&alpha.weights, &beta.weights, &costs),
        Solver::Sinkhorn(params) => sinkhorn_log(&alpha.weights, &beta.weights, &costs, params),
    }
    .map_err(wrap)?;
    Ok(plan.objective)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TermStatus {
    Computed,
    /// Zero weight; not evaluated.
    Disabled,
    /// Empty on one side, dropped under [`EmptyComponentPolicy::Skip`].
    Skipped,
    /// Empty on one side, charged under [`EmptyComponentPolicy::MaxPenalty`].
    Penalized,
    BothEmpty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComponentTerm {
    pub component: Component,
    /// Unweighted W1, when it was computed.
    pub w1: Option<f64>,
    /// Weighted contribution to the total.
    pub contribution: f64,
    pub status: TermStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceBreakdown {
    pub total: f64,
    pub terms: Vec<ComponentTerm>,
}

impl DistanceBreakdown {
    pub fn term(&self, component: Component) -> &ComponentTerm {
        self.terms
            .iter()
            .find(|t| t.component == component)
            .expect("every component has a term")
    }
}

/// Weighted sum of per-component W1 distances between two profiles.
pub fn taskdiff_distance(
    p1: &ConversationProfile,
    p2: &ConversationProfile,
    config: &MetricConfig,
) -> Result<DistanceBreakdown, MetricError> {
    config.validate()?;
    let mut terms = Vec::with_capacity(3);
    let mut total = 0.0;
    // Fixed summation order: intents, utterances, slots.
    for component in [Component::Intents, Component::Utterances, Component::Slots] {
        let gamma = config.gamma(component);
        let term = if gamma == 0.0 {
            ComponentTerm {
                component,
                w1: None,
                contribution: 0.0,
                status: TermStatus::Disabled,
            }
        } else {
            match (p1.component(component), p2.component(component)) {
                (Some(a), Some(b)) => {
                    let w1 = component_w1(a, b, config.solver)?;
                    ComponentTerm {
                        component,
                        w1: Some(w1),
                        contribution: gamma * w1,
                        status: TermStatus::Computed,
                    }
                }
                (None, None) => ComponentTerm {
                    component,
                    w1: None,
                    contribution: 0.0,
                    status: TermStatus::BothEmpty,
                },
                _ => match config.empty_component_policy {
                    EmptyComponentPolicy::Skip => ComponentTerm {
                        component,
                        w1: None,
                        contribution: 0.0,
                        status: TermStatus::Skipped,
                    },
                    EmptyComponentPolicy::MaxPenalty(value) => ComponentTerm {
                        component,
                        w1: None,
                        contribution: gamma * value,
                        status: TermStatus::Penalized,
                    },
                },
            }
        };
        total += term.contribution;
        terms.push(term);
    }
    Ok(DistanceBreakdown { total, terms })
}

/// Any conversation distance the evaluation harnesses can run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Metric {
    TaskDiff(MetricConfig),
    Baseline(BaselineConfig),
}

/// Per-conversation state a metric computes once and reuses across pairs.
#[derive(Debug, Clone)]
pub enum Prepared {
    Profile(ConversationProfile),
    Utterances(Vec<Vec<f64>>),
}

impl Metric {
    pub fn validate(&self) -> Result<(), MetricError> {
        match self {
            Metric::TaskDiff(config) => config.validate(),
            Metric::Baseline(_) => Ok(()),
        }
    }

    pub fn profile_options(&self) -> ProfileOptions {
        match self {
            Metric::TaskDiff(config) => config.profile_options(),
            Metric::Baseline(b) => ProfileOptions {
                masking: b.masking,
                include_system: b.include_system,
            },
        }
    }

    pub fn prepare(
        &self,
        conversation: &Conversation,
        embeddings: &EmbeddingSet,
    ) -> Result<Prepared, MetricError> {
        match self {
            Metric::TaskDiff(config) => {
                build_profile_partial(conversation, embeddings, config.profile_options())
                    .map(Prepared::Profile)
                    .map_err(|source| MetricError::Profile {
                        conversation: conversation.id.clone(),
                        source,
                    })
            }
            Metric::Baseline(_) => retained_utterances(conversation, self.profile_options())
                .into_iter()
                .map(|text| embeddings.lookup_f64(&EmbeddingKey::utterance(text)))
                .collect::<Result<Vec<_>, _>>()
                .map(Prepared::Utterances)
                .map_err(|source| MetricError::Embedding {
                    conversation: conversation.id.clone(),
                    source,
                }),
        }
    }

    pub fn prepared_distance(&self, a: &Prepared, b: &Prepared) -> Result<f64, MetricError> {
        match (self, a, b) {
            (Metric::TaskDiff(config), Prepared::Profile(pa), Prepared::Profile(pb)) => {
                Ok(taskdiff_distance(pa, pb, config)?.total)
            }
            (Metric::Baseline(b), Prepared::Utterances(ua), Prepared::Utterances(ub)) => {
                Ok(match b.kind {
                    BaselineKind::SbertCosine => mean_cosine_distance(ua, ub),
                    BaselineKind::ConvEd => conv_edit_distance(ua, ub),
                })
            }
            _ => Err(MetricError::InvalidConfig(
                "prepared state does not match metric".into(),
            )),
        }
    }

    pub fn distance(
        &self,
        c1: &Conversation,
        c2: &Conversation,
        embeddings: &EmbeddingSet,
    ) -> Result<f64, MetricError> {
        self.validate()?;
        let a = self.prepare(c1, embeddings)?;
        let b = self.prepare(c2, embeddings)?;
        self.prepared_distance(&a, &b)
    }
}

/// Distance between two conversations under a baseline.
pub fn baseline_distance(
    config: BaselineConfig,
    c1: &Conversation,
    c2: &Conversation,
    embeddings: &EmbeddingSet,
) -> Result<f64, MetricError> {
    Metric::Baseline(config).distance(c1, c2, embeddings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SlotFilling, Turn};
    use crate::distributions::required_keys;
    use crate::embedding::hash_embedding_set;

    fn conv(id: &str, turns: Vec<Turn>) -> Conversation {
        Conversation::new(id, "Travel", turns)
    }

    fn profiles(
        c1: &Conversation,
        c2: &Conversation,
        config: &MetricConfig,
    ) -> (ConversationProfile, ConversationProfile) {
        let opts = config.profile_options();
        let keys: Vec<_> = required_keys(c1, opts)
            .into_iter()
            .chain(required_keys(c2, opts))
            .collect();
        let emb = hash_embedding_set(&keys, 32, 1).unwrap();
        (
            build_profile_partial(c1, &emb, opts).unwrap(),
            build_profile_partial(c2, &emb, opts).unwrap(),
        )
    }

    #[test]
    fn identical_profiles_are_zero() {
        let c = conv(
            "a",
            vec![Turn::user("book a flight to Rome")
                .with_intents(["BookFlight"])
                .with_fillings(vec![SlotFilling::new("city", "Rome")])],
        );
        let config = MetricConfig::default();
        let (p, q) = profiles(&c, &c, &config);
        assert_eq!(taskdiff_distance(&p, &q, &config).unwrap().total, 0.0);
    }

    #[test]
    fn only_utterance_term_differs() {
        let c1 = conv(
            "a",
            vec![Turn::user("book a flight to Rome")
                .with_intents(["BookFlight"])
                .with_fillings(vec![SlotFilling::new("city", "Rome")])],
        );
        let c2 = conv(
            "b",
            vec![Turn::user("I need a plane ticket for Rome")
                .with_intents(["BookFlight"])
                .with_fillings(vec![SlotFilling::new("city", "Rome")])],
        );
        let config = MetricConfig::default();
        let (p, q) = profiles(&c1, &c2, &config);
        let d = taskdiff_distance(&p, &q, &config).unwrap();
        let direct = component_w1(
            p.utterances.as_ref().unwrap(),
            q.utterances.as_ref().unwrap(),
            Solver::Exact,
        )
        .unwrap();
        assert!(direct > 0.0);
        assert_eq!(d.total, direct);
        assert_eq!(d.term(Component::Intents).w1, Some(0.0));
        assert_eq!(d.term(Component::Slots).w1, Some(0.0));
    }

    #[test]
    fn empty_component_policies() {
        let c1 = conv("a", vec![Turn::user("hi").with_intents(["A"])]);
        let c2 = conv(
            "b",
            vec![Turn::user("hi")
                .with_intents(["A"])
                .with_fillings(vec![SlotFilling::new("s", "hi")])],
        );
        let mut config = MetricConfig::default();
        let (p, q) = profiles(&c1, &c2, &config);
        let skip = taskdiff_distance(&p, &q, &config).unwrap();
        assert_eq!(skip.term(Component::Slots).status, TermStatus::Skipped);

        config.empty_component_policy = EmptyComponentPolicy::MaxPenalty(3.0);
        let pen = taskdiff_distance(&p, &q, &config).unwrap();
        assert_eq!(pen.term(Component::Slots).contribution, 3.0);
        assert!(pen.total >= skip.total + 3.0 - 1e-12);

        // Both empty: no penalty, identity preserved.
        let same = taskdiff_distance(&p, &p, &config).unwrap();
        assert_eq!(same.total, 0.0);
        assert_eq!(same.term(Component::Slots).status, TermStatus::BothEmpty);
    }

    #[test]
    fn config_validation() {
        let mut config = MetricConfig {
            gamma_intents: 0.0,
            gamma_utterances: 0.0,
            gamma_slots: 0.0,
            ..Default::default()
        };
        assert!(config.validate().is_err());
        config.gamma_slots = -1.0;
        assert!(config.validate().is_err());
        assert!(MetricConfig::default().validate().is_ok());
    }

    #[test]
    fn disabled_terms_are_not_evaluated() {
        let config = MetricConfig::utterances_only(false);
        let c1 = conv("a", vec![Turn::user("one").with_intents(["A"])]);
        let c2 = conv("b", vec![Turn::user("two").with_intents(["B"])]);
        let (p, q) = profiles(&c1, &c2, &config);
        let d = taskdiff_distance(&p, &q, &config).unwrap();
        assert_eq!(d.term(Component::Intents).status, TermStatus::Disabled);
        assert_eq!(d.total, d.term(Component::Utterances).contribution);
    }
}
