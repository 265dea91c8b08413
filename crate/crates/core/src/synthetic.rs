//! Seeded generator of annotated task-oriented corpora.
//!
//! Each domain owns disjoint intents, slots, and topical vocabulary; filler
//! words are shared across domains. User and system turns alternate, every
//! slot filling carries its character span, and within a conversation no two
//! utterances share a bag of tokens (raw or masked), so every turn has its own
//! embedding under bag-of-token embedders.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Conversation, Corpus, Ontology, SlotFilling, Turn};
use crate::embedding::tokenize;
use crate::masking::mask_turn;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub domains: usize,
    pub conversations_per_domain: usize,
    pub min_turns: usize,
    pub max_turns: usize,
    pub intents_per_domain: usize,
    pub slots_per_domain: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            domains: 3,
            conversations_per_domain: 20,
            min_turns: 8,
            max_turns: 14,
            intents_per_domain: 3,
            slots_per_domain: 3,
            seed: 0,
        }
    }
}

const DOMAINS: [&str; 10] = [
    "Flights",
    "Hotels",
    "Restaurants",
    "Movies",
    "Banks",
    "Music",
    "Events",
    "Buses",
    "Homes",
    "Doctors",
];
const VERBS: [&str; 5] = ["Find", "Book", "Cancel", "Check", "Change"];
const ATTRIBUTES: [&str; 6] = ["city", "date", "time", "count", "name", "price"];
const FILLER: [&str; 16] = [
    "please", "could", "you", "I", "would", "like", "to", "maybe", "also", "then", "now", "just",
    "really", "okay", "thanks", "help",
];
const SYSTEM_OPENERS: [&str; 6] = [
    "Sure",
    "Okay",
    "Got it",
    "Certainly",
    "Alright",
    "No problem",
];
const VALUES: [&str; 20] = [
    "Boston",
    "Denver",
    "Austin",
    "Seattle",
    "Miami",
    "Portland",
    "Chicago",
    "Phoenix",
    "Atlanta",
    "Dallas",
    "Monday",
    "Friday",
    "March 3rd",
    "June 9th",
    "7 pm",
    "noon",
    "two",
    "four",
    "Blue Fin",
    "49 dollars",
];

fn domain_name(d: usize) -> String {
    let base = DOMAINS[d % DOMAINS.len()];
    if d < DOMAINS.len() {
        base.to_string()
    } else {
        format!("{base}{}", d / DOMAINS.len())
    }
}

struct Domain {
    name: String,
    intents: Vec<String>,
    slots: Vec<String>,
    vocabulary: Vec<String>,
}

fn build_domains(config: &SyntheticConfig) -> Vec<Domain> {
    (0..config.domains)
        .map(|d| {
            let name = domain_name(d);
            let lower = name.to_lowercase();
            Domain {
                intents: (0..config.intents_per_domain)
                    .map(|i| {
                        format!(
                            "{}{}{}",
                            VERBS[i % VERBS.len()],
                            name,
                            if i < VERBS.len() {
                                String::new()
                            } else {
                                i.to_string()
                            }
                        )
                    })
                    .collect(),
                slots: (0..config.slots_per_domain)
                    .map(|s| {
                        format!(
                            "{lower}_{}{}",
                            ATTRIBUTES[s % ATTRIBUTES.len()],
                            if s < ATTRIBUTES.len() {
                                String::new()
                            } else {
                                s.to_string()
                            }
                        )
                    })
                    .collect(),
                vocabulary: (0..10).map(|w| format!("{lower}{w}")).collect(),
                name,
            }
        })
        .collect()
}

/// Ontology covering every domain of `config`, names sorted.
pub fn synthetic_ontology(config: &SyntheticConfig) -> Ontology {
    let domains = build_domains(config);
    let mut intents: Vec<String> = domains.iter().flat_map(|d| d.intents.clone()).collect();
    let mut slots: Vec<String> = domains.iter().flat_map(|d| d.slots.clone()).collect();
    intents.sort();
    slots.sort();
    Ontology::new(intents, slots).expect("generated names are unique")
}

fn bag(text: &str) -> Vec<String> {
    let mut tokens = tokenize(text);
    tokens.sort();
    tokens
}

fn make_turn(domain: &Domain, user: bool, rng: &mut ChaCha8Rng) -> Turn {
    let mut words: Vec<String> = Vec::new();
    if !user {
        words.push(SYSTEM_OPENERS.choose(rng).unwrap().to_string());
    }
    for _ in 0..rng.gen_range(2..5) {
        words.push(FILLER.choose(rng).unwrap().to_string());
    }
    for _ in 0..rng.gen_range(2..4) {
        words.push(domain.vocabulary.choose(rng).unwrap().clone());
    }
    let filling_count = if user {
        rng.gen_range(0..3)
    } else {
        rng.gen_range(0..2)
    };
    let mut utterance = words.join(" ");
    let mut fillings = Vec::new();
    for _ in 0..filling_count {
        let slot = domain.slots.choose(rng).unwrap().clone();
        let value = *VALUES.choose(rng).unwrap();
        utterance.push_str(" for ");
        let start = utterance.chars().count();
        utterance.push_str(value);
        let end = utterance.chars().count();
        fillings.push(SlotFilling::new(slot, value).with_span(start, end));
    }
    let mut turn = if user {
        Turn::user(utterance)
    } else {
        Turn::system(utterance)
    };
    turn.slot_fillings = fillings;
    if user {
        // The first intent dominates so conversations of a domain look alike.
        let intent = if rng.gen_bool(0.6) {
            domain.intents[0].clone()
        } else {
            domain.intents.choose(rng).unwrap().clone()
        };
        turn.active_intents = vec![intent];
    }
    turn
}

fn make_conversation(
    id: String,
    domain: &Domain,
    turns: usize,
    rng: &mut ChaCha8Rng,
) -> Conversation {
    let mut seen_raw = HashSet::new();
    let mut seen_masked = HashSet::new();
    let mut out = Vec::with_capacity(turns);
    for t in 0..turns {
        let user = t % 2 == 0;
        let turn = loop {
            let candidate = make_turn(domain, user, rng);
            let raw = bag(&candidate.utterance);
            let masked = bag(&mask_turn(&candidate).text);
            if !seen_raw.contains(&raw) && !seen_masked.contains(&masked) {
                seen_raw.insert(raw);
                seen_masked.insert(masked);
                break candidate;
            }
        };
        out.push(turn);
    }
    Conversation::new(id, domain.name.clone(), out)
}

/// Generate a validated corpus. Conversations are grouped by domain.
pub fn synthetic_corpus(config: &SyntheticConfig) -> Corpus {
    assert!(config.domains > 0 && config.conversations_per_domain > 0);
    assert!(config.min_turns >= 1 && config.min_turns <= config.max_turns);
    assert!(config.intents_per_domain > 0 && config.slots_per_domain > 0);
    let domains = build_domains(config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut conversations = Vec::new();
    for domain in &domains {
        for c in 0..config.conversations_per_domain {
            let turns = rng.gen_range(config.min_turns..=config.max_turns);
            let id = format!("{}_{c:04}", domain.name.to_lowercase());
            conversations.push(make_conversation(id, domain, turns, &mut rng));
        }
    }
    Corpus::new(synthetic_ontology(config), conversations).expect("generated corpus validates")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_shape() {
        let config = SyntheticConfig::default();
        let corpus = synthetic_corpus(&config);
        assert_eq!(corpus.len(), 60);
        assert_eq!(corpus.ontology().intents().len(), 9);
        for conv in corpus.conversations() {
            assert!((8..=14).contains(&conv.turns.len()));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let config = SyntheticConfig::default();
        assert_eq!(synthetic_corpus(&config), synthetic_corpus(&config));
        let other = SyntheticConfig {
            seed: 1,
            ..config.clone()
        };
        assert_ne!(synthetic_corpus(&config), synthetic_corpus(&other));
    }

    #[test]
    fn domains_have_disjoint_intents() {
        let corpus = synthetic_corpus(&SyntheticConfig::default());
        let mut owner = std::collections::HashMap::new();
        for conv in corpus.conversations() {
            for intent in conv.intent_set() {
                let prev = owner.insert(intent.to_string(), conv.domain_label.clone());
                assert!(prev.is_none_or(|p| p == conv.domain_label));
            }
        }
    }

    #[test]
    fn many_domains_get_unique_names() {
        let config = SyntheticConfig {
            domains: 12,
            conversations_per_domain: 1,
            ..Default::default()
        };
        let corpus = synthetic_corpus(&config);
        let labels: HashSet<_> = corpus
            .conversations()
            .iter()
            .map(|c| c.domain_label.clone())
            .collect();
        assert_eq!(labels.len(), 12);
    }
}
