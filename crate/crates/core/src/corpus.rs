//! Conversation data model, ontology, and corpus ingestion.
//!
//! Two on-disk layouts are understood:
//!
//! * **Canonical**: a directory holding `ontology.json` (ordered `intents` and
//!   `slots` arrays, optional `domains` map) and `conversations.jsonl` (one
//!   [`Conversation`] per line).
//! * **SGD**: the Schema-Guided Dialogue layout, a directory with
//!   `schema.json` and one or more `dialogues_*.json` files.
//!
//! Every loaded corpus is validated against its ontology before it is
//! returned, so downstream code never sees an unknown intent or a span that
//! does not slice its utterance.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ONTOLOGY_FILE: &str = "ontology.json";
pub const CONVERSATIONS_FILE: &str = "conversations.jsonl";
pub const SGD_SCHEMA_FILE: &str = "schema.json";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("parse error in {locator}: {message}")]
    Parse { locator: String, message: String },
    #[error("schema error in {locator}: {message}")]
    Schema { locator: String, message: String },
    #[error("corpus contains no conversations")]
    EmptyCorpus,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    fn parse(locator: impl Into<String>, message: impl fmt::Display) -> Self {
        CorpusError::Parse {
            locator: locator.into(),
            message: message.to_string(),
        }
    }

    fn schema(locator: impl Into<String>, message: impl fmt::Display) -> Self {
        CorpusError::Schema {
            locator: locator.into(),
            message: message.to_string(),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// On-disk corpus layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Canonical,
    Sgd,
}

/// The global catalogue of intents and slots.
///
/// Name order is fixed at construction and defines the index of every name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ontology {
    intents: Vec<String>,
    slots: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domains: Option<BTreeMap<String, usize>>,
}

impl Ontology {
    pub fn new(intents: Vec<String>, slots: Vec<String>) -> Result<Self, CorpusError> {
        Self::with_domains(intents, slots, None)
    }

    pub fn with_domains(
        intents: Vec<String>,
        slots: Vec<String>,
        domains: Option<BTreeMap<String, usize>>,
    ) -> Result<Self, CorpusError> {
        let ontology = Ontology {
            intents,
            slots,
            domains,
        };
        ontology.validate()?;
        Ok(ontology)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        for (kind, names) in [("intent", &self.intents), ("slot", &self.slots)] {
            let mut seen = HashSet::new();
            for name in names {
                if name.is_empty() {
                    return Err(CorpusError::schema(
                        "ontology",
                        format!("empty {kind} name"),
                    ));
                }
                if !seen.insert(name.as_str()) {
                    return Err(CorpusError::schema(
                        "ontology",
                        format!("duplicate {kind} name {name:?}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn intents(&self) -> &[String] {
        &self.intents
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    pub fn domains(&self) -> Option<&BTreeMap<String, usize>> {
        self.domains.as_ref()
    }

    pub fn intent_index(&self, name: &str) -> Option<usize> {
        self.intents.iter().position(|n| n == name)
    }

    pub fn slot_index(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|n| n == name)
    }

    pub fn has_intent(&self, name: &str) -> bool {
        self.intent_index(name).is_some()
    }

    pub fn has_slot(&self, name: &str) -> bool {
        self.slot_index(name).is_some()
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        let ontology: Ontology =
            serde_json::from_str(text).map_err(|e| CorpusError::parse(ONTOLOGY_FILE, e))?;
        ontology.validate()?;
        Ok(ontology)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ontology serializes") + "\n"
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        Self::from_json(&read_file(path)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    User,
    System,
}

/// A slot bound to a value inside one utterance.
///
/// `span` holds `(start, end)` character offsets (Unicode scalar values, end
/// exclusive) into the owning utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotFilling {
    pub slot_name: String,
    pub value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<(usize, usize)>,
}

impl SlotFilling {
    pub fn new(slot_name: impl Into<String>, value: impl Into<String>) -> Self {
        SlotFilling {
            slot_name: slot_name.into(),
            value: value.into(),
            span: None,
        }
    }

    pub fn with_span(mut self, start: usize, end: usize) -> Self {
        self.span = Some((start, end));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub speaker: Speaker,
    pub utterance: String,
    #[serde(default)]
    pub active_intents: Vec<String>,
    #[serde(default)]
    pub slot_fillings: Vec<SlotFilling>,
}

impl Turn {
    pub fn user(utterance: impl Into<String>) -> Self {
        Turn {
            speaker: Speaker::User,
            utterance: utterance.into(),
            active_intents: Vec::new(),
            slot_fillings: Vec::new(),
        }
    }

    pub fn system(utterance: impl Into<String>) -> Self {
        Turn {
            speaker: Speaker::System,
            ..Turn::user(utterance)
        }
    }

    pub fn with_intents<I, S>(mut self, intents: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.active_intents = intents.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_fillings(mut self, fillings: Vec<SlotFilling>) -> Self {
        self.slot_fillings = fillings;
        self
    }

    pub fn validate(&self, ontology: &Ontology) -> Result<(), String> {
        if self.utterance.is_empty() {
            return Err("empty utterance".into());
        }
        for intent in &self.active_intents {
            if !ontology.has_intent(intent) {
                return Err(format!("unknown intent {intent:?}"));
            }
        }
        let len = self.utterance.chars().count();
        for filling in &self.slot_fillings {
            if !ontology.has_slot(&filling.slot_name) {
                return Err(format!("unknown slot {:?}", filling.slot_name));
            }
            if let Some((start, end)) = filling.span {
                if !(start < end && end <= len) {
                    return Err(format!(
                        "bad span ({start}, {end}) for slot {:?} in utterance of {len} characters",
                        filling.slot_name
                    ));
                }
                let sliced = char_slice(&self.utterance, start, end);
                if sliced != filling.value {
                    return Err(format!(
                        "span ({start}, {end}) slices {sliced:?}, expected value {:?}",
                        filling.value
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Slice `text` by character offsets. Offsets past the end are clamped.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let byte_at = |idx: usize| {
        text.char_indices()
            .nth(idx)
            .map(|(b, _)| b)
            .unwrap_or(text.len())
    };
    let (s, e) = (byte_at(start), byte_at(end));
    if s >= e {
        ""
    } else {
        &text[s..e]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conversation {
    pub id: String,
    pub domain_label: String,
    pub turns: Vec<Turn>,
}

impl Conversation {
    pub fn new(id: impl Into<String>, domain_label: impl Into<String>, turns: Vec<Turn>) -> Self {
        Conversation {
            id: id.into(),
            domain_label: domain_label.into(),
            turns,
        }
    }

    pub fn validate(&self, ontology: &Ontology) -> Result<(), String> {
        if self.turns.is_empty() {
            return Err("conversation has no turns".into());
        }
        if !self.turns.iter().any(|t| t.speaker == Speaker::User) {
            return Err("conversation has no user turn".into());
        }
        for (idx, turn) in self.turns.iter().enumerate() {
            turn.validate(ontology)
                .map_err(|msg| format!("turn {idx}: {msg}"))?;
        }
        Ok(())
    }

    /// Conversation-level intent subset, derived from per-turn annotations.
    pub fn intent_set(&self) -> BTreeSet<&str> {
        self.turns
            .iter()
            .flat_map(|t| t.active_intents.iter().map(String::as_str))
            .collect()
    }

    pub fn slot_set(&self) -> BTreeSet<&str> {
        self.turns
            .iter()
            .flat_map(|t| t.slot_fillings.iter().map(|f| f.slot_name.as_str()))
            .collect()
    }
}

/// An ontology with conversations that all validate against it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    ontology: Ontology,
    conversations: Vec<Conversation>,
}

impl Corpus {
    pub fn new(ontology: Ontology, conversations: Vec<Conversation>) -> Result<Self, CorpusError> {
        if conversations.is_empty() {
            return Err(CorpusError::EmptyCorpus);
        }
        let mut ids = HashSet::new();
        for (idx, conv) in conversations.iter().enumerate() {
            let locator = format!("conversation {idx} ({:?})", conv.id);
            if !ids.insert(conv.id.as_str()) {
                return Err(CorpusError::schema(locator, "duplicate conversation id"));
            }
            conv.validate(&ontology)
                .map_err(|msg| CorpusError::schema(locator, msg))?;
        }
        Ok(Corpus {
            ontology,
            conversations,
        })
    }

    pub fn ontology(&self) -> &Ontology {
        &self.ontology
    }

    pub fn conversations(&self) -> &[Conversation] {
        &self.conversations
    }

    pub fn len(&self) -> usize {
        self.conversations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conversations.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Conversation> {
        self.conversations.iter().find(|c| c.id == id)
    }

    pub fn labels(&self) -> BTreeMap<String, String> {
        self.conversations
            .iter()
            .map(|c| (c.id.clone(), c.domain_label.clone()))
            .collect()
    }

    /// A corpus restricted to the conversations at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Corpus, CorpusError> {
        let conversations = indices
            .iter()
            .map(|&i| self.conversations[i].clone())
            .collect();
        Corpus::new(self.ontology.clone(), conversations)
    }

    /// Parse the canonical layout from in-memory text.
    pub fn from_canonical(
        ontology_json: &str,
        conversations_jsonl: &str,
    ) -> Result<Self, CorpusError> {
        let ontology = Ontology::from_json(ontology_json)?;
        let mut conversations = Vec::new();
        for (lineno, line) in conversations_jsonl.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let conv: Conversation = serde_json::from_str(line).map_err(|e| {
                CorpusError::parse(format!("{CONVERSATIONS_FILE} line {}", lineno + 1), e)
            })?;
            conversations.push(conv);
        }
        Corpus::new(ontology, conversations)
    }

    /// Serialize to the canonical layout: `(ontology.json, conversations.jsonl)`.
    pub fn to_canonical(&self) -> (String, String) {
        let mut lines = String::new();
        for conv in &self.conversations {
            lines.push_str(&serde_json::to_string(conv).expect("conversation serializes"));
            lines.push('\n');
        }
        (self.ontology.to_json(), lines)
    }

    pub fn write_canonical(&self, dir: &Path) -> Result<(), CorpusError> {
        let io = |path: PathBuf| move |source| CorpusError::Io { path, source };
        fs::create_dir_all(dir).map_err(io(dir.to_path_buf()))?;
        let (ontology, conversations) = self.to_canonical();
        let opath = dir.join(ONTOLOGY_FILE);
        fs::write(&opath, ontology).map_err(io(opath.clone()))?;
        let cpath = dir.join(CONVERSATIONS_FILE);
        fs::write(&cpath, conversations).map_err(io(cpath.clone()))?;
        Ok(())
    }
}

/// Load and validate a corpus.
///
/// For [`CorpusFormat::Canonical`], `path` is a directory holding
/// `ontology.json` and `conversations.jsonl`. For [`CorpusFormat::Sgd`],
/// `path` is either an SGD split directory or a single dialogues file whose
/// directory contains `schema.json`; the ontology is extracted from that
/// schema.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    match format {
        CorpusFormat::Canonical => {
            let ontology = read_file(&path.join(ONTOLOGY_FILE))?;
            let conversations = read_file(&path.join(CONVERSATIONS_FILE))?;
            Corpus::from_canonical(&ontology, &conversations)
        }
        CorpusFormat::Sgd => {
            let (schema, dialogue_files) = sgd_layout(path)?;
            let ontology = extract_ontology(&[schema])?;
            load_sgd_dialogues(&dialogue_files, &ontology)
        }
    }
}

fn sgd_layout(path: &Path) -> Result<(PathBuf, Vec<PathBuf>), CorpusError> {
    if path.is_dir() {
        let entries = fs::read_dir(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("dialogues_") && n.ends_with(".json"))
            })
            .collect();
        files.sort();
        Ok((path.join(SGD_SCHEMA_FILE), files))
    } else {
        let dir = path.parent().unwrap_or(Path::new("."));
        Ok((dir.join(SGD_SCHEMA_FILE), vec![path.to_path_buf()]))
    }
}

#[derive(Deserialize)]
struct SgdNamed {
    name: String,
}

#[derive(Deserialize)]
struct SgdService {
    #[serde(default)]
    intents: Vec<SgdNamed>,
    #[serde(default)]
    slots: Vec<SgdNamed>,
}

#[derive(Deserialize)]
struct SgdDialogue {
    dialogue_id: String,
    #[serde(default)]
    services: Vec<String>,
    turns: Vec<SgdTurn>,
}

#[derive(Deserialize)]
struct SgdTurn {
    speaker: String,
    utterance: String,
    #[serde(default)]
    frames: Vec<SgdFrame>,
}

#[derive(Deserialize)]
struct SgdFrame {
    #[serde(default)]
    service: Option<String>,
    #[serde(default)]
    slots: Vec<SgdSlotSpan>,
    #[serde(default)]
    state: Option<SgdState>,
}

#[derive(Deserialize)]
struct SgdSlotSpan {
    slot: String,
    start: usize,
    exclusive_end: usize,
}

#[derive(Deserialize)]
struct SgdState {
    active_intent: String,
}

const SGD_NO_INTENT: &str = "NONE";

/// Union of the intents and slots declared in the given files, each list
/// sorted lexicographically.
///
/// Files may be SGD `schema.json` files (an array of services) or canonical
/// ontology files.
pub fn extract_ontology(paths: &[PathBuf]) -> Result<Ontology, CorpusError> {
    let mut intents = BTreeSet::new();
    let mut slots = BTreeSet::new();
    for path in paths {
        let text = read_file(path)?;
        let locator = path.display().to_string();
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| CorpusError::parse(&locator, e))?;
        if value.is_array() {
            let services: Vec<SgdService> =
                serde_json::from_value(value).map_err(|e| CorpusError::parse(&locator, e))?;
            for service in services {
                intents.extend(service.intents.into_iter().map(|i| i.name));
                slots.extend(service.slots.into_iter().map(|s| s.name));
            }
        } else {
            #[derive(Deserialize)]
            struct Names {
                intents: Vec<String>,
                slots: Vec<String>,
            }
            let names: Names =
                serde_json::from_value(value).map_err(|e| CorpusError::parse(&locator, e))?;
            intents.extend(names.intents);
            slots.extend(names.slots);
        }
    }
    if intents.iter().chain(slots.iter()).any(String::is_empty) {
        return Err(CorpusError::schema("ontology", "empty intent or slot name"));
    }
    Ontology::new(intents.into_iter().collect(), slots.into_iter().collect())
}

/// Domain label for an SGD service name such as `Restaurants_1`.
pub fn sgd_domain(service: &str) -> &str {
    match service.rsplit_once('_') {
        Some((domain, suffix)) if suffix.chars().all(|c| c.is_ascii_digit()) => domain,
        _ => service,
    }
}

/// Parse SGD dialogue files against a supplied ontology.
pub fn load_sgd_dialogues(files: &[PathBuf], ontology: &Ontology) -> Result<Corpus, CorpusError> {
    let mut conversations = Vec::new();
    for file in files {
        let text = read_file(file)?;
        conversations.extend(parse_sgd_dialogues(
            &text,
            &file.display().to_string(),
            ontology,
        )?);
    }
    Corpus::new(ontology.clone(), conversations)
}

/// Parse the text of one SGD dialogues file. `source` names it in errors.
pub fn parse_sgd_dialogues(
    text: &str,
    source: &str,
    ontology: &Ontology,
) -> Result<Vec<Conversation>, CorpusError> {
    let dialogues: Vec<SgdDialogue> =
        serde_json::from_str(text).map_err(|e| CorpusError::parse(source, e))?;
    let mut out = Vec::with_capacity(dialogues.len());
    for (didx, dialogue) in dialogues.into_iter().enumerate() {
        let locator = format!("{source} dialogue {didx} ({:?})", dialogue.dialogue_id);
        let first_service = dialogue
            .services
            .first()
            .cloned()
            .or_else(|| {
                dialogue
                    .turns
                    .iter()
                    .flat_map(|t| t.frames.iter())
                    .find_map(|f| f.service.clone())
            })
            .ok_or_else(|| CorpusError::schema(&locator, "dialogue names no service"))?;
        let mut turns = Vec::with_capacity(dialogue.turns.len());
        for (tidx, sgd_turn) in dialogue.turns.into_iter().enumerate() {
            let speaker = match sgd_turn.speaker.as_str() {
                "USER" => Speaker::User,
                "SYSTEM" => Speaker::System,
                other => {
                    return Err(CorpusError::parse(
                        format!("{locator} turn {tidx}"),
                        format!("unknown speaker {other:?}"),
                    ))
                }
            };
            let mut active_intents: Vec<String> = Vec::new();
            let mut slot_fillings = Vec::new();
            for frame in sgd_turn.frames {
                if let Some(state) = frame.state {
                    if state.active_intent != SGD_NO_INTENT
                        && !active_intents.contains(&state.active_intent)
                    {
                        active_intents.push(state.active_intent);
                    }
                }
                for span in frame.slots {
                    let value = char_slice(&sgd_turn.utterance, span.start, span.exclusive_end);
                    slot_fillings.push(
                        SlotFilling::new(span.slot, value)
                            .with_span(span.start, span.exclusive_end),
                    );
                }
            }
            turns.push(Turn {
                speaker,
                utterance: sgd_turn.utterance,
                active_intents,
                slot_fillings,
            });
        }
        let conv = Conversation::new(dialogue.dialogue_id, sgd_domain(&first_service), turns);
        conv.validate(ontology)
            .map_err(|msg| CorpusError::schema(&locator, msg))?;
        out.push(conv);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ontology() -> Ontology {
        Ontology::new(
            vec!["BookFlight".into(), "BookHotel".into()],
            vec!["arrival_city".into(), "date".into()],
        )
        .unwrap()
    }

    #[test]
    fn ontology_rejects_duplicates_and_empty_names() {
        assert!(Ontology::new(vec!["A".into(), "A".into()], vec![]).is_err());
        assert!(Ontology::new(vec![], vec!["".into()]).is_err());
    }

    #[test]
    fn span_must_slice_value() {
        let turn = Turn::user("fly to Paris").with_fillings(vec![SlotFilling::new(
            "arrival_city",
            "Paris",
        )
        .with_span(7, 12)]);
        assert!(turn.validate(&ontology()).is_ok());
        let bad = Turn::user("fly to Paris").with_fillings(vec![SlotFilling::new(
            "arrival_city",
            "Paris",
        )
        .with_span(5, 3)]);
        assert!(bad.validate(&ontology()).unwrap_err().contains("bad span"));
        let wrong = Turn::user("fly to Paris").with_fillings(vec![SlotFilling::new(
            "arrival_city",
            "Pari",
        )
        .with_span(7, 12)]);
        assert!(wrong.validate(&ontology()).is_err());
    }

    #[test]
    fn spans_count_characters_not_bytes() {
        let turn = Turn::user("vol à Zürich").with_fillings(vec![SlotFilling::new(
            "arrival_city",
            "Zürich",
        )
        .with_span(6, 12)]);
        assert!(turn.validate(&ontology()).is_ok());
    }

    #[test]
    fn corpus_rejects_unknown_intent_and_duplicate_ids() {
        let conv = Conversation::new(
            "c1",
            "Travel",
            vec![Turn::user("hi").with_intents(["Nope"])],
        );
        let err = Corpus::new(ontology(), vec![conv]).unwrap_err();
        assert!(matches!(err, CorpusError::Schema { .. }));

        let conv = Conversation::new("c1", "Travel", vec![Turn::user("hi")]);
        let err = Corpus::new(ontology(), vec![conv.clone(), conv]).unwrap_err();
        assert!(err.to_string().contains("duplicate conversation id"));
    }

    #[test]
    fn conversation_needs_a_user_turn() {
        let conv = Conversation::new("c1", "Travel", vec![Turn::system("hello")]);
        assert!(conv.validate(&ontology()).is_err());
    }

    #[test]
    fn empty_canonical_corpus_is_rejected() {
        let err = Corpus::from_canonical(&ontology().to_json(), "\n").unwrap_err();
        assert!(matches!(err, CorpusError::EmptyCorpus));
    }

    #[test]
    fn canonical_parse_error_names_line() {
        let text = format!(
            "{}\n{{not json\n",
            serde_json::to_string(&Conversation::new("c1", "T", vec![Turn::user("hi")])).unwrap()
        );
        let err = Corpus::from_canonical(&ontology().to_json(), &text).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn sgd_domain_strips_numeric_suffix() {
        assert_eq!(sgd_domain("Restaurants_1"), "Restaurants");
        assert_eq!(sgd_domain("RentalCars_3"), "RentalCars");
        assert_eq!(sgd_domain("Weather"), "Weather");
    }

    #[test]
    fn sgd_dialogue_maps_frames_and_drops_none() {
        let ontology = Ontology::new(
            vec!["FindRestaurants".into(), "ReserveRestaurant".into()],
            vec!["city".into(), "cuisine".into()],
        )
        .unwrap();
        let text = r#"[{
            "dialogue_id": "1_00000",
            "services": ["Restaurants_1"],
            "turns": [
              {"speaker": "USER", "utterance": "Find Italian food in Oakland",
               "frames": [{"service": "Restaurants_1",
                           "slots": [{"slot": "cuisine", "start": 5, "exclusive_end": 12},
                                     {"slot": "city", "start": 21, "exclusive_end": 28}],
                           "state": {"active_intent": "FindRestaurants", "requested_slots": [], "slot_values": {}}}]},
              {"speaker": "SYSTEM", "utterance": "Found one in Oakland.",
               "frames": [{"service": "Restaurants_1",
                           "slots": [{"slot": "city", "start": 13, "exclusive_end": 20}]}]},
              {"speaker": "USER", "utterance": "Thanks, bye",
               "frames": [{"service": "Restaurants_1", "slots": [],
                           "state": {"active_intent": "NONE", "requested_slots": [], "slot_values": {}}}]}
            ]}]"#;
        let convs = parse_sgd_dialogues(text, "test", &ontology).unwrap();
        assert_eq!(convs.len(), 1);
        let conv = &convs[0];
        assert_eq!(conv.domain_label, "Restaurants");
        assert_eq!(conv.turns[0].active_intents, vec!["FindRestaurants"]);
        assert_eq!(conv.turns[0].slot_fillings[0].value, "Italian");
        assert_eq!(conv.turns[0].slot_fillings[1].value, "Oakland");
        assert_eq!(conv.turns[1].speaker, Speaker::System);
        assert_eq!(conv.turns[1].slot_fillings[0].value, "Oakland");
        assert!(conv.turns[2].active_intents.is_empty());
    }

    #[test]
    fn sgd_unknown_intent_is_rejected() {
        let ontology = Ontology::new(vec!["FindRestaurants".into()], vec![]).unwrap();
        let text = r#"[{"dialogue_id": "x", "services": ["Flights_1"], "turns": [
            {"speaker": "USER", "utterance": "book it",
             "frames": [{"service": "Flights_1", "slots": [],
                         "state": {"active_intent": "BookFlight"}}]}]}]"#;
        let err = parse_sgd_dialogues(text, "test", &ontology).unwrap_err();
        assert!(matches!(err, CorpusError::Schema { .. }), "{err}");
    }
}
