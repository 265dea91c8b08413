//! Embedding storage, the `EMBV1` file format, and a deterministic hashing
//! embedder for tests and demos.
//!
//! `EMBV1` layout (UTF-8, `\n` line endings):
//!
//! ```text
//! EMBV1 <dim> <count>
//! <key-length-in-bytes> <key>
//! <dim little-endian f32 values as lowercase hex, 8 chars each>
//! ...
//! ```
//!
//! The hex line encodes the raw bytes of each float, so a file round-trips
//! bit-exactly in any language.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EMBEDDING_MAGIC: &str = "EMBV1";

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("parse error at {locator}: {message}")]
    Parse { locator: String, message: String },
    #[error("dimension mismatch for {key:?}: expected {expected}, found {found}")]
    DimensionMismatch {
        key: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate embedding key {0:?}")]
    DuplicateKey(String),
    #[error("missing embedding for key {0:?}")]
    MissingEmbedding(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn parse_err(locator: impl Into<String>, message: impl fmt::Display) -> EmbeddingError {
    EmbeddingError::Parse {
        locator: locator.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KeyKind {
    Utterance,
    IntentName,
    SlotName,
}

impl KeyKind {
    fn prefix(self) -> &'static str {
        match self {
            KeyKind::Utterance => "utt",
            KeyKind::IntentName => "intent",
            KeyKind::SlotName => "slot",
        }
    }
}

/// What an embedding vector stands for.
///
/// Encoded as `<kind>:<text>`. No kind prefix contains `:`, so the encoding
/// is injective.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EmbeddingKey {
    pub kind: KeyKind,
    pub text: String,
}

impl EmbeddingKey {
    pub fn utterance(text: impl Into<String>) -> Self {
        EmbeddingKey {
            kind: KeyKind::Utterance,
            text: text.into(),
        }
    }

    pub fn intent(name: impl Into<String>) -> Self {
        EmbeddingKey {
            kind: KeyKind::IntentName,
            text: name.into(),
        }
    }

    pub fn slot(name: impl Into<String>) -> Self {
        EmbeddingKey {
            kind: KeyKind::SlotName,
            text: name.into(),
        }
    }

    pub fn encode(&self) -> String {
        format!("{}:{}", self.kind.prefix(), self.text)
    }

    pub fn decode(encoded: &str) -> Option<Self> {
        let (prefix, text) = encoded.split_once(':')?;
        let kind = [KeyKind::Utterance, KeyKind::IntentName, KeyKind::SlotName]
            .into_iter()
            .find(|k| k.prefix() == prefix)?;
        Some(EmbeddingKey {
            kind,
            text: text.to_string(),
        })
    }
}

impl fmt::Display for EmbeddingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.encode())
    }
}

/// Immutable map from encoded key to a `dim`-length f32 vector.
///
/// Insertion order is kept so that writing is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    keys: Vec<String>,
    vectors: Vec<Vec<f32>>,
    index: HashMap<String, usize>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Self {
        EmbeddingSet {
            dim,
            keys: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn insert(
        &mut self,
        key: impl Into<String>,
        vector: Vec<f32>,
    ) -> Result<(), EmbeddingError> {
        let key = key.into();
        if vector.len() != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                key,
                expected: self.dim,
                found: vector.len(),
            });
        }
        if let Some(i) = vector.iter().position(|v| !v.is_finite()) {
            return Err(parse_err(
                format!("key {key:?}"),
                format!("component {i} is not finite"),
            ));
        }
        if self.index.contains_key(&key) {
            return Err(EmbeddingError::DuplicateKey(key));
        }
        self.index.insert(key.clone(), self.keys.len());
        self.keys.push(key);
        self.vectors.push(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn contains(&self, key: &EmbeddingKey) -> bool {
        self.index.contains_key(&key.encode())
    }

    pub fn get_encoded(&self, encoded: &str) -> Option<&[f32]> {
        self.index.get(encoded).map(|&i| self.vectors[i].as_slice())
    }

    pub fn lookup(&self, key: &EmbeddingKey) -> Result<&[f32], EmbeddingError> {
        let encoded = key.encode();
        self.get_encoded(&encoded)
            .ok_or(EmbeddingError::MissingEmbedding(encoded))
    }

    /// The vector for `key` widened to f64.
    pub fn lookup_f64(&self, key: &EmbeddingKey) -> Result<Vec<f64>, EmbeddingError> {
        Ok(self.lookup(key)?.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.keys
            .iter()
            .map(String::as_str)
            .zip(self.vectors.iter().map(Vec::as_slice))
    }

    pub fn to_embv1(&self) -> String {
        let mut out = format!("{EMBEDDING_MAGIC} {} {}\n", self.dim, self.len());
        for (key, vector) in self.iter() {
            out.push_str(&format!("{} {}\n", key.len(), key));
            for v in vector {
                push_hex(&mut out, &v.to_le_bytes());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_embv1(text: &str) -> Result<Self, EmbeddingError> {
        let mut rest = text;
        let mut line_no = 0usize;

        let (_, header) = next_line(&mut rest, &mut line_no)?;
        let fields: Vec<&str> = header.split(' ').collect();
        let (dim, count) = match fields.as_slice() {
            [magic, dim, count] if *magic == EMBEDDING_MAGIC => (
                dim.parse::<usize>().map_err(|e| parse_err("line 1", e))?,
                count.parse::<usize>().map_err(|e| parse_err("line 1", e))?,
            ),
            _ => return Err(parse_err("line 1", format!("bad header {header:?}"))),
        };
        if dim == 0 {
            return Err(parse_err("line 1", "dimension must be positive"));
        }

        let mut set = EmbeddingSet::new(dim);
        for entry in 0..count {
            // The key may contain any byte, including newlines, so it is read
            // by its declared length rather than by line.
            line_no += 1;
            let locator = format!("line {line_no} (entry {entry})");
            let (len_str, tail) = rest
                .split_once(' ')
                .ok_or_else(|| parse_err(&locator, "missing key length"))?;
            let key_len: usize = len_str.parse().map_err(|e| parse_err(&locator, e))?;
            if tail.len() < key_len + 1 || !tail.is_char_boundary(key_len) {
                return Err(parse_err(&locator, "key length runs past end of file"));
            }
            let key = &tail[..key_len];
            if tail.as_bytes()[key_len] != b'\n' {
                return Err(parse_err(&locator, "key not followed by newline"));
            }
            line_no += key.matches('\n').count();
            rest = &tail[key_len + 1..];
            let key = key.to_string();

            let (vec_line_no, hex) = next_line(&mut rest, &mut line_no)?;
            let locator = format!("line {vec_line_no}");
            if hex.len() % 8 != 0 {
                return Err(parse_err(
                    &locator,
                    "hex vector length is not a multiple of 8",
                ));
            }
            if hex.len() / 8 != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    key,
                    expected: dim,
                    found: hex.len() / 8,
                });
            }
            let vector = decode_hex_f32(hex).map_err(|m| parse_err(&locator, m))?;
            set.insert(key, vector)?;
        }
        if !rest.is_empty() {
            return Err(parse_err(
                format!("line {}", line_no + 1),
                "trailing data after last entry",
            ));
        }
        Ok(set)
    }

    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        let text = fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_embv1(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), EmbeddingError> {
        fs::write(path, self.to_embv1()).map_err(|source| EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn next_line<'a>(
    rest: &mut &'a str,
    line_no: &mut usize,
) -> Result<(usize, &'a str), EmbeddingError> {
    *line_no += 1;
    let (line, tail) = rest
        .split_once('\n')
        .ok_or_else(|| parse_err(format!("line {line_no}"), "unexpected end of file"))?;
    *rest = tail;
    Ok((*line_no, line))
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingSet, EmbeddingError> {
    EmbeddingSet::load(path)
}

const HEX: &[u8; 16] = b"0123456789abcdef";

pub(crate) fn push_hex(out: &mut String, bytes: &[u8]) {
    for b in bytes {
        out.push(HEX[(b >> 4) as usize] as char);
        out.push(HEX[(b & 0xf) as usize] as char);
    }
}

fn hex_nibble(c: u8) -> Result<u8, String> {
    match c {
        b'0'..=b'9' => Ok(c - b'0'),
        b'a'..=b'f' => Ok(c - b'a' + 10),
        _ => Err(format!("invalid lowercase hex character {:?}", c as char)),
    }
}

pub(crate) fn decode_hex_bytes(hex: &str) -> Result<Vec<u8>, String> {
    let bytes = hex.as_bytes();
    if !bytes.len().is_multiple_of(2) {
        return Err("odd number of hex characters".into());
    }
    bytes
        .chunks_exact(2)
        .map(|pair| Ok(hex_nibble(pair[0])? << 4 | hex_nibble(pair[1])?))
        .collect()
}

fn decode_hex_f32(hex: &str) -> Result<Vec<f32>, String> {
    let bytes = decode_hex_bytes(hex)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Lowercased tokens: maximal runs of alphanumeric characters or `_`.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn token_hash(token: &str, seed: u64) -> u64 {
    // FNV-1a over the seed and token bytes, then a splitmix64 finalizer. The
    // hash must be stable across platforms and toolchains, which rules out
    // std's DefaultHasher.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(token.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

/// Deterministic bag-of-tokens embedding with unit L2 norm.
///
/// Each token adds ±1 to one bucket chosen by a seeded hash. Text with no
/// tokens maps to the first basis vector.
pub fn hash_embed(text: &str, dim: usize, seed: u64) -> Vec<f32> {
    assert!(dim >= 8, "hash_embed needs dim >= 8");
    let mut acc = vec![0f64; dim];
    for token in tokenize(text) {
        let h = token_hash(&token, seed);
        let bucket = (h % dim as u64) as usize;
        acc[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        // No tokens, or token signs cancelled exactly.
        let mut unit = vec![0f32; dim];
        unit[0] = 1.0;
        return unit;
    }
    acc.iter().map(|v| (v / norm) as f32).collect()
}

/// Embed every key's text with [`hash_embed`], keeping key order.
pub fn hash_embedding_set<'a, I>(
    keys: I,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingSet, EmbeddingError>
where
    I: IntoIterator<Item = &'a EmbeddingKey>,
{
    let mut set = EmbeddingSet::new(dim);
    for key in keys {
        let encoded = key.encode();
        if set.get_encoded(&encoded).is_none() {
            set.insert(encoded, hash_embed(&key.text, dim, seed))?;
        }
    }
    Ok(set)
}
