//! Replace slot values in utterances with `<slot_name>` placeholders.
//!
//! Span-bearing fillings are applied first, in order of their start offset;
//! a span overlapping an earlier-starting one is dropped and reported. Fillings
//! without a span are then located by case-insensitive substring search,
//! longest value first, taking the first occurrence that does not overlap a
//! region already claimed.
//!
//! All ranges are character offsets (Unicode scalar values), end exclusive.

use serde::Serialize;

use crate::corpus::{Conversation, SlotFilling, Turn};

/// A mask that was applied. `range` indexes the *masked* text and covers the
/// placeholder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppliedMask {
    pub slot_name: String,
    pub original_value: String,
    pub range: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnappliedReason {
    /// The span overlaps an earlier-starting span.
    OverlappingSpan,
    /// The value does not occur in any unclaimed region of the utterance.
    NotFound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnappliedMask {
    pub slot_name: String,
    pub value: String,
    pub reason: UnappliedReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MaskedUtterance {
    pub text: String,
    pub masks_applied: Vec<AppliedMask>,
    pub unapplied: Vec<UnappliedMask>,
}

pub fn placeholder(slot_name: &str) -> String {
    format!("<{slot_name}>")
}

struct Claim<'a> {
    start: usize,
    end: usize,
    filling: &'a SlotFilling,
}

fn overlaps(claims: &[Claim<'_>], start: usize, end: usize) -> bool {
    claims.iter().any(|c| start < c.end && c.start < end)
}

fn chars_eq_ignore_case(a: char, b: char) -> bool {
    a == b || a.to_lowercase().eq(b.to_lowercase())
}

/// Start offsets of case-insensitive matches of `needle` in `hay`, ascending.
fn find_all<'a>(hay: &'a [char], needle: &[char]) -> impl Iterator<Item = usize> + 'a {
    let needle = needle.to_vec();
    let last = (hay.len() + 1).saturating_sub(needle.len());
    (0..last).filter(move |&s| {
        !needle.is_empty()
            && hay[s..s + needle.len()]
                .iter()
                .zip(&needle)
                .all(|(&a, &b)| chars_eq_ignore_case(a, b))
    })
}

pub fn mask_turn(turn: &Turn) -> MaskedUtterance {
    mask_text(&turn.utterance, &turn.slot_fillings)
}

pub fn mask_text(utterance: &str, fillings: &[SlotFilling]) -> MaskedUtterance {
    let chars: Vec<char> = utterance.chars().collect();
    let mut claims: Vec<Claim<'_>> = Vec::new();
    let mut unapplied = Vec::new();

    let mut spanned: Vec<(usize, &SlotFilling)> = fillings
        .iter()
        .enumerate()
        .filter(|(_, f)| f.span.is_some())
        .collect();
    // Earlier start wins; equal starts keep annotation order.
    spanned.sort_by_key(|&(idx, f)| (f.span.unwrap().0, idx));
    for (_, filling) in spanned {
        let (start, end) = filling.span.unwrap();
        if end > chars.len() || start >= end || overlaps(&claims, start, end) {
            unapplied.push(UnappliedMask {
                slot_name: filling.slot_name.clone(),
                value: filling.value.clone(),
                reason: UnappliedReason::OverlappingSpan,
            });
            continue;
        }
        claims.push(Claim {
            start,
            end,
            filling,
        });
    }

    let mut unspanned: Vec<(usize, &SlotFilling)> = fillings
        .iter()
        .enumerate()
        .filter(|(_, f)| f.span.is_none())
        .collect();
    // Longest value first; ties keep annotation order.
    unspanned.sort_by_key(|&(idx, f)| (std::cmp::Reverse(f.value.chars().count()), idx));
    for (_, filling) in unspanned {
        let needle: Vec<char> = filling.value.chars().collect();
        let found = find_all(&chars, &needle).find(|&s| !overlaps(&claims, s, s + needle.len()));
        match found {
            Some(start) => claims.push(Claim {
                start,
                end: start + needle.len(),
                filling,
            }),
            None => unapplied.push(UnappliedMask {
                slot_name: filling.slot_name.clone(),
                value: filling.value.clone(),
                reason: UnappliedReason::NotFound,
            }),
        }
    }

    claims.sort_by_key(|c| c.start);
    let mut text = String::with_capacity(utterance.len());
    let mut masks_applied = Vec::with_capacity(claims.len());
    let mut cursor = 0;
    let mut out_len = 0;
    for claim in &claims {
        let before: String = chars[cursor..claim.start].iter().collect();
        out_len += claim.start - cursor;
        text.push_str(&before);
        let ph = placeholder(&claim.filling.slot_name);
        let ph_len = ph.chars().count();
        text.push_str(&ph);
        masks_applied.push(AppliedMask {
            slot_name: claim.filling.slot_name.clone(),
            original_value: chars[claim.start..claim.end].iter().collect(),
            range: (out_len, out_len + ph_len),
        });
        out_len += ph_len;
        cursor = claim.end;
    }
    text.extend(&chars[cursor..]);

    MaskedUtterance {
        text,
        masks_applied,
        unapplied,
    }
}

/// One masked utterance per turn, in turn order.
pub fn mask_conversation(conversation: &Conversation) -> Vec<MaskedUtterance> {
    conversation.turns.iter().map(mask_turn).collect()
}

/// The text used for a turn's utterance embedding.
pub fn utterance_text(turn: &Turn, masking: bool) -> String {
    if masking {
        mask_turn(turn).text
    } else {
        turn.utterance.clone()
    }
}
