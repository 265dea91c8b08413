//! Distributional similarity for task-oriented conversations.
//!
//! A conversation is summarized by three finite distributions in embedding
//! space: its (slot-masked) utterances, its active intents, and its filled
//! slots. Two conversations are compared by solving one 1-Wasserstein
//! optimal-transport problem per component and taking a weighted sum of the
//! three transport costs:
//!
//! ```text
//! taskdiff(C1, C2) = γ_I · W1(I1, I2) + γ_U · W1(U1, U2) + γ_S · W1(S1, S2)
//! ```
//!
//! with default weights `γ_I = 2`, `γ_U = 1`, `γ_S = 1`. Zero means the
//! conversations are indistinguishable; larger is more different.
//!
//! The crate is organized as a pipeline:
//!
//! | Module | Role |
//! |--------|------|
//! | [`corpus`] | conversation model, ontology, canonical and SGD loaders |
//! | [`masking`] | `<slot_name>` substitution of slot values |
//! | [`embedding`] | `EMBV1` embedding files and a hashing test embedder |
//! | [`distributions`] | per-component distributions of a conversation |
//! | [`ot`] | Euclidean ground costs, exact and entropic W1 solvers |
//! | [`metric`] | the composed distance, baselines, distance matrices |
//! | [`eval`] | k-NN, k-medoids + MDS, ablation, reorder perturbation |
//!
//! The book under `book/` walks through each stage; its code listings are
//! compiled as doctests of this crate.
//!
//! ```
//! use taskdiff::corpus::{Conversation, SlotFilling, Turn};
//! use taskdiff::distributions::{build_profile_partial, required_keys, ProfileOptions};
//! use taskdiff::embedding::hash_embedding_set;
//! use taskdiff::metric::{taskdiff_distance, MetricConfig};
//!
//! let a = Conversation::new("a", "Travel", vec![
//!     Turn::user("Book a flight to Paris")
//!         .with_intents(["BookFlight"])
//!         .with_fillings(vec![SlotFilling::new("arrival_city", "Paris")]),
//!     Turn::user("Also a hotel please").with_intents(["BookHotel"]),
//! ]);
//! // Same tasks, other order, other city.
//! let b = Conversation::new("b", "Travel", vec![
//!     Turn::user("Also a hotel please").with_intents(["BookHotel"]),
//!     Turn::user("Book a flight to Rome")
//!         .with_intents(["BookFlight"])
//!         .with_fillings(vec![SlotFilling::new("arrival_city", "Rome")]),
//! ]);
//!
//! let options = ProfileOptions::default();
//! let keys: Vec<_> = [&a, &b].iter().flat_map(|c| required_keys(c, options)).collect();
//! let embeddings = hash_embedding_set(&keys, 64, 0).unwrap();
//!
//! let pa = build_profile_partial(&a, &embeddings, options).unwrap();
//! let pb = build_profile_partial(&b, &embeddings, options).unwrap();
//! let d = taskdiff_distance(&pa, &pb, &MetricConfig::default()).unwrap();
//! assert_eq!(d.total, 0.0);
//! ```

pub mod corpus;
pub mod distributions;
pub mod embedding;
pub mod eval;
pub mod masking;
pub mod metric;
pub mod ot;
pub mod synthetic;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/conversations.md")]
    mod conversations {}
    #[doc = include_str!("../../../book/src/masking.md")]
    mod masking {}
    #[doc = include_str!("../../../book/src/distributions.md")]
    mod distributions {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/metric.md")]
    mod metric {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/file-formats.md")]
    mod file_formats {}
}
