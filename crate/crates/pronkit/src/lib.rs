//! # pronkit
//!
//! A multilingual pronunciation front-end toolkit: corpus handling and
//! encoding for character-to-phoneme transduction, lemma-grouped dataset
//! splitting, a from-scratch transformer encoder-decoder with training and
//! decoding, the full task evaluation suite (PER/WER/SER, homographs,
//! polyphones, post-lexical rules, diacritization), and deterministic
//! synthetic oracle languages to exercise all of it end to end.

pub mod codec;
pub mod core;
pub mod eval;
pub mod metrics;
pub mod model;
pub mod splitter;
pub mod synthlang;
