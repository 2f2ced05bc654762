//! Source and target vocabularies with reserved special tokens.

use std::collections::{BTreeSet, HashMap};

use super::{CoreError, PronunciationEntry, Seg};

pub const PAD_TOKEN: &str = "<pad>";
pub const BOS_TOKEN: &str = "<bos>";
pub const EOS_TOKEN: &str = "<eos>";
pub const UNK_TOKEN: &str = "<unk>";
/// Word-boundary token, both as a target segment and as the source-side
/// replacement for the space character.
pub const WB_TOKEN: &str = "<wb>";

pub const PAD_ID: u32 = 0;
pub const BOS_ID: u32 = 1;
pub const EOS_ID: u32 = 2;
pub const UNK_ID: u32 = 3;

const SPECIALS: [&str; 4] = [PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN];

/// A bijective token-string ↔ id table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenTable {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
}

impl TokenTable {
    fn from_tokens(tokens: Vec<String>) -> Self {
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        TokenTable { tokens, ids }
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Paired source/target vocabularies.
///
/// Both tables reserve ids 0..=3 for `<pad>`, `<bos>`, `<eos>`, `<unk>`.
/// The target table always contains `<wb>`; the source table contains it
/// whenever the corpus has sentence text with spaces (spaces are encoded as
/// the boundary token).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    pub source: TokenTable,
    pub target: TokenTable,
}

impl Vocab {
    pub fn from_tables(source_tokens: Vec<String>, target_tokens: Vec<String>) -> Self {
        Vocab {
            source: TokenTable::from_tokens(source_tokens),
            target: TokenTable::from_tokens(target_tokens),
        }
    }
}

/// Build the vocabulary a training corpus defines.
///
/// Insertion order is deterministic: specials, then (source) `<wb>` if any
/// text contains a space, locale tags and characters in sorted order; for the
/// target, specials, `<wb>`, then phoneme tokens in sorted order. Identical
/// corpora therefore yield identical vocabularies regardless of entry order.
pub fn build_vocab(corpus: &[PronunciationEntry]) -> Result<Vocab, CoreError> {
    if corpus.is_empty() {
        return Err(CoreError::EmptyCorpus);
    }

    let mut tags = BTreeSet::new();
    let mut chars = BTreeSet::new();
    let mut phonemes = BTreeSet::new();
    let mut has_space = false;
    for entry in corpus {
        tags.insert(entry.locale.tag());
        for c in entry.text.chars() {
            if c == ' ' {
                has_space = true;
            } else {
                chars.insert(c.to_string());
            }
        }
        for seg in entry.pron.segs() {
            if let Seg::Phoneme(p) = seg {
                phonemes.insert(p.as_str().to_string());
            }
        }
    }

    let mut source: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
    if has_space {
        source.push(WB_TOKEN.to_string());
    }
    source.extend(tags);
    source.extend(chars);

    let mut target: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
    target.push(WB_TOKEN.to_string());
    target.extend(phonemes);

    Ok(Vocab::from_tables(source, target))
}
