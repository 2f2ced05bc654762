//! Shared domain types: locales, phoneme sequences, corpus entries and
//! vocabularies.

mod corpus;
mod vocab;

pub use corpus::{format_entry, parse_entry_line, read_corpus, write_corpus};
pub use vocab::{build_vocab, Vocab, BOS_ID, BOS_TOKEN, EOS_ID, EOS_TOKEN, PAD_ID, PAD_TOKEN, UNK_ID, UNK_TOKEN, WB_TOKEN};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoreError {
    #[error("invalid locale `{input}`: {reason}")]
    InvalidLocale { input: String, reason: String },
    #[error("invalid phoneme token `{0}`")]
    InvalidPhonemeToken(String),
    #[error("invalid phoneme sequence: {0}")]
    InvalidPhonemeSeq(String),
    #[error("invalid corpus entry: {0}")]
    InvalidEntry(String),
    #[error("corpus line {line}: {reason}")]
    CorpusLine { line: usize, reason: String },
    #[error("empty corpus")]
    EmptyCorpus,
}

/// A W3C-style language identification tag: `language-region` (both
/// two-letter, e.g. `en-gb`) or a bare three-letter code (e.g. `arb`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Locale {
    language: String,
    region: Option<String>,
}

impl Locale {
    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn region(&self) -> Option<&str> {
        self.region.as_deref()
    }

    /// The source-vocabulary tag spelling, e.g. `<en-gb>`.
    pub fn tag(&self) -> String {
        format!("<{self}>")
    }
}

fn check_segment(input: &str, seg: &str, name: &str, len: usize) -> Result<String, CoreError> {
    if seg.len() != len || !seg.bytes().all(|b| b.is_ascii_alphabetic()) {
        return Err(CoreError::InvalidLocale {
            input: input.to_string(),
            reason: format!("{name} segment `{seg}` must be {len} ASCII letters"),
        });
    }
    Ok(seg.to_ascii_lowercase())
}

/// Parse a locale code. Case-insensitive; the canonical form is lowercase.
pub fn parse_locale(s: &str) -> Result<Locale, CoreError> {
    let trimmed = s.trim();
    if trimmed.is_empty() {
        return Err(CoreError::InvalidLocale {
            input: s.to_string(),
            reason: "empty".to_string(),
        });
    }
    match trimmed.split_once('-') {
        Some((lang, region)) => Ok(Locale {
            language: check_segment(s, lang, "language", 2)?,
            region: Some(check_segment(s, region, "region", 2)?),
        }),
        None => Ok(Locale {
            language: check_segment(s, trimmed, "bare language", 3)?,
            region: None,
        }),
    }
}

impl FromStr for Locale {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_locale(s)
    }
}

impl TryFrom<String> for Locale {
    type Error = CoreError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        parse_locale(&s)
    }
}

impl From<Locale> for String {
    fn from(l: Locale) -> String {
        l.to_string()
    }
}

impl fmt::Display for Locale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.region {
            Some(region) => write!(f, "{}-{}", self.language, region),
            None => write!(f, "{}", self.language),
        }
    }
}

/// One X-SAMPA phoneme, with any stress marker or diacritic fused into the
/// same token string (`"a` and `a` are distinct vocabulary entries).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PhonemeToken(String);

/// Token spellings reserved for the codec; a phoneme may not collide with them.
pub const RESERVED_TOKENS: [&str; 5] = [PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN, WB_TOKEN];

impl PhonemeToken {
    pub fn new(s: impl Into<String>) -> Result<Self, CoreError> {
        let s = s.into();
        if s.is_empty() || s.chars().any(char::is_whitespace) || RESERVED_TOKENS.contains(&s.as_str()) {
            return Err(CoreError::InvalidPhonemeToken(s));
        }
        Ok(PhonemeToken(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PhonemeToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One element of a target sequence: a phoneme or the word-boundary marker.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Seg {
    Phoneme(PhonemeToken),
    Boundary,
}

impl Seg {
    pub fn phoneme(s: &str) -> Result<Self, CoreError> {
        Ok(Seg::Phoneme(PhonemeToken::new(s)?))
    }

    /// The token-string spelling used in data files and vocabularies.
    pub fn as_str(&self) -> &str {
        match self {
            Seg::Phoneme(p) => p.as_str(),
            Seg::Boundary => WB_TOKEN,
        }
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, Seg::Boundary)
    }
}

/// An ordered phoneme sequence with word-boundary markers.
///
/// A structurally valid sequence has no leading, trailing or doubled
/// boundaries. Model output that violates this is kept and flagged
/// `degenerate` instead of being rejected, so it can still be scored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhonemeSeq {
    segs: Vec<Seg>,
    degenerate: bool,
}

fn structure_violation(segs: &[Seg]) -> Option<String> {
    if segs.is_empty() {
        return Some("empty sequence".to_string());
    }
    if segs.first().map(Seg::is_boundary) == Some(true) {
        return Some("leading word boundary".to_string());
    }
    if segs.last().map(Seg::is_boundary) == Some(true) {
        return Some("trailing word boundary".to_string());
    }
    if segs.windows(2).any(|w| w[0].is_boundary() && w[1].is_boundary()) {
        return Some("adjacent word boundaries".to_string());
    }
    None
}

impl PhonemeSeq {
    /// Build a sequence, rejecting structural violations.
    pub fn new(segs: Vec<Seg>) -> Result<Self, CoreError> {
        match structure_violation(&segs) {
            Some(reason) => Err(CoreError::InvalidPhonemeSeq(reason)),
            None => Ok(PhonemeSeq { segs, degenerate: false }),
        }
    }

    /// Build a sequence from model output, flagging structural violations
    /// instead of erroring.
    pub fn lenient(segs: Vec<Seg>) -> Self {
        let degenerate = structure_violation(&segs).is_some();
        PhonemeSeq { segs, degenerate }
    }

    pub fn segs(&self) -> &[Seg] {
        &self.segs
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn len(&self) -> usize {
        self.segs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segs.is_empty()
    }

    /// Number of word spans delimited by boundary markers.
    pub fn span_count(&self) -> usize {
        if self.segs.is_empty() {
            return 0;
        }
        self.segs.iter().filter(|s| s.is_boundary()).count() + 1
    }

    /// Token-string view (boundaries spelled `<wb>`), as scored by metrics.
    pub fn token_strings(&self) -> Vec<&str> {
        self.segs.iter().map(Seg::as_str).collect()
    }
}

impl fmt::Display for PhonemeSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.segs.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(seg.as_str())?;
        }
        Ok(())
    }
}

/// Parse a space-separated X-SAMPA string with `<wb>` word boundaries.
/// Tokens are kept verbatim; only the structure is validated.
pub fn parse_xsampa(s: &str) -> Result<PhonemeSeq, CoreError> {
    let mut segs = Vec::new();
    for tok in s.split_whitespace() {
        if tok == WB_TOKEN {
            segs.push(Seg::Boundary);
        } else {
            segs.push(Seg::phoneme(tok)?);
        }
    }
    PhonemeSeq::new(segs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntryKind {
    Word,
    Sentence,
}

impl EntryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EntryKind::Word => "w",
            EntryKind::Sentence => "s",
        }
    }

    pub fn parse(s: &str) -> Result<Self, CoreError> {
        match s {
            "w" => Ok(EntryKind::Word),
            "s" => Ok(EntryKind::Sentence),
            other => Err(CoreError::InvalidEntry(format!("unknown kind `{other}`"))),
        }
    }
}

/// Well-known annotation tags.
pub mod tags {
    /// Homograph occurrence at a word index.
    pub const HOMOGRAPH: &str = "hg";
    /// Word whose pronunciation was changed by a post-lexical rule.
    pub const PLR: &str = "plr";
    /// Polyphonic character at a character index.
    pub const POLYPHONE: &str = "poly";
    /// Entry-level: the text carries diacritics.
    pub const DIACRITIZED: &str = "diac";
    /// Entry-level: diacritics were stripped from the text.
    pub const UNDIACRITIZED: &str = "undiac";
}

/// A word- or character-index tag attached to an entry, e.g. `2:hg`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    pub index: usize,
    pub tag: String,
}

impl Annotation {
    pub fn new(index: usize, tag: impl Into<String>) -> Self {
        Annotation { index, tag: tag.into() }
    }
}

impl fmt::Display for Annotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.index, self.tag)
    }
}

/// One `<text, pronunciation>` pair at word or sentence granularity.
#[derive(Debug, Clone, PartialEq)]
pub struct PronunciationEntry {
    pub locale: Locale,
    pub kind: EntryKind,
    pub text: String,
    pub pron: PhonemeSeq,
    pub lemma: Option<String>,
    pub annotations: Vec<Annotation>,
}

impl PronunciationEntry {
    /// Validate and construct an entry.
    ///
    /// Word entries may not contain spaces in the text or boundaries in the
    /// pronunciation. For sentence entries whose text contains spaces, the
    /// space-split word count must equal the pronunciation's span count;
    /// space-less sentence text (logographic scripts) is exempt because its
    /// boundary tokens delimit character groups, not space-separated words.
    pub fn new(
        locale: Locale,
        kind: EntryKind,
        text: impl Into<String>,
        pron: PhonemeSeq,
        lemma: Option<String>,
        annotations: Vec<Annotation>,
    ) -> Result<Self, CoreError> {
        let text = text.into();
        if text.is_empty() {
            return Err(CoreError::InvalidEntry("empty text".to_string()));
        }
        match kind {
            EntryKind::Word => {
                if text.contains(' ') {
                    return Err(CoreError::InvalidEntry(format!("word text `{text}` contains a space")));
                }
                if pron.segs().iter().any(Seg::is_boundary) {
                    return Err(CoreError::InvalidEntry(format!(
                        "word entry `{text}` has a word boundary in its pronunciation"
                    )));
                }
                if lemma.as_deref() == Some("") {
                    return Err(CoreError::InvalidEntry(format!("word entry `{text}` has an empty lemma")));
                }
            }
            EntryKind::Sentence => {
                if text.contains(' ') {
                    let words = text.split(' ').filter(|w| !w.is_empty()).count();
                    let spans = pron.span_count();
                    if words != spans {
                        return Err(CoreError::InvalidEntry(format!(
                            "sentence `{text}` has {words} words but {spans} pronunciation spans"
                        )));
                    }
                }
                if lemma.is_some() {
                    return Err(CoreError::InvalidEntry("sentence entries carry no lemma".to_string()));
                }
            }
        }
        Ok(PronunciationEntry { locale, kind, text, pron, lemma, annotations })
    }

    /// Indices annotated with `tag`, in annotation order.
    pub fn indices_with_tag(&self, tag: &str) -> Vec<usize> {
        self.annotations.iter().filter(|a| a.tag == tag).map(|a| a.index).collect()
    }

    pub fn has_tag(&self, tag: &str) -> bool {
        self.annotations.iter().any(|a| a.tag == tag)
    }
}
