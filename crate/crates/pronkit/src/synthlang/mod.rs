//! Deterministic rule-based synthetic languages with oracle front-ends.
//!
//! Each [`LangSpec`] defines a small language whose gold pronunciations are
//! computed by rule, standing in for human-annotated corpora. The shipped
//! archetypes cover plain G2P, homographs, liaison-style post-lexical rules,
//! a space-less logographic script with polyphonic characters, and a
//! diacritic-dropping script.

mod archetypes;
mod file;
mod gen;
#[cfg(test)]
mod tests;

pub use archetypes::{alphabetic_regular, diacritic_dropping, homograph_rich, liaison, logographic, shipped_specs};
pub use file::{parse_spec, read_spec, serialize_spec, write_spec};
pub use gen::{diacritization_pairs, gen_frequencies, gen_lexicon, gen_sentences, GenOptions};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::core::{tags, Annotation, Locale, PhonemeSeq, PhonemeToken, Seg};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("character `{ch}` in `{word}` is outside the alphabet")]
    OutsideAlphabet { ch: char, word: String },
    #[error("no rewrite rule matches `{word}` at position {position}")]
    NoRule { word: String, position: usize },
    #[error("spec `{0}` is invalid: {1}")]
    BadSpec(String, String),
    #[error("cannot satisfy generation constraints: {0}")]
    Unsatisfiable(String),
    #[error("could not generate {requested} distinct words (managed {generated})")]
    DistinctExhausted { requested: usize, generated: usize },
    #[error("logographic specs have no word-level lexicon; generate sentences instead")]
    SentenceOnly,
    #[error("spec file: {0}")]
    BadFile(String),
}

/// Context condition on the character adjacent to a rule match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ctx {
    Any,
    Vowel,
    Consonant,
    /// Word edge (start for left contexts, end for right contexts).
    Edge,
    OneOf(BTreeSet<char>),
}

impl Ctx {
    fn matches(&self, neighbor: Option<char>, vowels: &BTreeSet<char>) -> bool {
        match self {
            Ctx::Any => true,
            Ctx::Edge => neighbor.is_none(),
            Ctx::Vowel => neighbor.is_some_and(|c| vowels.contains(&c)),
            Ctx::Consonant => neighbor.is_some_and(|c| !vowels.contains(&c)),
            Ctx::OneOf(set) => neighbor.is_some_and(|c| set.contains(&c)),
        }
    }
}

/// One ordered, context-sensitive rewrite rule. An empty output silences the
/// matched graphemes (latent consonants).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub pattern: String,
    pub left: Ctx,
    pub right: Ctx,
    pub output: Vec<PhonemeToken>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StressRule {
    None,
    /// Fuse a primary stress marker onto the first phoneme of the word
    /// (X-SAMPA writes stress before the stressed syllable).
    FirstSyllablePrimary,
}

/// Which neighboring word selects a homograph's alternate pronunciation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Trigger {
    NextWordIn(BTreeSet<String>),
    PrevWordIn(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homograph {
    pub default: Vec<PhonemeToken>,
    pub alternate: Vec<PhonemeToken>,
    pub trigger: Trigger,
}

/// Word-final latent consonant that surfaces before a vowel-initial word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiaisonRule {
    pub final_grapheme: char,
    pub latent: PhonemeToken,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolyCtx {
    NextCharIn(BTreeSet<char>),
    PrevCharIn(BTreeSet<char>),
    Default,
}

impl PolyCtx {
    fn matches(&self, prev: Option<char>, next: Option<char>) -> bool {
        match self {
            PolyCtx::Default => true,
            PolyCtx::NextCharIn(set) => next.is_some_and(|c| set.contains(&c)),
            PolyCtx::PrevCharIn(set) => prev.is_some_and(|c| set.contains(&c)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyReading {
    pub when: PolyCtx,
    pub output: Vec<PhonemeToken>,
}

/// Shape parameters for the seeded word grammar.
#[derive(Debug, Clone, PartialEq)]
pub struct WordShape {
    pub min_syllables: usize,
    pub max_syllables: usize,
    /// Probability of a word-final coda consonant.
    pub coda_prob: f64,
    /// Probability that the first syllable has no onset (vowel-initial word).
    pub onset_drop_prob: f64,
    /// Probability of marking a vowel, for specs with diacritics.
    pub mark_prob: f64,
    pub coda_set: Vec<char>,
}

impl Default for WordShape {
    fn default() -> Self {
        WordShape {
            min_syllables: 1,
            max_syllables: 3,
            coda_prob: 0.2,
            onset_drop_prob: 0.2,
            mark_prob: 0.0,
            coda_set: Vec::new(),
        }
    }
}

/// A complete synthetic language definition.
#[derive(Debug, Clone, PartialEq)]
pub struct LangSpec {
    pub locale: Locale,
    /// False for logographic scripts: sentence text has no spaces and the
    /// target uses a boundary token per character group.
    pub spaced: bool,
    pub alphabet: Vec<char>,
    pub vowel_graphemes: BTreeSet<char>,
    pub consonant_graphemes: Vec<char>,
    pub rules: Vec<RewriteRule>,
    pub stress: StressRule,
    pub homographs: BTreeMap<String, Homograph>,
    pub liaisons: Vec<LiaisonRule>,
    pub polyphones: BTreeMap<char, Vec<PolyReading>>,
    /// Marked grapheme -> bare grapheme (e.g. á -> a).
    pub diacritics: BTreeMap<char, char>,
    /// Closed inflection suffix set; lemma = stem before the suffix.
    pub suffixes: Vec<String>,
    pub shape: WordShape,
}

impl LangSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |reason: String| SynthError::BadSpec(self.locale.to_string(), reason);
        if self.alphabet.is_empty() {
            return Err(bad("empty alphabet".to_string()));
        }
        let alphabet: BTreeSet<char> = self.alphabet.iter().copied().collect();
        for (word, homograph) in &self.homographs {
            if homograph.default == homograph.alternate {
                return Err(bad(format!("homograph `{word}` has identical pronunciations")));
            }
            if word.chars().any(|c| !alphabet.contains(&c)) {
                return Err(bad(format!("homograph `{word}` uses characters outside the alphabet")));
            }
        }
        for ch in &self.alphabet {
            let in_rules = self.rules.iter().any(|r| r.pattern.contains(*ch));
            let in_polyphones = self.polyphones.contains_key(ch);
            if !in_rules && !in_polyphones {
                return Err(bad(format!("character `{ch}` has no rule or reading")));
            }
        }
        if !self.spaced && self.alphabet.iter().any(|c| !self.polyphones.contains_key(c)) {
            return Err(bad("logographic specs need a reading for every character".to_string()));
        }
        for reading in self.polyphones.values().flatten() {
            if reading.output.is_empty() {
                return Err(bad("polyphone readings may not be empty".to_string()));
            }
        }
        Ok(())
    }

    /// All phoneme token strings this spec can emit, stressed forms included.
    pub fn phoneme_inventory(&self) -> BTreeSet<String> {
        let mut inventory = BTreeSet::new();
        fn extend(inventory: &mut BTreeSet<String>, tokens: &[PhonemeToken]) {
            for token in tokens {
                inventory.insert(token.as_str().to_string());
            }
        }
        for rule in &self.rules {
            extend(&mut inventory, &rule.output);
        }
        for homograph in self.homographs.values() {
            extend(&mut inventory, &homograph.default);
            extend(&mut inventory, &homograph.alternate);
        }
        for liaison in &self.liaisons {
            inventory.insert(liaison.latent.as_str().to_string());
        }
        for readings in self.polyphones.values() {
            for reading in readings {
                extend(&mut inventory, &reading.output);
            }
        }
        if self.stress == StressRule::FirstSyllablePrimary {
            // Stress fuses onto a word's first token, so any token that can
            // open a rule output has a stressed variant.
            let stressed: Vec<String> = self
                .rules
                .iter()
                .filter_map(|r| r.output.first())
                .map(|t| format!("\"{}", t.as_str()))
                .collect();
            inventory.extend(stressed);
        }
        inventory
    }

    fn is_alphabet_char(&self, c: char) -> bool {
        self.alphabet.contains(&c)
    }
}

/// Apply the ordered rewrite rules to one word, leftmost-longest: at each
/// position the longest matching pattern wins, ties broken by rule order.
fn apply_rules(spec: &LangSpec, word: &[char], word_str: &str) -> Result<Vec<PhonemeToken>, SynthError> {
    let mut output = Vec::new();
    let mut position = 0;
    while position < word.len() {
        let mut best: Option<&RewriteRule> = None;
        for rule in &spec.rules {
            let pattern: Vec<char> = rule.pattern.chars().collect();
            if position + pattern.len() > word.len() || word[position..position + pattern.len()] != pattern[..] {
                continue;
            }
            let left = position.checked_sub(1).map(|i| word[i]);
            let right = word.get(position + pattern.len()).copied();
            if !rule.left.matches(left, &spec.vowel_graphemes) || !rule.right.matches(right, &spec.vowel_graphemes) {
                continue;
            }
            if best.map_or(true, |b| pattern.len() > b.pattern.chars().count()) {
                best = Some(rule);
            }
        }
        match best {
            Some(rule) => {
                output.extend(rule.output.iter().cloned());
                position += rule.pattern.chars().count();
            }
            None => {
                return Err(SynthError::NoRule { word: word_str.to_string(), position });
            }
        }
    }
    Ok(output)
}

fn apply_stress(spec: &LangSpec, mut tokens: Vec<PhonemeToken>) -> Vec<PhonemeToken> {
    if spec.stress == StressRule::FirstSyllablePrimary {
        if let Some(first) = tokens.first_mut() {
            let stressed = format!("\"{first}");
            *first = PhonemeToken::new(stressed).expect("stressed token is valid");
        }
    }
    tokens
}

/// Pronounce a single word without sentence context (no liaison, homographs
/// take their default reading).
pub fn oracle_word(spec: &LangSpec, word: &str) -> Result<Vec<PhonemeToken>, SynthError> {
    for ch in word.chars() {
        if !spec.is_alphabet_char(ch) {
            return Err(SynthError::OutsideAlphabet { ch, word: word.to_string() });
        }
    }
    if let Some(homograph) = spec.homographs.get(word) {
        return Ok(homograph.default.clone());
    }
    let chars: Vec<char> = word.chars().collect();
    Ok(apply_stress(spec, apply_rules(spec, &chars, word)?))
}

fn char_reading(spec: &LangSpec, prev: Option<char>, ch: char, next: Option<char>) -> Result<Vec<PhonemeToken>, SynthError> {
    if let Some(readings) = spec.polyphones.get(&ch) {
        for reading in readings {
            if reading.when.matches(prev, next) {
                return Ok(reading.output.clone());
            }
        }
    }
    apply_rules(spec, &[ch], &ch.to_string())
}

/// A character is polyphonic if it has more than one reading.
pub fn is_polyphone(spec: &LangSpec, ch: char) -> bool {
    spec.polyphones.get(&ch).is_some_and(|r| r.len() > 1)
}

/// The oracle front-end: gold pronunciation plus annotations for `text`.
///
/// Spaced specs pronounce per word, apply homograph overrides when their
/// trigger context holds and surface latent liaison consonants before
/// vowel-initial words. Space-less specs pronounce per character with a
/// boundary token between character groups.
pub fn oracle_pronounce(spec: &LangSpec, text: &str) -> Result<(PhonemeSeq, Vec<Annotation>), SynthError> {
    if spec.spaced {
        oracle_spaced(spec, text)
    } else {
        oracle_logographic(spec, text)
    }
}

fn oracle_spaced(spec: &LangSpec, text: &str) -> Result<(PhonemeSeq, Vec<Annotation>), SynthError> {
    let words: Vec<&str> = text.split(' ').filter(|w| !w.is_empty()).collect();
    if words.is_empty() {
        return Err(SynthError::Unsatisfiable("empty text".to_string()));
    }
    let mut annotations = Vec::new();
    let mut spans: Vec<Vec<PhonemeToken>> = Vec::with_capacity(words.len());

    for (index, word) in words.iter().enumerate() {
        for ch in word.chars() {
            if !spec.is_alphabet_char(ch) {
                return Err(SynthError::OutsideAlphabet { ch, word: word.to_string() });
            }
        }
        let tokens = match spec.homographs.get(*word) {
            Some(homograph) => {
                annotations.push(Annotation::new(index, tags::HOMOGRAPH));
                let fires = match &homograph.trigger {
                    Trigger::NextWordIn(set) => words.get(index + 1).is_some_and(|w| set.contains(*w)),
                    Trigger::PrevWordIn(set) => index.checked_sub(1).is_some_and(|i| set.contains(words[i])),
                };
                if fires {
                    homograph.alternate.clone()
                } else {
                    homograph.default.clone()
                }
            }
            None => {
                let chars: Vec<char> = word.chars().collect();
                apply_stress(spec, apply_rules(spec, &chars, word)?)
            }
        };
        spans.push(tokens);
    }

    // Liaison: a latent word-final consonant surfaces on the preceding word's
    // span when the following word begins with a vowel grapheme.
    for index in 0..words.len().saturating_sub(1) {
        let last = words[index].chars().last().expect("nonempty word");
        let next_first = words[index + 1].chars().next().expect("nonempty word");
        if !spec.vowel_graphemes.contains(&next_first) {
            continue;
        }
        if let Some(rule) = spec.liaisons.iter().find(|r| r.final_grapheme == last) {
            spans[index].push(rule.latent.clone());
            annotations.push(Annotation::new(index, tags::PLR));
        }
    }

    let mut segs = Vec::new();
    for (i, span) in spans.iter().enumerate() {
        if i > 0 {
            segs.push(Seg::Boundary);
        }
        segs.extend(span.iter().cloned().map(Seg::Phoneme));
    }
    annotations.sort_by(|a, b| (a.index, &a.tag).cmp(&(b.index, &b.tag)));
    let seq = PhonemeSeq::new(segs)
        .map_err(|e| SynthError::BadSpec(spec.locale.to_string(), format!("oracle produced `{text}` -> {e}")))?;
    Ok((seq, annotations))
}

fn oracle_logographic(spec: &LangSpec, text: &str) -> Result<(PhonemeSeq, Vec<Annotation>), SynthError> {
    let chars: Vec<char> = text.chars().collect();
    if chars.is_empty() {
        return Err(SynthError::Unsatisfiable("empty text".to_string()));
    }
    let mut annotations = Vec::new();
    let mut segs = Vec::new();
    for (index, &ch) in chars.iter().enumerate() {
        if !spec.is_alphabet_char(ch) {
            return Err(SynthError::OutsideAlphabet { ch, word: text.to_string() });
        }
        let prev = index.checked_sub(1).map(|i| chars[i]);
        let next = chars.get(index + 1).copied();
        let reading = char_reading(spec, prev, ch, next)?;
        if is_polyphone(spec, ch) {
            annotations.push(Annotation::new(index, tags::POLYPHONE));
        }
        if index > 0 {
            segs.push(Seg::Boundary);
        }
        segs.extend(reading.into_iter().map(Seg::Phoneme));
    }
    let seq = PhonemeSeq::new(segs)
        .map_err(|e| SynthError::BadSpec(spec.locale.to_string(), format!("oracle produced `{text}` -> {e}")))?;
    Ok((seq, annotations))
}

/// Strip removable diacritic marks from `text`. Text without marks is a
/// fixed point.
pub fn remove_diacritics(spec: &LangSpec, text: &str) -> String {
    text.chars().map(|c| spec.diacritics.get(&c).copied().unwrap_or(c)).collect()
}
