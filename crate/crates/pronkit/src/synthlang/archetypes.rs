//! The five shipped language archetypes. They share a common phoneme core so
//! multilingual transfer is possible, and each one exhibits one of the
//! context-dependent phenomena the evaluation suite targets.

use std::collections::{BTreeMap, BTreeSet};

use crate::core::{parse_locale, PhonemeToken};

use super::{Ctx, Homograph, LangSpec, LiaisonRule, PolyCtx, PolyReading, RewriteRule, StressRule, Trigger, WordShape};

fn tokens(s: &str) -> Vec<PhonemeToken> {
    s.split_whitespace().map(|t| PhonemeToken::new(t).expect("valid phoneme")).collect()
}

fn rule(pattern: &str, left: Ctx, right: Ctx, output: &str) -> RewriteRule {
    RewriteRule { pattern: pattern.to_string(), left, right, output: tokens(output) }
}

fn identity_rules(letters: &str) -> Vec<RewriteRule> {
    letters.chars().map(|c| rule(&c.to_string(), Ctx::Any, Ctx::Any, &c.to_string())).collect()
}

fn charset(s: &str) -> BTreeSet<char> {
    s.chars().collect()
}

fn wordset(words: &[&str]) -> BTreeSet<String> {
    words.iter().map(|w| w.to_string()).collect()
}

const CORE_VOWELS: &str = "aeiou";

/// Plain alphabetic language with near 1:1 rules plus one digraph (`sh`) and
/// first-vowel stress. The baseline G2P archetype.
pub fn alphabetic_regular() -> LangSpec {
    let mut rules = vec![rule("sh", Ctx::Any, Ctx::Any, "S")];
    rules.extend(identity_rules("aeioupbtdkgmnslrfh"));
    LangSpec {
        locale: parse_locale("zr-aa").unwrap(),
        spaced: true,
        alphabet: "aeioupbtdkgmnslrfh".chars().collect(),
        vowel_graphemes: charset(CORE_VOWELS),
        consonant_graphemes: "pbtdkgmnslrfh".chars().collect(),
        rules,
        stress: StressRule::FirstSyllablePrimary,
        homographs: BTreeMap::new(),
        liaisons: Vec::new(),
        polyphones: BTreeMap::new(),
        diacritics: BTreeMap::new(),
        suffixes: vec!["ta".to_string(), "si".to_string(), "ko".to_string()],
        shape: WordShape { coda_prob: 0.25, coda_set: "snr".chars().collect(), ..WordShape::default() },
    }
}

/// Homograph-rich language: three words with context-selected alternate
/// pronunciations, two triggered by the following word, one by the preceding.
pub fn homograph_rich() -> LangSpec {
    let mut homographs = BTreeMap::new();
    homographs.insert(
        "rede".to_string(),
        Homograph {
            default: tokens("\"r e d e"),
            alternate: tokens("\"r i d e"),
            trigger: Trigger::NextWordIn(wordset(&["ki", "tu"])),
        },
    );
    homographs.insert(
        "basa".to_string(),
        Homograph {
            default: tokens("\"b a s a"),
            alternate: tokens("\"b o s a"),
            trigger: Trigger::NextWordIn(wordset(&["pa", "mo"])),
        },
    );
    homographs.insert(
        "tolo".to_string(),
        Homograph {
            default: tokens("\"t o l o"),
            alternate: tokens("\"t u l u"),
            trigger: Trigger::PrevWordIn(wordset(&["su"])),
        },
    );
    LangSpec {
        locale: parse_locale("zh-aa").unwrap(),
        spaced: true,
        alphabet: "aeioupbtdkgmnslrf".chars().collect(),
        vowel_graphemes: charset(CORE_VOWELS),
        consonant_graphemes: "pbtdkgmnslrf".chars().collect(),
        rules: identity_rules("aeioupbtdkgmnslrf"),
        stress: StressRule::FirstSyllablePrimary,
        homographs,
        liaisons: Vec::new(),
        polyphones: BTreeMap::new(),
        diacritics: BTreeMap::new(),
        suffixes: vec!["ta".to_string(), "si".to_string()],
        shape: WordShape { coda_prob: 0.15, coda_set: "nr".chars().collect(), ..WordShape::default() },
    }
}

/// Liaison language: word-final `t`/`s` are silent in isolation but surface
/// as `t`/`z` before a vowel-initial word.
pub fn liaison() -> LangSpec {
    let mut rules = vec![
        rule("t", Ctx::Any, Ctx::Edge, ""),
        rule("s", Ctx::Any, Ctx::Edge, ""),
    ];
    rules.extend(identity_rules("aeioupbtdkgmnslrf"));
    LangSpec {
        locale: parse_locale("zl-aa").unwrap(),
        spaced: true,
        alphabet: "aeioupbtdkgmnslrf".chars().collect(),
        vowel_graphemes: charset(CORE_VOWELS),
        consonant_graphemes: "pbtdkgmnslrf".chars().collect(),
        rules,
        stress: StressRule::FirstSyllablePrimary,
        homographs: BTreeMap::new(),
        liaisons: vec![
            LiaisonRule { final_grapheme: 't', latent: PhonemeToken::new("t").unwrap() },
            LiaisonRule { final_grapheme: 's', latent: PhonemeToken::new("z").unwrap() },
        ],
        polyphones: BTreeMap::new(),
        diacritics: BTreeMap::new(),
        suffixes: vec!["ta".to_string(), "ko".to_string()],
        shape: WordShape {
            coda_prob: 0.5,
            onset_drop_prob: 0.35,
            coda_set: "tsnr".chars().collect(),
            ..WordShape::default()
        },
    }
}

/// Space-less logographic language: every character reads as a syllable and
/// four characters are polyphonic, selecting their reading from the adjacent
/// character.
pub fn logographic() -> LangSpec {
    let readings: [(char, &str); 14] = [
        ('α', "t a"),
        ('β', "k i"),
        ('γ', "p o"),
        ('δ', "d a"),
        ('ε', "m e"),
        ('ζ', "s u"),
        ('η', "l o"),
        ('θ', "t o"),
        ('ι', "n i"),
        ('κ', "k e"),
        ('λ', "r u"),
        ('μ', "b o"),
        ('ν', "n o"),
        ('ξ', "g u"),
    ];
    let mut polyphones: BTreeMap<char, Vec<PolyReading>> = BTreeMap::new();
    for (ch, default) in readings {
        polyphones.insert(ch, vec![PolyReading { when: PolyCtx::Default, output: tokens(default) }]);
    }
    let contextual: [(char, PolyCtx, &str); 4] = [
        ('δ', PolyCtx::NextCharIn(charset("γκ")), "t i"),
        ('θ', PolyCtx::PrevCharIn(charset("αε")), "s e"),
        ('ν', PolyCtx::NextCharIn(charset("αμ")), "m u"),
        ('ξ', PolyCtx::NextCharIn(charset("ιη")), "k u"),
    ];
    for (ch, when, output) in contextual {
        polyphones.get_mut(&ch).unwrap().insert(0, PolyReading { when, output: tokens(output) });
    }
    LangSpec {
        locale: parse_locale("zp-aa").unwrap(),
        spaced: false,
        alphabet: readings.iter().map(|(c, _)| *c).collect(),
        vowel_graphemes: BTreeSet::new(),
        consonant_graphemes: Vec::new(),
        rules: Vec::new(),
        stress: StressRule::None,
        homographs: BTreeMap::new(),
        liaisons: Vec::new(),
        polyphones,
        diacritics: BTreeMap::new(),
        suffixes: Vec::new(),
        shape: WordShape::default(),
    }
}

/// Diacritic-dropping language (bare three-letter locale): marked vowels read
/// as long phonemes, and stripping the marks leaves text whose pronunciation
/// the model must infer.
pub fn diacritic_dropping() -> LangSpec {
    let mut rules = Vec::new();
    for (marked, long) in [('á', "a:"), ('é', "e:"), ('í', "i:"), ('ú', "u:")] {
        rules.push(rule(&marked.to_string(), Ctx::Any, Ctx::Any, long));
    }
    rules.extend(identity_rules("aeiupbtdkmnslr"));
    LangSpec {
        locale: parse_locale("zrb").unwrap(),
        spaced: true,
        alphabet: "aeiuáéíúpbtdkmnslr".chars().collect(),
        vowel_graphemes: charset("aeiuáéíú"),
        consonant_graphemes: "pbtdkmnslr".chars().collect(),
        rules,
        stress: StressRule::FirstSyllablePrimary,
        homographs: BTreeMap::new(),
        liaisons: Vec::new(),
        polyphones: BTreeMap::new(),
        diacritics: [('á', 'a'), ('é', 'e'), ('í', 'i'), ('ú', 'u')].into_iter().collect(),
        suffixes: vec!["ta".to_string(), "na".to_string()],
        shape: WordShape { mark_prob: 0.35, coda_prob: 0.2, coda_set: "nr".chars().collect(), ..WordShape::default() },
    }
}

/// All shipped archetypes in a stable order.
pub fn shipped_specs() -> Vec<LangSpec> {
    vec![
        alphabetic_regular(),
        homograph_rich(),
        liaison(),
        logographic(),
        diacritic_dropping(),
    ]
}
