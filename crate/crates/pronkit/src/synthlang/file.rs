//! Text serialization for language specs.
//!
//! A spec file is a header of `key value` lines followed by sections:
//!
//! ```text
//! locale zr-aa
//! spaced true
//! alphabet a e i o u p t
//! vowels a e i o u
//! consonants p t
//! suffixes ta si
//! shape syllables=1..3 coda=0.25 onset-drop=0.2 mark=0.0
//! coda-set s n r
//!
//! [rules]            # pattern | left _ right | output phonemes (empty = silent)
//! sh | any _ any | S
//! t | any _ edge |
//!
//! [stress]           # none | first-syllable-primary
//! first-syllable-primary
//!
//! [homographs]       # word | default | alternate | next:w1,w2 or prev:w1
//! rede | r "e d e | r "i d e | next:ki,tu
//!
//! [liaisons]         # final grapheme | latent phoneme
//! t | t
//!
//! [polyphones]       # char | ctx = reading | ... | default = reading
//! δ | next:γκ = t i | default = d a
//!
//! [diacritics]       # marked = bare
//! á = a
//! ```
//!
//! Contexts are `any`, `vowel`, `consonant`, `edge` or `set:<chars>`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::core::{parse_locale, PhonemeToken};

use super::{
    Ctx, Homograph, LangSpec, LiaisonRule, PolyCtx, PolyReading, RewriteRule, StressRule, SynthError, Trigger,
    WordShape,
};

fn ctx_to_string(ctx: &Ctx) -> String {
    match ctx {
        Ctx::Any => "any".to_string(),
        Ctx::Vowel => "vowel".to_string(),
        Ctx::Consonant => "consonant".to_string(),
        Ctx::Edge => "edge".to_string(),
        Ctx::OneOf(set) => format!("set:{}", set.iter().collect::<String>()),
    }
}

fn parse_ctx(s: &str) -> Result<Ctx, SynthError> {
    match s {
        "any" => Ok(Ctx::Any),
        "vowel" => Ok(Ctx::Vowel),
        "consonant" => Ok(Ctx::Consonant),
        "edge" => Ok(Ctx::Edge),
        other => match other.strip_prefix("set:") {
            Some(chars) if !chars.is_empty() => Ok(Ctx::OneOf(chars.chars().collect())),
            _ => Err(SynthError::BadFile(format!("unknown context `{other}`"))),
        },
    }
}

fn tokens_to_string(tokens: &[PhonemeToken]) -> String {
    tokens.iter().map(PhonemeToken::as_str).collect::<Vec<_>>().join(" ")
}

fn parse_tokens(s: &str) -> Result<Vec<PhonemeToken>, SynthError> {
    s.split_whitespace()
        .map(|t| PhonemeToken::new(t).map_err(|e| SynthError::BadFile(e.to_string())))
        .collect()
}

pub fn serialize_spec(spec: &LangSpec) -> String {
    let mut out = String::new();
    let join_chars = |chars: &mut dyn Iterator<Item = &char>| {
        chars.map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
    };
    writeln!(out, "locale {}", spec.locale).unwrap();
    writeln!(out, "spaced {}", spec.spaced).unwrap();
    writeln!(out, "alphabet {}", join_chars(&mut spec.alphabet.iter())).unwrap();
    writeln!(out, "vowels {}", join_chars(&mut spec.vowel_graphemes.iter())).unwrap();
    writeln!(out, "consonants {}", join_chars(&mut spec.consonant_graphemes.iter())).unwrap();
    writeln!(out, "suffixes {}", spec.suffixes.join(" ")).unwrap();
    writeln!(
        out,
        "shape syllables={}..{} coda={} onset-drop={} mark={}",
        spec.shape.min_syllables, spec.shape.max_syllables, spec.shape.coda_prob, spec.shape.onset_drop_prob,
        spec.shape.mark_prob
    )
    .unwrap();
    writeln!(out, "coda-set {}", join_chars(&mut spec.shape.coda_set.iter())).unwrap();

    writeln!(out, "\n[rules]").unwrap();
    for rule in &spec.rules {
        writeln!(
            out,
            "{} | {} _ {} | {}",
            rule.pattern,
            ctx_to_string(&rule.left),
            ctx_to_string(&rule.right),
            tokens_to_string(&rule.output)
        )
        .unwrap();
    }

    writeln!(out, "\n[stress]").unwrap();
    writeln!(
        out,
        "{}",
        match spec.stress {
            StressRule::None => "none",
            StressRule::FirstSyllablePrimary => "first-syllable-primary",
        }
    )
    .unwrap();

    writeln!(out, "\n[homographs]").unwrap();
    for (word, homograph) in &spec.homographs {
        let trigger = match &homograph.trigger {
            Trigger::NextWordIn(set) => format!("next:{}", set.iter().cloned().collect::<Vec<_>>().join(",")),
            Trigger::PrevWordIn(set) => format!("prev:{}", set.iter().cloned().collect::<Vec<_>>().join(",")),
        };
        writeln!(
            out,
            "{word} | {} | {} | {trigger}",
            tokens_to_string(&homograph.default),
            tokens_to_string(&homograph.alternate)
        )
        .unwrap();
    }

    writeln!(out, "\n[liaisons]").unwrap();
    for liaison in &spec.liaisons {
        writeln!(out, "{} | {}", liaison.final_grapheme, liaison.latent).unwrap();
    }

    writeln!(out, "\n[polyphones]").unwrap();
    for (ch, readings) in &spec.polyphones {
        let parts: Vec<String> = readings
            .iter()
            .map(|r| {
                let when = match &r.when {
                    PolyCtx::Default => "default".to_string(),
                    PolyCtx::NextCharIn(set) => format!("next:{}", set.iter().collect::<String>()),
                    PolyCtx::PrevCharIn(set) => format!("prev:{}", set.iter().collect::<String>()),
                };
                format!("{when} = {}", tokens_to_string(&r.output))
            })
            .collect();
        writeln!(out, "{ch} | {}", parts.join(" | ")).unwrap();
    }

    writeln!(out, "\n[diacritics]").unwrap();
    for (marked, bare) in &spec.diacritics {
        writeln!(out, "{marked} = {bare}").unwrap();
    }
    out
}

fn single_char(s: &str) -> Result<char, SynthError> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(SynthError::BadFile(format!("expected a single character, got `{s}`"))),
    }
}

pub fn parse_spec(contents: &str) -> Result<LangSpec, SynthError> {
    let bad = |msg: String| SynthError::BadFile(msg);
    let mut locale = None;
    let mut spaced = true;
    let mut alphabet = Vec::new();
    let mut vowel_graphemes = BTreeSet::new();
    let mut consonant_graphemes = Vec::new();
    let mut suffixes = Vec::new();
    let mut shape = WordShape::default();
    let mut rules = Vec::new();
    let mut stress = StressRule::None;
    let mut homographs = std::collections::BTreeMap::new();
    let mut liaisons = Vec::new();
    let mut polyphones: std::collections::BTreeMap<char, Vec<PolyReading>> = std::collections::BTreeMap::new();
    let mut diacritics = std::collections::BTreeMap::new();

    let mut section = String::new();
    for (line_no, raw) in contents.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.to_string();
            continue;
        }
        let fail = |msg: &str| bad(format!("line {}: {msg}: `{line}`", line_no + 1));
        if section.is_empty() {
            let (key, value) = line.split_once(' ').unwrap_or((line, ""));
            match key {
                "locale" => locale = Some(parse_locale(value).map_err(|e| bad(e.to_string()))?),
                "spaced" => spaced = value.trim() == "true",
                "alphabet" => alphabet = value.split_whitespace().map(single_char).collect::<Result<_, _>>()?,
                "vowels" => vowel_graphemes = value.split_whitespace().map(single_char).collect::<Result<_, _>>()?,
                "consonants" => {
                    consonant_graphemes = value.split_whitespace().map(single_char).collect::<Result<_, _>>()?
                }
                "suffixes" => suffixes = value.split_whitespace().map(str::to_string).collect(),
                "coda-set" => shape.coda_set = value.split_whitespace().map(single_char).collect::<Result<_, _>>()?,
                "shape" => {
                    for field in value.split_whitespace() {
                        let (k, v) = field.split_once('=').ok_or_else(|| fail("bad shape field"))?;
                        match k {
                            "syllables" => {
                                let (lo, hi) = v.split_once("..").ok_or_else(|| fail("bad syllable range"))?;
                                shape.min_syllables = lo.parse().map_err(|_| fail("bad syllable range"))?;
                                shape.max_syllables = hi.parse().map_err(|_| fail("bad syllable range"))?;
                            }
                            "coda" => shape.coda_prob = v.parse().map_err(|_| fail("bad coda prob"))?,
                            "onset-drop" => shape.onset_drop_prob = v.parse().map_err(|_| fail("bad onset prob"))?,
                            "mark" => shape.mark_prob = v.parse().map_err(|_| fail("bad mark prob"))?,
                            _ => return Err(fail("unknown shape field")),
                        }
                    }
                }
                _ => return Err(fail("unknown header key")),
            }
            continue;
        }
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        match section.as_str() {
            "rules" => {
                if fields.len() != 3 {
                    return Err(fail("rules need `pattern | left _ right | output`"));
                }
                let (left, right) = fields[1].split_once('_').ok_or_else(|| fail("missing `_` in contexts"))?;
                rules.push(RewriteRule {
                    pattern: fields[0].to_string(),
                    left: parse_ctx(left.trim())?,
                    right: parse_ctx(right.trim())?,
                    output: parse_tokens(fields[2])?,
                });
            }
            "stress" => {
                stress = match fields[0] {
                    "none" => StressRule::None,
                    "first-syllable-primary" => StressRule::FirstSyllablePrimary,
                    _ => return Err(fail("unknown stress rule")),
                }
            }
            "homographs" => {
                if fields.len() != 4 {
                    return Err(fail("homographs need `word | default | alternate | trigger`"));
                }
                let trigger = if let Some(words) = fields[3].strip_prefix("next:") {
                    Trigger::NextWordIn(words.split(',').map(str::to_string).collect())
                } else if let Some(words) = fields[3].strip_prefix("prev:") {
                    Trigger::PrevWordIn(words.split(',').map(str::to_string).collect())
                } else {
                    return Err(fail("trigger must be next:... or prev:..."));
                };
                homographs.insert(
                    fields[0].to_string(),
                    Homograph { default: parse_tokens(fields[1])?, alternate: parse_tokens(fields[2])?, trigger },
                );
            }
            "liaisons" => {
                if fields.len() != 2 {
                    return Err(fail("liaisons need `grapheme | latent`"));
                }
                liaisons.push(LiaisonRule {
                    final_grapheme: single_char(fields[0])?,
                    latent: PhonemeToken::new(fields[1]).map_err(|e| bad(e.to_string()))?,
                });
            }
            "polyphones" => {
                if fields.len() < 2 {
                    return Err(fail("polyphones need `char | ctx = reading | ...`"));
                }
                let ch = single_char(fields[0])?;
                let mut readings = Vec::new();
                for part in &fields[1..] {
                    let (when, reading) = part.split_once('=').ok_or_else(|| fail("missing `=` in reading"))?;
                    let when = match when.trim() {
                        "default" => PolyCtx::Default,
                        other => {
                            if let Some(chars) = other.strip_prefix("next:") {
                                PolyCtx::NextCharIn(chars.chars().collect())
                            } else if let Some(chars) = other.strip_prefix("prev:") {
                                PolyCtx::PrevCharIn(chars.chars().collect())
                            } else {
                                return Err(fail("reading context must be next:/prev:/default"));
                            }
                        }
                    };
                    readings.push(PolyReading { when, output: parse_tokens(reading)? });
                }
                polyphones.insert(ch, readings);
            }
            "diacritics" => {
                let (marked, bare) = line.split_once('=').ok_or_else(|| fail("diacritics need `marked = bare`"))?;
                diacritics.insert(single_char(marked.trim())?, single_char(bare.trim())?);
            }
            other => return Err(bad(format!("unknown section `[{other}]`"))),
        }
    }

    let spec = LangSpec {
        locale: locale.ok_or_else(|| bad("missing `locale` header".to_string()))?,
        spaced,
        alphabet,
        vowel_graphemes,
        consonant_graphemes,
        rules,
        stress,
        homographs,
        liaisons,
        polyphones,
        diacritics,
        suffixes,
        shape,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn read_spec(path: impl AsRef<Path>) -> Result<LangSpec, SynthError> {
    let contents = fs::read_to_string(path.as_ref())
        .map_err(|e| SynthError::BadFile(format!("{}: {e}", path.as_ref().display())))?;
    parse_spec(&contents)
}

pub fn write_spec(path: impl AsRef<Path>, spec: &LangSpec) -> std::io::Result<()> {
    fs::write(path, serialize_spec(spec))
}
