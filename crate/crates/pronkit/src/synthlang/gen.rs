//! Seeded corpus generators: lexica with exact lemmas, sentence corpora with
//! guaranteed phenomenon incidence, Zipf-like frequency tables and
//! diacritized/undiacritized pairing.

use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::core::{tags, Annotation, EntryKind, PhonemeSeq, PronunciationEntry, Seg};
use crate::splitter::FrequencyTable;

use super::{is_polyphone, oracle_pronounce, oracle_word, LangSpec, SynthError, Trigger};

/// Incidence and pool controls for sentence generation.
#[derive(Debug, Clone)]
pub struct GenOptions {
    /// Words available for sentence composition.
    pub pool_words: usize,
    /// Minimum fraction of sentences containing a homograph (trigger and
    /// non-trigger contexts alternate, so the two stay balanced).
    pub homograph_incidence: f64,
    /// Minimum fraction of sentences containing a liaison context.
    pub liaison_incidence: f64,
    /// Minimum fraction of sentences containing a polyphonic character.
    pub polyphone_incidence: f64,
}

impl GenOptions {
    /// Defaults matched to what the spec actually defines.
    pub fn for_spec(spec: &LangSpec) -> Self {
        let has_polyphones = spec.polyphones.values().any(|r| r.len() > 1);
        GenOptions {
            pool_words: 90,
            homograph_incidence: if spec.homographs.is_empty() { 0.0 } else { 0.4 },
            liaison_incidence: if spec.liaisons.is_empty() { 0.0 } else { 0.5 },
            polyphone_incidence: if has_polyphones { 0.6 } else { 0.0 },
        }
    }
}

fn gen_stem(spec: &LangSpec, rng: &mut ChaCha20Rng) -> String {
    let shape = &spec.shape;
    let syllables = rng.gen_range(shape.min_syllables..=shape.max_syllables);
    let vowels: Vec<char> = spec.vowel_graphemes.iter().copied().collect();
    let mut word = String::new();
    for syllable in 0..syllables {
        let keep_onset = syllable > 0 || !rng.gen_bool(shape.onset_drop_prob);
        if keep_onset && !spec.consonant_graphemes.is_empty() {
            word.push(spec.consonant_graphemes[rng.gen_range(0..spec.consonant_graphemes.len())]);
        }
        let mut vowel = vowels[rng.gen_range(0..vowels.len())];
        if shape.mark_prob > 0.0 && rng.gen_bool(shape.mark_prob) {
            // Invert the diacritics map: pick the marked form of this vowel.
            if let Some((marked, _)) = spec.diacritics.iter().find(|(_, base)| **base == vowel) {
                vowel = *marked;
            }
        }
        word.push(vowel);
    }
    if !shape.coda_set.is_empty() && rng.gen_bool(shape.coda_prob) {
        word.push(shape.coda_set[rng.gen_range(0..shape.coda_set.len())]);
    }
    word
}

fn gen_distinct_words(
    spec: &LangSpec,
    n: usize,
    rng: &mut ChaCha20Rng,
    with_lemmas: bool,
) -> Result<Vec<(String, String)>, SynthError> {
    let mut seen = HashSet::new();
    let mut words = Vec::with_capacity(n);
    let mut attempts = 0usize;
    let budget = 200 * n + 10_000;
    while words.len() < n {
        attempts += 1;
        if attempts > budget {
            return Err(SynthError::DistinctExhausted { requested: n, generated: words.len() });
        }
        let stem = gen_stem(spec, rng);
        let word = if with_lemmas && !spec.suffixes.is_empty() && rng.gen_bool(0.55) {
            format!("{stem}{}", spec.suffixes[rng.gen_range(0..spec.suffixes.len())])
        } else {
            stem.clone()
        };
        // Homograph pronunciations are spec-defined; keep generated words
        // from colliding with them.
        if spec.homographs.contains_key(&word) {
            continue;
        }
        if seen.insert(word.clone()) {
            words.push((word, stem));
        }
    }
    Ok(words)
}

/// Generate `n` distinct word entries. Lemmas are exact by construction:
/// words sharing a generated stem share a lemma.
pub fn gen_lexicon(spec: &LangSpec, n: usize, seed: u64) -> Result<Vec<PronunciationEntry>, SynthError> {
    if !spec.spaced {
        return Err(SynthError::SentenceOnly);
    }
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let words = gen_distinct_words(spec, n, &mut rng, true)?;
    let mut entries = Vec::with_capacity(n);
    for (word, stem) in words {
        let tokens = oracle_word(spec, &word)?;
        let segs: Vec<Seg> = tokens.into_iter().map(Seg::Phoneme).collect();
        let pron = PhonemeSeq::new(segs)
            .map_err(|e| SynthError::BadSpec(spec.locale.to_string(), format!("word `{word}` -> {e}")))?;
        let entry = PronunciationEntry::new(spec.locale.clone(), EntryKind::Word, word, pron, Some(stem), vec![])
            .map_err(|e| SynthError::BadSpec(spec.locale.to_string(), e.to_string()))?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Zipf-like frequency table over `words`: rank order is seeded, counts fall
/// off polynomially and stay pairwise distinct.
pub fn gen_frequencies(words: &[String], seed: u64) -> FrequencyTable {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..words.len()).collect();
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut table = FrequencyTable::default();
    let scale = 1_000_000.0f64;
    for (rank, &idx) in order.iter().enumerate() {
        let zipf = scale / (rank as f64 + 1.0).powf(1.1);
        // Offset by reverse rank so every count is distinct.
        let count = zipf as u64 + (words.len() - rank) as u64;
        table.insert(words[idx].clone(), count);
    }
    table
}

struct SentencePlan {
    homograph: Option<bool>,
    liaison: bool,
}

/// Generate `n` sentence entries with annotations from the oracle.
///
/// Designated sentences guarantee the configured minimum incidence of
/// homograph, liaison and polyphone contexts; phenomena may also occur
/// naturally on top of that. Homograph insertions alternate between trigger
/// and non-trigger contexts.
pub fn gen_sentences(
    spec: &LangSpec,
    n: usize,
    words_per_sentence: (usize, usize),
    opts: &GenOptions,
    seed: u64,
) -> Result<Vec<PronunciationEntry>, SynthError> {
    spec.validate()?;
    let (min_words, max_words) = words_per_sentence;
    if min_words == 0 || max_words < min_words {
        return Err(SynthError::Unsatisfiable(format!(
            "bad words_per_sentence range {min_words}..={max_words}"
        )));
    }
    if opts.homograph_incidence > 0.0 {
        if spec.homographs.is_empty() {
            return Err(SynthError::Unsatisfiable("homograph incidence requested but the spec has none".to_string()));
        }
        if min_words < 2 {
            return Err(SynthError::Unsatisfiable("homograph contexts need at least 2 words per sentence".to_string()));
        }
    }
    if opts.liaison_incidence > 0.0 {
        if spec.liaisons.is_empty() {
            return Err(SynthError::Unsatisfiable("liaison incidence requested but the spec has none".to_string()));
        }
        if min_words < 2 {
            return Err(SynthError::Unsatisfiable("liaison contexts need at least 2 words per sentence".to_string()));
        }
    }
    if opts.homograph_incidence > 0.0 && opts.liaison_incidence > 0.0 && min_words < 4 {
        return Err(SynthError::Unsatisfiable(
            "combined homograph and liaison insertion needs at least 4 words per sentence".to_string(),
        ));
    }
    if opts.polyphone_incidence > 0.0 && spec.polyphones.values().all(|r| r.len() <= 1) {
        return Err(SynthError::Unsatisfiable("polyphone incidence requested but the spec has none".to_string()));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    if spec.spaced {
        gen_spaced_sentences(spec, n, (min_words, max_words), opts, &mut rng)
    } else {
        gen_logographic_sentences(spec, n, (min_words, max_words), opts, &mut rng)
    }
}

fn gen_spaced_sentences(
    spec: &LangSpec,
    n: usize,
    (min_words, max_words): (usize, usize),
    opts: &GenOptions,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<PronunciationEntry>, SynthError> {
    let mut pool: Vec<String> = gen_distinct_words(spec, opts.pool_words, rng, false)?
        .into_iter()
        .map(|(word, _)| word)
        .collect();
    // Trigger words must exist in the pool so non-homograph sentences can use
    // them too.
    let mut trigger_words: BTreeSet<String> = BTreeSet::new();
    for homograph in spec.homographs.values() {
        let (Trigger::NextWordIn(set) | Trigger::PrevWordIn(set)) = &homograph.trigger;
        trigger_words.extend(set.iter().cloned());
    }
    for word in &trigger_words {
        if !pool.contains(word) {
            pool.push(word.clone());
        }
    }

    let latent_final: Vec<String> = pool
        .iter()
        .filter(|w| {
            w.chars()
                .last()
                .is_some_and(|c| spec.liaisons.iter().any(|r| r.final_grapheme == c))
        })
        .cloned()
        .collect();
    let vowel_initial: Vec<String> = pool
        .iter()
        .filter(|w| w.chars().next().is_some_and(|c| spec.vowel_graphemes.contains(&c)))
        .cloned()
        .collect();
    if opts.liaison_incidence > 0.0 && (latent_final.is_empty() || vowel_initial.is_empty()) {
        return Err(SynthError::Unsatisfiable(
            "pool has no latent-final or no vowel-initial words for liaison contexts".to_string(),
        ));
    }

    let homograph_words: Vec<&String> = spec.homographs.keys().collect();
    let homograph_quota = (opts.homograph_incidence * n as f64).ceil() as usize;
    let liaison_quota = (opts.liaison_incidence * n as f64).ceil() as usize;
    let mut trigger_toggle = false;

    let mut entries = Vec::with_capacity(n);
    for index in 0..n {
        let plan = SentencePlan {
            homograph: if index < homograph_quota {
                trigger_toggle = !trigger_toggle;
                Some(trigger_toggle)
            } else {
                None
            },
            liaison: index >= n - liaison_quota.min(n),
        };
        let len = rng.gen_range(min_words..=max_words);
        let mut words: Vec<String> = (0..len).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect();

        if let Some(trigger_on) = plan.homograph {
            let homograph_word = homograph_words[rng.gen_range(0..homograph_words.len())];
            let homograph = &spec.homographs[homograph_word];
            // When a liaison pair will occupy the last two positions, keep
            // the homograph context clear of them.
            let reserved = if plan.liaison { 2 } else { 0 };
            match &homograph.trigger {
                Trigger::NextWordIn(set) => {
                    let position = rng.gen_range(0..len - 1 - reserved);
                    words[position] = homograph_word.clone();
                    words[position + 1] = pick_context_word(set, &pool, trigger_on, rng)?;
                }
                Trigger::PrevWordIn(set) => {
                    let position = rng.gen_range(1..len - reserved);
                    words[position] = homograph_word.clone();
                    words[position - 1] = pick_context_word(set, &pool, trigger_on, rng)?;
                }
            }
        }
        if plan.liaison {
            // Insert at the tail so a homograph insertion at the head is not
            // disturbed (combined insertion requires len >= 4).
            let position = len - 2;
            words[position] = latent_final[rng.gen_range(0..latent_final.len())].clone();
            words[position + 1] = vowel_initial[rng.gen_range(0..vowel_initial.len())].clone();
        }

        let text = words.join(" ");
        let (pron, annotations) = oracle_pronounce(spec, &text)?;
        let entry = PronunciationEntry::new(spec.locale.clone(), EntryKind::Sentence, text, pron, None, annotations)
            .map_err(|e| SynthError::BadSpec(spec.locale.to_string(), e.to_string()))?;
        entries.push(entry);
    }

    verify_incidence(&entries, tags::HOMOGRAPH, homograph_quota)?;
    verify_incidence(&entries, tags::PLR, liaison_quota)?;
    Ok(entries)
}

fn pick_context_word(
    trigger_set: &BTreeSet<String>,
    pool: &[String],
    trigger_on: bool,
    rng: &mut ChaCha20Rng,
) -> Result<String, SynthError> {
    if trigger_on {
        let choices: Vec<&String> = trigger_set.iter().collect();
        Ok(choices[rng.gen_range(0..choices.len())].clone())
    } else {
        let choices: Vec<&String> = pool.iter().filter(|w| !trigger_set.contains(*w)).collect();
        if choices.is_empty() {
            return Err(SynthError::Unsatisfiable("no non-trigger context words available".to_string()));
        }
        Ok(choices[rng.gen_range(0..choices.len())].clone())
    }
}

fn gen_logographic_sentences(
    spec: &LangSpec,
    n: usize,
    (min_chars, max_chars): (usize, usize),
    opts: &GenOptions,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<PronunciationEntry>, SynthError> {
    let polyphonic: Vec<char> = spec.alphabet.iter().copied().filter(|&c| is_polyphone(spec, c)).collect();
    let polyphone_quota = (opts.polyphone_incidence * n as f64).ceil() as usize;
    let mut entries = Vec::with_capacity(n);
    for index in 0..n {
        let len = rng.gen_range(min_chars..=max_chars);
        let mut chars: Vec<char> = (0..len).map(|_| spec.alphabet[rng.gen_range(0..spec.alphabet.len())]).collect();
        if index < polyphone_quota && !chars.iter().any(|c| polyphonic.contains(c)) {
            let position = rng.gen_range(0..len);
            chars[position] = polyphonic[rng.gen_range(0..polyphonic.len())];
        }
        let text: String = chars.into_iter().collect();
        let (pron, annotations) = oracle_pronounce(spec, &text)?;
        let entry = PronunciationEntry::new(spec.locale.clone(), EntryKind::Sentence, text, pron, None, annotations)
            .map_err(|e| SynthError::BadSpec(spec.locale.to_string(), e.to_string()))?;
        entries.push(entry);
    }
    verify_incidence(&entries, tags::POLYPHONE, polyphone_quota)?;
    Ok(entries)
}

fn verify_incidence(entries: &[PronunciationEntry], tag: &str, quota: usize) -> Result<(), SynthError> {
    let have = entries.iter().filter(|e| e.has_tag(tag)).count();
    if have < quota {
        return Err(SynthError::Unsatisfiable(format!(
            "only {have} of {quota} required sentences carry `{tag}` annotations"
        )));
    }
    Ok(())
}

/// Expand entries into diacritized/undiacritized pairs sharing one target
/// pronunciation: the original text tagged `diac` and the stripped text
/// tagged `undiac`, giving the 50/50 mixed corpus.
pub fn diacritization_pairs(spec: &LangSpec, entries: &[PronunciationEntry]) -> Result<Vec<PronunciationEntry>, SynthError> {
    if spec.diacritics.is_empty() {
        return Err(SynthError::Unsatisfiable("spec has no diacritics map".to_string()));
    }
    let mut out = Vec::with_capacity(entries.len() * 2);
    for entry in entries {
        let mut diacritized = entry.clone();
        diacritized.annotations.push(Annotation::new(0, tags::DIACRITIZED));
        let stripped = super::remove_diacritics(spec, &entry.text);
        let mut undiacritized = entry.clone();
        undiacritized.text = stripped;
        undiacritized.annotations.push(Annotation::new(0, tags::UNDIACRITIZED));
        out.push(diacritized);
        out.push(undiacritized);
    }
    Ok(out)
}
