use super::*;
use crate::codec::word_spans;
use crate::core::{tags, EntryKind};

#[test]
fn regular_oracle_applies_rules_and_stress() {
    let spec = alphabetic_regular();
    let (pron, annotations) = oracle_pronounce(&spec, "pata").unwrap();
    assert_eq!(pron.to_string(), "\"p a t a");
    assert!(annotations.is_empty());
}

#[test]
fn regular_oracle_digraph_is_leftmost_longest() {
    let spec = alphabetic_regular();
    let (pron, _) = oracle_pronounce(&spec, "pasha").unwrap();
    assert_eq!(pron.to_string(), "\"p a S a");
}

#[test]
fn oracle_sentence_inserts_boundaries() {
    let spec = alphabetic_regular();
    let (pron, _) = oracle_pronounce(&spec, "pata tosa").unwrap();
    assert_eq!(pron.span_count(), 2);
    assert_eq!(pron.to_string(), "\"p a t a <wb> \"t o s a");
}

#[test]
fn oracle_rejects_outside_alphabet() {
    let spec = alphabetic_regular();
    assert!(matches!(
        oracle_pronounce(&spec, "paxa"),
        Err(SynthError::OutsideAlphabet { ch: 'x', .. })
    ));
}

#[test]
fn homograph_flips_on_trigger_context() {
    let spec = homograph_rich();
    let (with_trigger, annotations) = oracle_pronounce(&spec, "rede ki").unwrap();
    assert_eq!(word_spans(&with_trigger)[0].iter().map(|t| t.as_str()).collect::<Vec<_>>(), ["\"r", "i", "d", "e"]);
    assert_eq!(annotations, vec![crate::core::Annotation::new(0, tags::HOMOGRAPH)]);

    let (without_trigger, _) = oracle_pronounce(&spec, "rede pa").unwrap();
    assert_eq!(word_spans(&without_trigger)[0].iter().map(|t| t.as_str()).collect::<Vec<_>>(), ["\"r", "e", "d", "e"]);
}

#[test]
fn homograph_prev_trigger_works() {
    let spec = homograph_rich();
    let (alt, _) = oracle_pronounce(&spec, "su tolo").unwrap();
    assert_eq!(word_spans(&alt)[1].iter().map(|t| t.as_str()).collect::<Vec<_>>(), ["\"t", "u", "l", "u"]);
    let (default, _) = oracle_pronounce(&spec, "pa tolo").unwrap();
    assert_eq!(word_spans(&default)[1].iter().map(|t| t.as_str()).collect::<Vec<_>>(), ["\"t", "o", "l", "o"]);
}

#[test]
fn liaison_surfaces_before_vowel_only() {
    let spec = liaison();
    // Final `t` is silent in isolation.
    let alone = oracle_word(&spec, "pot").unwrap();
    assert_eq!(alone.iter().map(|t| t.as_str()).collect::<Vec<_>>(), ["\"p", "o"]);

    let (before_vowel, annotations) = oracle_pronounce(&spec, "pot asi").unwrap();
    let spans = word_spans(&before_vowel);
    assert_eq!(spans[0].iter().map(|t| t.as_str()).collect::<Vec<_>>(), ["\"p", "o", "t"]);
    assert_eq!(annotations.iter().filter(|a| a.tag == tags::PLR).map(|a| a.index).collect::<Vec<_>>(), [0]);

    let (before_consonant, annotations) = oracle_pronounce(&spec, "pot kasi").unwrap();
    let spans = word_spans(&before_consonant);
    assert_eq!(spans[0].iter().map(|t| t.as_str()).collect::<Vec<_>>(), ["\"p", "o"]);
    assert!(annotations.is_empty());
}

#[test]
fn plr_affected_words_differ_from_context_free_pronunciation() {
    let spec = liaison();
    let entries = gen_sentences(&spec, 60, (2, 5), &GenOptions::for_spec(&spec), 11).unwrap();
    let mut checked = 0;
    for entry in &entries {
        let words: Vec<&str> = entry.text.split(' ').collect();
        let spans = word_spans(&entry.pron);
        for index in entry.indices_with_tag(tags::PLR) {
            let context_free = oracle_word(&spec, words[index]).unwrap();
            assert_ne!(spans[index], context_free, "plr index {index} in `{}`", entry.text);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn homograph_annotations_are_context_sensitive() {
    let spec = homograph_rich();
    let entries = gen_sentences(&spec, 40, (2, 5), &GenOptions::for_spec(&spec), momentum_seed()).unwrap();
    let mut checked = 0;
    for entry in &entries {
        let words: Vec<String> = entry.text.split(' ').map(str::to_string).collect();
        for index in entry.indices_with_tag(tags::HOMOGRAPH) {
            let homograph = &spec.homographs[&words[index]];
            // Build both context variants around the homograph and check the
            // oracle output flips.
            let (Trigger::NextWordIn(set) | Trigger::PrevWordIn(set)) = &homograph.trigger;
            let trigger_word = set.iter().next().unwrap().clone();
            let neutral = "nolo".to_string();
            assert!(!set.contains(&neutral));
            let neighbor = match &homograph.trigger {
                Trigger::NextWordIn(_) => index + 1,
                Trigger::PrevWordIn(_) => index - 1,
            };
            let mut on = words.clone();
            on[neighbor] = trigger_word;
            let mut off = words.clone();
            off[neighbor] = neutral;
            let (pron_on, _) = oracle_pronounce(&spec, &on.join(" ")).unwrap();
            let (pron_off, _) = oracle_pronounce(&spec, &off.join(" ")).unwrap();
            assert_ne!(word_spans(&pron_on)[index], word_spans(&pron_off)[index]);
            checked += 1;
        }
    }
    assert!(checked > 0);
}

fn momentum_seed() -> u64 {
    7
}

#[test]
fn logographic_reads_per_character() {
    let spec = logographic();
    let (pron, annotations) = oracle_pronounce(&spec, "αβ").unwrap();
    assert_eq!(pron.to_string(), "t a <wb> k i");
    assert!(annotations.is_empty());

    // δ is polyphonic: `t i` before γ/κ, `d a` otherwise.
    let (contextual, annotations) = oracle_pronounce(&spec, "δγ").unwrap();
    assert_eq!(word_spans(&contextual)[0].iter().map(|t| t.as_str()).collect::<Vec<_>>(), ["t", "i"]);
    assert_eq!(annotations, vec![crate::core::Annotation::new(0, tags::POLYPHONE)]);

    let (default, _) = oracle_pronounce(&spec, "δα").unwrap();
    assert_eq!(word_spans(&default)[0].iter().map(|t| t.as_str()).collect::<Vec<_>>(), ["d", "a"]);
}

#[test]
fn oracle_is_deterministic() {
    for spec in shipped_specs() {
        let text = if spec.spaced { "pata tama" } else { "αβγδ" };
        let a = oracle_pronounce(&spec, text).unwrap();
        let b = oracle_pronounce(&spec, text).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn lexicon_is_distinct_consistent_and_seeded() {
    let spec = alphabetic_regular();
    let entries = gen_lexicon(&spec, 500, 3).unwrap();
    assert_eq!(entries.len(), 500);
    let distinct: std::collections::HashSet<&str> = entries.iter().map(|e| e.text.as_str()).collect();
    assert_eq!(distinct.len(), 500);
    for entry in &entries {
        assert_eq!(entry.kind, EntryKind::Word);
        let expected = oracle_word(&spec, &entry.text).unwrap();
        let got: Vec<_> = entry.pron.segs().iter().map(|s| s.as_str().to_string()).collect();
        let expected: Vec<_> = expected.iter().map(|t| t.as_str().to_string()).collect();
        assert_eq!(got, expected, "entry `{}` is not oracle-consistent", entry.text);
    }
    assert_eq!(gen_lexicon(&spec, 500, 3).unwrap(), entries);
    assert_ne!(gen_lexicon(&spec, 500, 4).unwrap(), entries);
}

#[test]
fn lexicon_words_with_shared_stem_share_lemma() {
    let spec = alphabetic_regular();
    let entries = gen_lexicon(&spec, 800, 9).unwrap();
    let mut by_lemma: std::collections::HashMap<&str, Vec<&str>> = std::collections::HashMap::new();
    for entry in &entries {
        by_lemma.entry(entry.lemma.as_deref().unwrap()).or_default().push(&entry.text);
    }
    let multi = by_lemma.values().filter(|members| members.len() > 1).count();
    assert!(multi > 10, "expected many multi-member lemma groups, got {multi}");
    for (lemma, members) in by_lemma {
        for member in members {
            assert!(member.starts_with(lemma), "{member} does not extend its lemma {lemma}");
        }
    }
}

#[test]
fn logographic_lexicon_is_sentence_only() {
    assert_eq!(gen_lexicon(&logographic(), 10, 1), Err(SynthError::SentenceOnly));
}

#[test]
fn sentences_meet_incidence_and_reproduce() {
    let spec = homograph_rich();
    let opts = GenOptions { homograph_incidence: 0.3, ..GenOptions::for_spec(&spec) };
    let entries = gen_sentences(&spec, 500, (2, 6), &opts, 21).unwrap();
    assert_eq!(entries.len(), 500);
    let with_homograph = entries.iter().filter(|e| e.has_tag(tags::HOMOGRAPH)).count();
    assert!(with_homograph >= 150, "only {with_homograph} homograph sentences");
    assert_eq!(gen_sentences(&spec, 500, (2, 6), &opts, 21).unwrap(), entries);
}

#[test]
fn sentence_incidence_unsatisfiable_without_phenomenon() {
    let spec = alphabetic_regular();
    let opts = GenOptions { homograph_incidence: 0.3, ..GenOptions::for_spec(&spec) };
    assert!(matches!(gen_sentences(&spec, 10, (2, 5), &opts, 1), Err(SynthError::Unsatisfiable(_))));
}

#[test]
fn oracle_self_scoring_is_perfect() {
    let spec = liaison();
    let entries = gen_sentences(&spec, 50, (2, 5), &GenOptions::for_spec(&spec), 5).unwrap();
    let pairs: Vec<_> = entries.iter().map(|e| (&e.pron, &e.pron)).collect();
    assert_eq!(crate::metrics::ser(&pairs).unwrap(), 0.0);
    assert_eq!(crate::metrics::per(&pairs).unwrap(), 0.0);
}

#[test]
fn diacritics_strip_and_fixed_point() {
    let spec = diacritic_dropping();
    assert_eq!(remove_diacritics(&spec, "pátá"), "pata");
    assert_eq!(remove_diacritics(&spec, "pata"), "pata");
    assert_eq!(remove_diacritics(&spec, "támí"), "tami");
}

#[test]
fn diacritization_pairs_share_pronunciation() {
    let spec = diacritic_dropping();
    let sentences = gen_sentences(&spec, 30, (2, 4), &GenOptions::for_spec(&spec), 13).unwrap();
    let paired = diacritization_pairs(&spec, &sentences).unwrap();
    assert_eq!(paired.len(), 60);
    let diacritized = paired.iter().filter(|e| e.has_tag(tags::DIACRITIZED)).count();
    let undiacritized = paired.iter().filter(|e| e.has_tag(tags::UNDIACRITIZED)).count();
    assert_eq!((diacritized, undiacritized), (30, 30));
    for pair in paired.chunks(2) {
        assert_eq!(pair[0].pron, pair[1].pron);
        assert_eq!(remove_diacritics(&spec, &pair[0].text), pair[1].text);
    }
}

#[test]
fn generated_marks_actually_occur() {
    let spec = diacritic_dropping();
    let lexicon = gen_lexicon(&spec, 300, 2).unwrap();
    let marked = lexicon.iter().filter(|e| e.text.chars().any(|c| spec.diacritics.contains_key(&c))).count();
    assert!(marked > 50, "only {marked} of 300 words carry a mark");
}

#[test]
fn inventory_overlap_is_at_least_60_percent() {
    let specs = shipped_specs();
    for (i, spec) in specs.iter().enumerate() {
        let mine = spec.phoneme_inventory();
        let mut others = std::collections::BTreeSet::new();
        for (j, other) in specs.iter().enumerate() {
            if i != j {
                others.extend(other.phoneme_inventory());
            }
        }
        let shared = mine.iter().filter(|t| others.contains(*t)).count();
        let fraction = shared as f64 / mine.len() as f64;
        assert!(fraction >= 0.60, "{} shares only {fraction:.2} of its inventory", spec.locale);
    }
}

#[test]
fn all_archetypes_validate_and_roundtrip_through_files() {
    for spec in shipped_specs() {
        spec.validate().unwrap();
        let serialized = serialize_spec(&spec);
        let reparsed = parse_spec(&serialized).unwrap();
        assert_eq!(reparsed, spec, "round trip failed for {}", spec.locale);
    }
}

#[test]
fn homographs_must_differ() {
    let mut spec = homograph_rich();
    let homograph = spec.homographs.get_mut("rede").unwrap();
    homograph.alternate = homograph.default.clone();
    assert!(matches!(spec.validate(), Err(SynthError::BadSpec(..))));
}
