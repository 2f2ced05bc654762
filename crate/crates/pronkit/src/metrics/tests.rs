use super::*;
use crate::core::parse_xsampa;

/// Independent oracle: minimum cost over all edit scripts, by exhaustive
/// recursion. Exponential, so only usable on short sequences.
pub(crate) fn brute_force_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> usize {
    if reference.is_empty() {
        return hypothesis.len();
    }
    if hypothesis.is_empty() {
        return reference.len();
    }
    let sub = brute_force_distance(&reference[1..], &hypothesis[1..])
        + usize::from(reference[0] != hypothesis[0]);
    let del = brute_force_distance(&reference[1..], hypothesis) + 1;
    let ins = brute_force_distance(reference, &hypothesis[1..]) + 1;
    sub.min(del).min(ins)
}

fn seq(s: &str) -> crate::core::PhonemeSeq {
    parse_xsampa(s).unwrap()
}

#[test]
fn identical_sequences_have_zero_distance() {
    let a = ["a", "b", "c"];
    let alignment = edit_distance(&a, &a);
    assert_eq!(alignment.distance, 0);
    assert_eq!(alignment.ops, vec![EditOp::Match; 3]);
}

#[test]
fn single_substitution() {
    let alignment = edit_distance(&["a", "b", "c"], &["a", "x", "c"]);
    assert_eq!(alignment.distance, 1);
    assert_eq!(alignment.ops, vec![EditOp::Match, EditOp::Substitute, EditOp::Match]);
}

#[test]
fn single_deletion_matches_brute_force() {
    let reference = ["k", "{", "t"];
    let hypothesis = ["k", "t"];
    let alignment = edit_distance(&reference, &hypothesis);
    assert_eq!(alignment.distance, brute_force_distance(&reference, &hypothesis));
    assert_eq!(alignment.distance, 1);
    assert_eq!(alignment.ops, vec![EditOp::Match, EditOp::Delete, EditOp::Match]);
}

#[test]
fn alignment_replays_both_sequences() {
    let reference = ["a", "b", "c", "d"];
    let hypothesis = ["x", "b", "d", "e"];
    let alignment = edit_distance(&reference, &hypothesis);
    let mut ref_used = 0;
    let mut hyp_used = 0;
    let mut non_match = 0;
    for op in &alignment.ops {
        match op {
            EditOp::Match => {
                ref_used += 1;
                hyp_used += 1;
            }
            EditOp::Substitute => {
                ref_used += 1;
                hyp_used += 1;
                non_match += 1;
            }
            EditOp::Delete => {
                ref_used += 1;
                non_match += 1;
            }
            EditOp::Insert => {
                hyp_used += 1;
                non_match += 1;
            }
        }
    }
    assert_eq!(ref_used, reference.len());
    assert_eq!(hyp_used, hypothesis.len());
    assert_eq!(non_match, alignment.distance);
}

#[test]
fn per_is_distance_over_reference_length() {
    let reference = seq("a b c d e f g h i j");
    let hypothesis = seq("a b c d e f g h i x");
    assert_eq!(per(&[(&reference, &hypothesis)]).unwrap(), 0.10);
}

#[test]
fn per_is_micro_averaged() {
    let r1 = seq("a b c d e");
    let h1 = seq("a b c d e");
    let r2 = seq("a b c d e");
    let h2 = seq("a b c d x");
    // 1 edit over 10 reference tokens, not the mean of 0.0 and 0.2.
    assert_eq!(per(&[(&r1, &h1), (&r2, &h2)]).unwrap(), 0.10);
}

#[test]
fn per_counts_boundary_tokens() {
    let reference = seq("a <wb> b");
    let hypothesis = seq("a b");
    // The missing boundary is one deletion over three reference tokens.
    let value = per(&[(&reference, &hypothesis)]).unwrap();
    assert!((value - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn per_zero_iff_all_exact() {
    let r = seq("a b");
    assert_eq!(per(&[(&r, &r)]).unwrap(), 0.0);
    assert!(per(&[]).is_err());
}

#[test]
fn wer_counts_exact_mismatches() {
    let r = seq("k a t");
    let wrong = seq("k a d");
    let pairs = vec![(&r, &r), (&r, &wrong), (&r, &r), (&r, &r)];
    assert_eq!(wer(&pairs).unwrap(), 0.25);
}

#[test]
fn wer_stress_only_difference_counts() {
    let reference = seq("k { t");
    let hypothesis = seq("\"k { t");
    assert_eq!(wer(&[(&reference, &hypothesis)]).unwrap(), 1.0);
}

#[test]
fn ser_counts_any_difference() {
    let r = seq("a <wb> b");
    let wrong = seq("a b");
    let mut pairs = vec![(&r, &r); 7];
    pairs.extend([(&r, &wrong); 3]);
    assert_eq!(ser(&pairs).unwrap(), 0.30);
}

#[test]
fn ser_boundary_misplacement_counts() {
    let reference = seq("a b <wb> c");
    let hypothesis = seq("a <wb> b c");
    assert_eq!(ser(&[(&reference, &hypothesis)]).unwrap(), 1.0);
}

#[test]
fn empty_rate_inputs_are_errors() {
    assert_eq!(wer(&[]), Err(MetricsError::Undefined("WER")));
    assert_eq!(ser(&[]), Err(MetricsError::Undefined("SER")));
}

#[test]
fn homograph_exact_span_is_correct() {
    let reference = seq("a <wb> r i d <wb> b");
    let hypothesis = seq("a <wb> r i d <wb> x");
    let score = homograph_accuracy(&[HomographCase { reference: &reference, hypothesis: &hypothesis, word_index: 1 }]);
    assert_eq!(score.accuracy, Some(1.0));
    assert_eq!((score.evaluated, score.skipped), (1, 0));
}

#[test]
fn homograph_span_count_mismatch_skips() {
    let reference = seq("a <wb> r i d <wb> b");
    let hypothesis = seq("a <wb> r i d");
    let score = homograph_accuracy(&[HomographCase { reference: &reference, hypothesis: &hypothesis, word_index: 1 }]);
    assert_eq!(score.accuracy, None);
    assert_eq!((score.evaluated, score.skipped), (0, 1));
}

#[test]
fn homograph_wrong_span_counts_wrong() {
    let reference = seq("a <wb> r i d <wb> b");
    let hypothesis = seq("a <wb> r e d <wb> b");
    let score = homograph_accuracy(&[HomographCase { reference: &reference, hypothesis: &hypothesis, word_index: 1 }]);
    assert_eq!(score.accuracy, Some(0.0));
}

fn poly_case<'a>(
    reference: &'a crate::core::PhonemeSeq,
    hypothesis: &'a crate::core::PhonemeSeq,
    char_spans: Vec<(usize, usize)>,
    polyphone_chars: Vec<usize>,
) -> PolyphoneCase<'a> {
    PolyphoneCase { reference, hypothesis, char_spans, polyphone_chars }
}

#[test]
fn polyphone_identical_hypothesis_scores_one() {
    let reference = seq("t a <wb> k i");
    let score = polyphone_accuracy(&[poly_case(&reference, &reference, vec![(0, 2), (3, 5)], vec![1])]);
    assert_eq!(score.accuracy_all, Some(1.0));
    assert_eq!(score.accuracy_polyphones, Some(1.0));
    assert_eq!((score.evaluated, score.skipped), (1, 0));
}

#[test]
fn polyphone_substituted_span_counts_against_both() {
    // Two characters; the second (polyphonic) has its span substituted.
    let reference = seq("t a <wb> k i");
    let hypothesis = seq("t a <wb> g i");
    let score = polyphone_accuracy(&[poly_case(&reference, &hypothesis, vec![(0, 2), (3, 5)], vec![1])]);
    assert_eq!(score.accuracy_all, Some(0.5));
    assert_eq!(score.accuracy_polyphones, Some(0.0));
}

#[test]
fn polyphone_degenerate_hypothesis_skips() {
    let reference = seq("t a <wb> k i");
    let hypothesis = crate::core::PhonemeSeq::lenient(vec![]);
    let score = polyphone_accuracy(&[poly_case(&reference, &hypothesis, vec![(0, 2), (3, 5)], vec![1])]);
    assert_eq!((score.evaluated, score.skipped), (0, 1));
    assert_eq!(score.accuracy_all, None);
}

#[test]
fn polyphone_projection_tracks_deletion() {
    // Hypothesis drops one token of the first character's span; the second
    // character's span survives intact and should still score correct.
    let reference = seq("t a <wb> k i");
    let hypothesis = seq("t <wb> k i");
    let score = polyphone_accuracy(&[poly_case(&reference, &hypothesis, vec![(0, 2), (3, 5)], vec![])]);
    assert_eq!(score.accuracy_all, Some(0.5));
}

#[test]
fn plr_oracle_vs_oracle_is_zero() {
    let reference = seq("p o t <wb> a s i");
    let score = plr_eval(&[PlrCase { reference: &reference, hypothesis: &reference, affected_indices: vec![0] }]);
    assert_eq!(score.per_affected, Some(0.0));
    assert_eq!(score.wer_affected, Some(0.0));
    assert_eq!(score.per_whole, Some(0.0));
}

#[test]
fn plr_affected_arithmetic() {
    // Two affected words totalling 7 reference phonemes, one substitution in
    // a 4-phoneme affected word.
    let reference = seq("p o t a <wb> x <wb> v w z");
    let hypothesis = seq("p o d a <wb> x <wb> v w z");
    let score = plr_eval(&[PlrCase { reference: &reference, hypothesis: &hypothesis, affected_indices: vec![0, 2] }]);
    let per_affected = score.per_affected.unwrap();
    assert!((per_affected - 1.0 / 7.0).abs() < 1e-12);
    assert_eq!(score.wer_affected, Some(0.5));
}

#[test]
fn plr_missing_liaison_consonant_counts_wrong() {
    let reference = seq("p o t <wb> a s i");
    let hypothesis = seq("p o <wb> a s i");
    let score = plr_eval(&[PlrCase { reference: &reference, hypothesis: &hypothesis, affected_indices: vec![0] }]);
    assert_eq!(score.wer_affected, Some(1.0));
    assert!(score.per_affected.unwrap() > 0.0);
}

#[test]
fn plr_span_mismatch_skips_affected_but_scores_whole() {
    let reference = seq("p o t <wb> a s i");
    let hypothesis = seq("p o t a s i");
    let score = plr_eval(&[PlrCase { reference: &reference, hypothesis: &hypothesis, affected_indices: vec![0] }]);
    assert_eq!((score.evaluated, score.skipped), (0, 1));
    assert_eq!(score.per_affected, None);
    assert!(score.per_whole.unwrap() > 0.0);
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    fn tokens() -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..4, 0..7)
    }

    proptest! {
        #[test]
        fn distance_matches_brute_force(a in tokens(), b in tokens()) {
            prop_assert_eq!(edit_distance(&a, &b).distance, brute_force_distance(&a, &b));
        }

        #[test]
        fn distance_is_symmetric(a in tokens(), b in tokens()) {
            prop_assert_eq!(edit_distance(&a, &b).distance, edit_distance(&b, &a).distance);
        }

        #[test]
        fn distance_identity(a in tokens()) {
            prop_assert_eq!(edit_distance(&a, &a).distance, 0);
        }

        #[test]
        fn distance_triangle_inequality(a in tokens(), b in tokens(), c in tokens()) {
            let ab = edit_distance(&a, &b).distance;
            let bc = edit_distance(&b, &c).distance;
            let ac = edit_distance(&a, &c).distance;
            prop_assert!(ac <= ab + bc);
        }
    }
}
