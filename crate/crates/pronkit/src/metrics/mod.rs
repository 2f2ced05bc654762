//! Evaluation computations: phone/word/sentence error rates, homograph
//! disambiguation accuracy, polyphone character accuracy and post-lexical
//! rule scoring.

mod report;
#[cfg(test)]
mod tests;

pub use report::{read_report, write_report, MetricRecord};

use thiserror::Error;

use crate::codec::word_spans;
use crate::core::{PhonemeSeq, PhonemeToken};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("{0} is undefined: empty reference set")]
    Undefined(&'static str),
}

/// One edit operation, aligned to reference positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Match,
    Substitute,
    /// Reference token absent from the hypothesis.
    Delete,
    /// Hypothesis token absent from the reference.
    Insert,
}

/// A minimum-cost alignment between a reference and a hypothesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditAlignment {
    pub distance: usize,
    pub ops: Vec<EditOp>,
}

/// Unit-cost Levenshtein distance with one reconstructed alignment.
///
/// Backtrace ties prefer Match > Substitute > Delete > Insert so alignments
/// (and everything projected through them) are deterministic.
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> EditAlignment {
    let m = reference.len();
    let n = hypothesis.len();
    let mut dp = vec![vec![0usize; n + 1]; m + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=n {
        dp[0][j] = j;
    }
    for i in 1..=m {
        for j in 1..=n {
            let sub = dp[i - 1][j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            dp[i][j] = sub.min(dp[i - 1][j] + 1).min(dp[i][j - 1] + 1);
        }
    }

    let mut ops = Vec::with_capacity(m.max(n));
    let (mut i, mut j) = (m, n);
    while i > 0 || j > 0 {
        let cost = dp[i][j];
        if i > 0 && j > 0 && reference[i - 1] == hypothesis[j - 1] && cost == dp[i - 1][j - 1] {
            ops.push(EditOp::Match);
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && cost == dp[i - 1][j - 1] + 1 {
            ops.push(EditOp::Substitute);
            i -= 1;
            j -= 1;
        } else if i > 0 && cost == dp[i - 1][j] + 1 {
            ops.push(EditOp::Delete);
            i -= 1;
        } else {
            ops.push(EditOp::Insert);
            j -= 1;
        }
    }
    ops.reverse();
    EditAlignment { distance: dp[m][n], ops }
}

/// Micro-averaged phone error rate: total edits over total reference tokens.
/// Word-boundary markers count as tokens; the model has to predict them.
pub fn per(pairs: &[(&PhonemeSeq, &PhonemeSeq)]) -> Result<f64, MetricsError> {
    let mut edits = 0usize;
    let mut ref_tokens = 0usize;
    for (reference, hypothesis) in pairs {
        edits += edit_distance(&reference.token_strings(), &hypothesis.token_strings()).distance;
        ref_tokens += reference.len();
    }
    if ref_tokens == 0 {
        return Err(MetricsError::Undefined("PER"));
    }
    Ok(edits as f64 / ref_tokens as f64)
}

fn exact_mismatch_rate(pairs: &[(&PhonemeSeq, &PhonemeSeq)], name: &'static str) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::Undefined(name));
    }
    let wrong = pairs.iter().filter(|(r, h)| r.token_strings() != h.token_strings()).count();
    Ok(wrong as f64 / pairs.len() as f64)
}

/// Word error rate over word-level pairs: any token difference counts.
pub fn wer(pairs: &[(&PhonemeSeq, &PhonemeSeq)]) -> Result<f64, MetricsError> {
    exact_mismatch_rate(pairs, "WER")
}

/// Sentence error rate: any token-level difference, boundaries included.
pub fn ser(pairs: &[(&PhonemeSeq, &PhonemeSeq)]) -> Result<f64, MetricsError> {
    exact_mismatch_rate(pairs, "SER")
}

/// Accuracy plus skip accounting for a task metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskScore {
    pub accuracy: Option<f64>,
    pub evaluated: usize,
    pub skipped: usize,
}

impl TaskScore {
    fn from_counts(correct: usize, evaluated: usize, skipped: usize) -> Self {
        let accuracy = (evaluated > 0).then(|| correct as f64 / evaluated as f64);
        TaskScore { accuracy, evaluated, skipped }
    }
}

pub struct HomographCase<'a> {
    pub reference: &'a PhonemeSeq,
    pub hypothesis: &'a PhonemeSeq,
    pub word_index: usize,
}

/// Homograph disambiguation accuracy with phoneme-span isolation.
///
/// When the hypothesis has a different number of word spans than the
/// reference, the homograph span cannot be reliably isolated and the case is
/// skipped; accuracy is reported over the remaining common subset.
pub fn homograph_accuracy(cases: &[HomographCase<'_>]) -> TaskScore {
    let mut correct = 0;
    let mut evaluated = 0;
    let mut skipped = 0;
    for case in cases {
        let ref_spans = word_spans(case.reference);
        let hyp_spans = word_spans(case.hypothesis);
        if ref_spans.len() != hyp_spans.len() {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        if ref_spans[case.word_index] == hyp_spans[case.word_index] {
            correct += 1;
        }
    }
    TaskScore::from_counts(correct, evaluated, skipped)
}

pub struct PolyphoneCase<'a> {
    pub reference: &'a PhonemeSeq,
    pub hypothesis: &'a PhonemeSeq,
    /// For each source character, its token span `[start, end)` in the
    /// reference token sequence.
    pub char_spans: Vec<(usize, usize)>,
    /// Character indices that are polyphonic.
    pub polyphone_chars: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyphoneScore {
    pub accuracy_all: Option<f64>,
    pub accuracy_polyphones: Option<f64>,
    /// Cases scored / skipped (degenerate hypotheses are skipped).
    pub evaluated: usize,
    pub skipped: usize,
}

/// Project reference token boundaries through an alignment: `bounds[k]` is
/// the hypothesis position aligned to reference position `k` when it is first
/// reached, so hypothesis insertions attach to the following span.
fn project_boundaries(ops: &[EditOp], ref_len: usize) -> Vec<usize> {
    let mut bounds = Vec::with_capacity(ref_len + 1);
    bounds.push(0);
    let mut hyp_pos = 0;
    for op in ops {
        match op {
            EditOp::Match | EditOp::Substitute => {
                hyp_pos += 1;
                bounds.push(hyp_pos);
            }
            EditOp::Delete => bounds.push(hyp_pos),
            EditOp::Insert => hyp_pos += 1,
        }
    }
    debug_assert_eq!(bounds.len(), ref_len + 1);
    bounds
}

/// Character pronunciation accuracy for logographic scripts.
///
/// The hypothesis is segmented into per-character spans by aligning it to the
/// reference and projecting the reference span boundaries through the
/// alignment; a character is correct iff its projected span equals its
/// reference span.
pub fn polyphone_accuracy(cases: &[PolyphoneCase<'_>]) -> PolyphoneScore {
    let mut all_correct = 0usize;
    let mut all_total = 0usize;
    let mut poly_correct = 0usize;
    let mut poly_total = 0usize;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;
    for case in cases {
        if case.hypothesis.is_degenerate() {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        let ref_tokens = case.reference.token_strings();
        let hyp_tokens = case.hypothesis.token_strings();
        let alignment = edit_distance(&ref_tokens, &hyp_tokens);
        let bounds = project_boundaries(&alignment.ops, ref_tokens.len());
        for (char_idx, &(start, end)) in case.char_spans.iter().enumerate() {
            let hyp_span = &hyp_tokens[bounds[start]..bounds[end]];
            let ok = hyp_span == &ref_tokens[start..end];
            all_total += 1;
            all_correct += usize::from(ok);
            if case.polyphone_chars.contains(&char_idx) {
                poly_total += 1;
                poly_correct += usize::from(ok);
            }
        }
    }
    PolyphoneScore {
        accuracy_all: (all_total > 0).then(|| all_correct as f64 / all_total as f64),
        accuracy_polyphones: (poly_total > 0).then(|| poly_correct as f64 / poly_total as f64),
        evaluated,
        skipped,
    }
}

pub struct PlrCase<'a> {
    pub reference: &'a PhonemeSeq,
    pub hypothesis: &'a PhonemeSeq,
    /// Word indices modified by post-lexical rules.
    pub affected_indices: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlrScore {
    pub per_affected: Option<f64>,
    pub wer_affected: Option<f64>,
    pub per_whole: Option<f64>,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Score sentences on the words affected by post-lexical rules only, plus the
/// whole-sentence PER. Span-count mismatches are skipped for the affected
/// metrics (as for homographs) but still count toward the whole-sentence PER.
pub fn plr_eval(cases: &[PlrCase<'_>]) -> PlrScore {
    let mut whole_edits = 0usize;
    let mut whole_tokens = 0usize;
    let mut affected_edits = 0usize;
    let mut affected_tokens = 0usize;
    let mut affected_wrong = 0usize;
    let mut affected_total = 0usize;
    let mut evaluated = 0usize;
    let mut skipped = 0usize;

    for case in cases {
        whole_edits += edit_distance(&case.reference.token_strings(), &case.hypothesis.token_strings()).distance;
        whole_tokens += case.reference.len();

        let ref_spans = word_spans(case.reference);
        let hyp_spans = word_spans(case.hypothesis);
        if ref_spans.len() != hyp_spans.len() {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        for &idx in &case.affected_indices {
            let ref_span: &[PhonemeToken] = &ref_spans[idx];
            let hyp_span: &[PhonemeToken] = &hyp_spans[idx];
            affected_edits += edit_distance(ref_span, hyp_span).distance;
            affected_tokens += ref_span.len();
            affected_total += 1;
            affected_wrong += usize::from(ref_span != hyp_span);
        }
    }

    PlrScore {
        per_affected: (affected_tokens > 0).then(|| affected_edits as f64 / affected_tokens as f64),
        wer_affected: (affected_total > 0).then(|| affected_wrong as f64 / affected_total as f64),
        per_whole: (whole_tokens > 0).then(|| whole_edits as f64 / whole_tokens as f64),
        evaluated,
        skipped,
    }
}
