//! Corpus-level evaluation: pair gold entries with predictions by
//! (locale, text) key, compute every applicable metric per locale and test
//! set, and emit stable report records.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::core::{
    parse_locale, tags, CoreError, EntryKind, Locale, PhonemeSeq, PhonemeToken, PronunciationEntry, Seg, WB_TOKEN,
};
use crate::metrics::{
    homograph_accuracy, per, plr_eval, polyphone_accuracy, ser, wer, HomographCase, MetricRecord, PlrCase,
    PolyphoneCase,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("predictions file line {line}: {reason}")]
    BadPrediction { line: usize, reason: String },
    #[error(transparent)]
    Corpus(#[from] CoreError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Flags a prediction line may carry in its trailing column.
pub mod flags {
    pub const NONE: &str = "-";
    pub const TRUNCATED: &str = "truncated";
    pub const DEGENERATE: &str = "degenerate";
    pub const ERROR_PREFIX: &str = "error:";
}

/// One line of a predictions file: corpus fields plus a flags column.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub locale: Locale,
    pub kind: EntryKind,
    pub text: String,
    pub pron: PhonemeSeq,
    pub flags: Vec<String>,
}

impl PredictionRecord {
    pub fn is_error(&self) -> bool {
        self.flags.iter().any(|f| f.starts_with(flags::ERROR_PREFIX))
    }
}

/// Parse a pronunciation without structural validation; predictions may be
/// degenerate and must still load.
pub fn parse_xsampa_lenient(s: &str) -> PhonemeSeq {
    let segs = s
        .split_whitespace()
        .map(|tok| {
            if tok == WB_TOKEN {
                Seg::Boundary
            } else {
                match PhonemeToken::new(tok) {
                    Ok(p) => Seg::Phoneme(p),
                    Err(_) => Seg::Phoneme(
                        PhonemeToken::new(format!("?{}", tok.trim_matches(['<', '>']))).expect("sanitized"),
                    ),
                }
            }
        })
        .collect();
    PhonemeSeq::lenient(segs)
}

/// Predictions mirror the corpus format with two fixed extra columns:
/// `locale kind text pron lemma annotations flags` (tab-separated; lemma and
/// annotations stay empty, flags is `-` or a comma-separated list).
pub fn format_prediction(record: &PredictionRecord) -> String {
    let flags = if record.flags.is_empty() { flags::NONE.to_string() } else { record.flags.join(",") };
    format!(
        "{}\t{}\t{}\t{}\t\t\t{}",
        record.locale,
        record.kind.as_str(),
        record.text,
        record.pron,
        flags
    )
}

pub fn parse_prediction_line(line: &str, line_no: usize) -> Result<PredictionRecord, EvalError> {
    let err = |reason: String| EvalError::BadPrediction { line: line_no, reason };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 7 {
        return Err(err(format!("expected 7 tab-separated fields, got {}", fields.len())));
    }
    let locale = parse_locale(fields[0]).map_err(|e| err(e.to_string()))?;
    let kind = EntryKind::parse(fields[1]).map_err(|e| err(e.to_string()))?;
    let pron = parse_xsampa_lenient(fields[3]);
    let flags = match fields[6] {
        "" | flags::NONE => Vec::new(),
        list => list.split(',').map(str::to_string).collect(),
    };
    Ok(PredictionRecord { locale, kind, text: fields[2].to_string(), pron, flags })
}

pub fn write_predictions(path: impl AsRef<Path>, records: &[PredictionRecord]) -> std::io::Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&format_prediction(record));
        out.push('\n');
    }
    fs::write(path, out)
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionRecord>, EvalError> {
    let contents = fs::read_to_string(path.as_ref())?;
    let mut records = Vec::new();
    for (i, line) in contents.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        records.push(parse_prediction_line(line, i + 1)?);
    }
    Ok(records)
}

/// Result of pairing gold entries with predictions.
pub struct Pairing<'a> {
    /// Matched (gold, prediction) pairs, in gold order.
    pub pairs: Vec<(&'a PronunciationEntry, &'a PredictionRecord)>,
    /// Keys of gold entries with no usable prediction.
    pub unmatched: Vec<String>,
}

/// Align gold and predictions on the (locale, text) key; duplicate keys pair
/// up by occurrence index. Error-flagged predictions are excluded and their
/// gold entries reported unmatched.
pub fn pair_predictions<'a>(
    gold: &'a [PronunciationEntry],
    predictions: &'a [PredictionRecord],
) -> Pairing<'a> {
    let mut queues: HashMap<(String, String), std::collections::VecDeque<&PredictionRecord>> = HashMap::new();
    for prediction in predictions {
        queues
            .entry((prediction.locale.to_string(), prediction.text.clone()))
            .or_default()
            .push_back(prediction);
    }
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for entry in gold {
        let key = (entry.locale.to_string(), entry.text.clone());
        let candidate = queues.get_mut(&key).and_then(|q| q.pop_front());
        match candidate {
            Some(prediction) if !prediction.is_error() => pairs.push((entry, prediction)),
            _ => unmatched.push(format!("{}\t{}", key.0, key.1)),
        }
    }
    Pairing { pairs, unmatched }
}

/// Per-task metric value with skip accounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskMetric {
    pub value: Option<f64>,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Metrics for one (locale, test set) group.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub locale: Locale,
    pub test_set: EntryKind,
    pub per: Option<f64>,
    pub wer: Option<f64>,
    pub ser: Option<f64>,
    pub task_metrics: BTreeMap<String, TaskMetric>,
}

impl EvalReport {
    fn test_set_name(&self) -> &'static str {
        match self.test_set {
            EntryKind::Word => "word",
            EntryKind::Sentence => "sentence",
        }
    }

    pub fn to_records(&self, pair_count: usize) -> Vec<MetricRecord> {
        let record = |name: &str, value: Option<f64>, evaluated: usize, skipped: usize| MetricRecord {
            locale: self.locale.to_string(),
            test_set: self.test_set_name().to_string(),
            name: name.to_string(),
            value,
            evaluated,
            skipped,
        };
        let mut records = vec![record("per", self.per, pair_count, 0)];
        if let Some(value) = self.wer {
            records.push(record("wer", Some(value), pair_count, 0));
        }
        if let Some(value) = self.ser {
            records.push(record("ser", Some(value), pair_count, 0));
        }
        for (name, metric) in &self.task_metrics {
            records.push(record(name, metric.value, metric.evaluated, metric.skipped));
        }
        records
    }
}

/// Token spans of each character group in a per-character pronunciation
/// (boundary tokens separate groups and belong to no span).
fn char_group_spans(pron: &PhonemeSeq) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0usize;
    let mut position = 0usize;
    for seg in pron.segs() {
        if seg.is_boundary() {
            spans.push((start, position));
            start = position + 1;
        }
        position += 1;
    }
    spans.push((start, position));
    spans
}

/// Entries with space-less text where the boundary structure gives exactly
/// one span per character are scored per character.
fn polyphone_eligible(entry: &PronunciationEntry) -> bool {
    entry.kind == EntryKind::Sentence
        && !entry.text.contains(' ')
        && entry.pron.span_count() == entry.text.chars().count()
        && entry.text.chars().count() > 0
}

/// Compute every applicable metric over matched pairs, grouped by locale and
/// test set, and return records in a stable order plus unmatched-key records.
pub fn evaluate(gold: &[PronunciationEntry], predictions: &[PredictionRecord]) -> (Vec<MetricRecord>, Vec<String>) {
    let pairing = pair_predictions(gold, predictions);

    let mut groups: BTreeMap<(String, &'static str), Vec<(&PronunciationEntry, &PredictionRecord)>> = BTreeMap::new();
    for (entry, prediction) in &pairing.pairs {
        let set = match entry.kind {
            EntryKind::Word => "word",
            EntryKind::Sentence => "sentence",
        };
        groups.entry((entry.locale.to_string(), set)).or_default().push((entry, prediction));
    }

    let mut records = Vec::new();
    for ((locale, test_set), members) in &groups {
        let seq_pairs: Vec<(&PhonemeSeq, &PhonemeSeq)> = members.iter().map(|(g, p)| (&g.pron, &p.pron)).collect();
        let mut report = EvalReport {
            locale: parse_locale(locale).expect("locale came from an entry"),
            test_set: if *test_set == "word" { EntryKind::Word } else { EntryKind::Sentence },
            per: per(&seq_pairs).ok(),
            wer: None,
            ser: None,
            task_metrics: BTreeMap::new(),
        };
        match report.test_set {
            EntryKind::Word => report.wer = wer(&seq_pairs).ok(),
            EntryKind::Sentence => report.ser = ser(&seq_pairs).ok(),
        }

        if report.test_set == EntryKind::Sentence {
            add_sentence_task_metrics(&mut report, members);
        }
        records.extend(report.to_records(members.len()));
    }

    if !pairing.unmatched.is_empty() {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for key in &pairing.unmatched {
            let locale = key.split('\t').next().unwrap_or_default().to_string();
            *counts.entry(locale).or_default() += 1;
        }
        for (locale, count) in counts {
            let matched = groups
                .iter()
                .filter(|((l, _), _)| *l == locale)
                .map(|(_, members)| members.len())
                .sum();
            records.push(MetricRecord {
                locale,
                test_set: "all".to_string(),
                name: "unmatched".to_string(),
                value: None,
                evaluated: matched,
                skipped: count,
            });
        }
    }

    records.sort_by(|a, b| a.key().cmp(&b.key()));
    (records, pairing.unmatched)
}

fn add_sentence_task_metrics(report: &mut EvalReport, members: &[(&PronunciationEntry, &PredictionRecord)]) {
    // Homograph disambiguation.
    let mut homograph_cases = Vec::new();
    for (entry, prediction) in members {
        let span_count = entry.pron.span_count();
        for index in entry.indices_with_tag(tags::HOMOGRAPH) {
            if index < span_count {
                homograph_cases.push(HomographCase {
                    reference: &entry.pron,
                    hypothesis: &prediction.pron,
                    word_index: index,
                });
            }
        }
    }
    if !homograph_cases.is_empty() {
        let score = homograph_accuracy(&homograph_cases);
        report.task_metrics.insert(
            "homograph_accuracy".to_string(),
            TaskMetric { value: score.accuracy, evaluated: score.evaluated, skipped: score.skipped },
        );
    }

    // Post-lexical rules.
    let mut plr_cases = Vec::new();
    for (entry, prediction) in members {
        let indices = entry.indices_with_tag(tags::PLR);
        let span_count = entry.pron.span_count();
        let indices: Vec<usize> = indices.into_iter().filter(|i| *i < span_count).collect();
        if !indices.is_empty() {
            plr_cases.push(PlrCase { reference: &entry.pron, hypothesis: &prediction.pron, affected_indices: indices });
        }
    }
    if !plr_cases.is_empty() {
        let score = plr_eval(&plr_cases);
        let counts = (score.evaluated, score.skipped);
        report.task_metrics.insert(
            "plr_per_affected".to_string(),
            TaskMetric { value: score.per_affected, evaluated: counts.0, skipped: counts.1 },
        );
        report.task_metrics.insert(
            "plr_wer_affected".to_string(),
            TaskMetric { value: score.wer_affected, evaluated: counts.0, skipped: counts.1 },
        );
        report.task_metrics.insert(
            "plr_per_whole".to_string(),
            TaskMetric { value: score.per_whole, evaluated: counts.0 + counts.1, skipped: 0 },
        );
    }

    // Polyphone character accuracy.
    let mut polyphone_cases = Vec::new();
    for (entry, prediction) in members {
        if !polyphone_eligible(entry) {
            continue;
        }
        let char_spans = char_group_spans(&entry.pron);
        let polyphone_chars: Vec<usize> = entry
            .indices_with_tag(tags::POLYPHONE)
            .into_iter()
            .filter(|i| *i < char_spans.len())
            .collect();
        polyphone_cases.push(PolyphoneCase {
            reference: &entry.pron,
            hypothesis: &prediction.pron,
            char_spans,
            polyphone_chars,
        });
    }
    if !polyphone_cases.is_empty() {
        let score = polyphone_accuracy(&polyphone_cases);
        report.task_metrics.insert(
            "polyphone_accuracy_all".to_string(),
            TaskMetric { value: score.accuracy_all, evaluated: score.evaluated, skipped: score.skipped },
        );
        report.task_metrics.insert(
            "polyphone_accuracy_poly".to_string(),
            TaskMetric { value: score.accuracy_polyphones, evaluated: score.evaluated, skipped: score.skipped },
        );
    }

    // Diacritized vs undiacritized inputs, reported separately.
    for (tag, suffix) in [(tags::DIACRITIZED, "diacritized"), (tags::UNDIACRITIZED, "undiacritized")] {
        let subset: Vec<(&PhonemeSeq, &PhonemeSeq)> = members
            .iter()
            .filter(|(entry, _)| entry.has_tag(tag))
            .map(|(entry, prediction)| (&entry.pron, &prediction.pron))
            .collect();
        if subset.is_empty() {
            continue;
        }
        report.task_metrics.insert(
            format!("per_{suffix}"),
            TaskMetric { value: per(&subset).ok(), evaluated: subset.len(), skipped: 0 },
        );
        report.task_metrics.insert(
            format!("ser_{suffix}"),
            TaskMetric { value: ser(&subset).ok(), evaluated: subset.len(), skipped: 0 },
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthlang::{self, GenOptions};

    fn oracle_predictions(entries: &[PronunciationEntry]) -> Vec<PredictionRecord> {
        entries
            .iter()
            .map(|e| PredictionRecord {
                locale: e.locale.clone(),
                kind: e.kind,
                text: e.text.clone(),
                pron: e.pron.clone(),
                flags: vec![],
            })
            .collect()
    }

    #[test]
    fn oracle_vs_oracle_scores_perfectly() {
        let spec = synthlang::homograph_rich();
        let entries = synthlang::gen_sentences(&spec, 80, (2, 5), &GenOptions::for_spec(&spec), 3).unwrap();
        let predictions = oracle_predictions(&entries);
        let (records, unmatched) = evaluate(&entries, &predictions);
        assert!(unmatched.is_empty());
        for record in &records {
            match record.name.as_str() {
                "per" | "ser" => assert_eq!(record.value, Some(0.0), "{record:?}"),
                "homograph_accuracy" => {
                    assert_eq!(record.value, Some(1.0));
                    assert_eq!(record.skipped, 0);
                }
                _ => {}
            }
        }
        assert!(records.iter().any(|r| r.name == "homograph_accuracy"));
    }

    #[test]
    fn unmatched_gold_is_reported() {
        let spec = synthlang::alphabetic_regular();
        let entries = synthlang::gen_lexicon(&spec, 10, 1).unwrap();
        let mut predictions = oracle_predictions(&entries);
        predictions.pop();
        predictions[0].flags = vec!["error:unknown locale".to_string()];
        let (records, unmatched) = evaluate(&entries, &predictions);
        assert_eq!(unmatched.len(), 2);
        let rec = records.iter().find(|r| r.name == "unmatched").unwrap();
        assert_eq!(rec.skipped, 2);
        assert_eq!(rec.evaluated, 8);
    }

    #[test]
    fn duplicate_keys_pair_by_occurrence() {
        let spec = synthlang::alphabetic_regular();
        let mut entries = synthlang::gen_lexicon(&spec, 3, 1).unwrap();
        entries.push(entries[0].clone());
        let mut predictions = oracle_predictions(&entries);
        // Corrupt only the second occurrence's prediction.
        predictions[3].pron = parse_xsampa_lenient("z z");
        let (records, _) = evaluate(&entries, &predictions);
        let wer_record = records.iter().find(|r| r.name == "wer").unwrap();
        assert_eq!(wer_record.value, Some(0.25));
    }

    #[test]
    fn diacritization_reports_two_rows_per_metric() {
        let spec = synthlang::diacritic_dropping();
        let base = synthlang::gen_sentences(&spec, 20, (2, 4), &GenOptions::for_spec(&spec), 5).unwrap();
        let entries = synthlang::diacritization_pairs(&spec, &base).unwrap();
        let predictions = oracle_predictions(&entries);
        let (records, _) = evaluate(&entries, &predictions);
        for name in ["per_diacritized", "per_undiacritized", "ser_diacritized", "ser_undiacritized"] {
            let record = records.iter().find(|r| r.name == name).unwrap_or_else(|| panic!("missing {name}"));
            assert_eq!(record.value, Some(0.0));
            assert_eq!(record.evaluated, 20);
        }
    }

    #[test]
    fn polyphone_records_present_for_logographic_gold() {
        let spec = synthlang::logographic();
        let entries = synthlang::gen_sentences(&spec, 30, (3, 8), &GenOptions::for_spec(&spec), 2).unwrap();
        let predictions = oracle_predictions(&entries);
        let (records, _) = evaluate(&entries, &predictions);
        let all = records.iter().find(|r| r.name == "polyphone_accuracy_all").unwrap();
        assert_eq!(all.value, Some(1.0));
        let poly = records.iter().find(|r| r.name == "polyphone_accuracy_poly").unwrap();
        assert_eq!(poly.value, Some(1.0));
    }

    #[test]
    fn prediction_lines_roundtrip() {
        let record = PredictionRecord {
            locale: parse_locale("zr-aa").unwrap(),
            kind: EntryKind::Word,
            text: "pata".to_string(),
            pron: parse_xsampa_lenient("\"p a t a"),
            flags: vec![flags::TRUNCATED.to_string()],
        };
        let line = format_prediction(&record);
        let parsed = parse_prediction_line(&line, 1).unwrap();
        assert_eq!(parsed, record);
    }
}
