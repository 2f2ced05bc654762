//! Line-oriented corpus file format.
//!
//! One UTF-8, tab-separated entry per line:
//! `locale<TAB>kind<TAB>text<TAB>pronunciation[<TAB>lemma[<TAB>annotations]]`
//! with kind `w` or `s`, `<wb>` as the word-boundary token and annotations as
//! comma-separated `index:tag` pairs. Lines starting with `#` are comments.

use std::fs;
use std::path::Path;

use super::{parse_locale, parse_xsampa, Annotation, CoreError, EntryKind, PronunciationEntry};

pub fn parse_entry_line(line: &str, line_no: usize) -> Result<PronunciationEntry, CoreError> {
    let err = |reason: String| CoreError::CorpusLine { line: line_no, reason };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 4 || fields.len() > 6 {
        return Err(err(format!("expected 4-6 tab-separated fields, got {}", fields.len())));
    }
    let locale = parse_locale(fields[0]).map_err(|e| err(e.to_string()))?;
    let kind = EntryKind::parse(fields[1]).map_err(|e| err(e.to_string()))?;
    let pron = parse_xsampa(fields[3]).map_err(|e| err(e.to_string()))?;
    let lemma = fields.get(4).filter(|s| !s.is_empty()).map(|s| s.to_string());
    let annotations = match fields.get(5) {
        Some(s) if !s.is_empty() => parse_annotations(s).map_err(|e| err(e.to_string()))?,
        _ => Vec::new(),
    };
    PronunciationEntry::new(locale, kind, fields[2], pron, lemma, annotations).map_err(|e| err(e.to_string()))
}

fn parse_annotations(s: &str) -> Result<Vec<Annotation>, CoreError> {
    s.split(',')
        .map(|pair| {
            let (idx, tag) = pair
                .split_once(':')
                .ok_or_else(|| CoreError::InvalidEntry(format!("annotation `{pair}` is not index:tag")))?;
            let index = idx
                .parse::<usize>()
                .map_err(|_| CoreError::InvalidEntry(format!("annotation index `{idx}` is not a number")))?;
            if tag.is_empty() {
                return Err(CoreError::InvalidEntry(format!("annotation `{pair}` has an empty tag")));
            }
            Ok(Annotation::new(index, tag))
        })
        .collect()
}

pub fn format_entry(entry: &PronunciationEntry) -> String {
    let mut line = format!(
        "{}\t{}\t{}\t{}",
        entry.locale,
        entry.kind.as_str(),
        entry.text,
        entry.pron
    );
    let annotations = entry
        .annotations
        .iter()
        .map(Annotation::to_string)
        .collect::<Vec<_>>()
        .join(",");
    if entry.lemma.is_some() || !annotations.is_empty() {
        line.push('\t');
        line.push_str(entry.lemma.as_deref().unwrap_or(""));
    }
    if !annotations.is_empty() {
        line.push('\t');
        line.push_str(&annotations);
    }
    line
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<PronunciationEntry>, CoreError> {
    let path = path.as_ref();
    let contents = fs::read_to_string(path).map_err(|e| CoreError::CorpusLine {
        line: 0,
        reason: format!("cannot read {}: {e}", path.display()),
    })?;
    let mut entries = Vec::new();
    for (i, line) in contents.lines().enumerate() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        entries.push(parse_entry_line(line, i + 1)?);
    }
    Ok(entries)
}

pub fn write_corpus(path: impl AsRef<Path>, entries: &[PronunciationEntry]) -> std::io::Result<()> {
    let mut out = String::new();
    for entry in entries {
        out.push_str(&format_entry(entry));
        out.push('\n');
    }
    fs::write(path, out)
}
