//! Encoding between corpus entries and the integer id sequences the model
//! consumes and produces.
//!
//! Source sequences are a locale tag followed by one id per character, with
//! spaces replaced by the word-boundary token so source and target share one
//! boundary convention. Target sequences are `<bos>` + phoneme/boundary ids +
//! `<eos>`.

use thiserror::Error;

use crate::core::{
    Locale, PhonemeSeq, PhonemeToken, PronunciationEntry, Seg, Vocab, BOS_ID, EOS_ID, PAD_ID, UNK_ID, UNK_TOKEN,
    WB_TOKEN,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("locale tag `{0}` is not in the vocabulary")]
    UnknownLocale(String),
    #[error("target token `{0}` is not in the vocabulary")]
    UnknownTargetToken(String),
}

/// One encoded training example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedPair {
    pub src: Vec<u32>,
    pub tgt: Vec<u32>,
}

/// Encode `text` for `locale`: `[tag, char...]` with spaces mapped to the
/// boundary token and characters unseen at training time mapped to `<unk>`.
pub fn encode_source(vocab: &Vocab, locale: &Locale, text: &str) -> Result<Vec<u32>, CodecError> {
    let tag = locale.tag();
    let tag_id = vocab.source.id(&tag).ok_or(CodecError::UnknownLocale(tag))?;
    let mut ids = Vec::with_capacity(text.chars().count() + 1);
    ids.push(tag_id);
    let mut buf = [0u8; 4];
    for c in text.chars() {
        let id = if c == ' ' {
            vocab.source.id(WB_TOKEN).unwrap_or(UNK_ID)
        } else {
            vocab.source.id(c.encode_utf8(&mut buf)).unwrap_or(UNK_ID)
        };
        ids.push(id);
    }
    Ok(ids)
}

/// Encode a pronunciation: `[<bos>, token..., <eos>]`. Targets must be exact
/// at training time, so an out-of-vocabulary token is an error.
pub fn encode_target(vocab: &Vocab, pron: &PhonemeSeq) -> Result<Vec<u32>, CodecError> {
    let mut ids = Vec::with_capacity(pron.len() + 2);
    ids.push(BOS_ID);
    for seg in pron.segs() {
        let id = vocab
            .target
            .id(seg.as_str())
            .ok_or_else(|| CodecError::UnknownTargetToken(seg.as_str().to_string()))?;
        ids.push(id);
    }
    ids.push(EOS_ID);
    Ok(ids)
}

pub fn encode_entry(vocab: &Vocab, entry: &PronunciationEntry) -> Result<EncodedPair, CodecError> {
    Ok(EncodedPair {
        src: encode_source(vocab, &entry.locale, &entry.text)?,
        tgt: encode_target(vocab, &entry.pron)?,
    })
}

/// Decode model output into a pronunciation. `<bos>`/`<eos>`/`<pad>` are
/// stripped; structural violations are flagged, never dropped, so every
/// prediction stays scorable.
pub fn decode_target(vocab: &Vocab, ids: &[u32]) -> PhonemeSeq {
    let mut segs = Vec::new();
    for &id in ids {
        if id == BOS_ID || id == EOS_ID || id == PAD_ID {
            continue;
        }
        let token = vocab.target.token(id).unwrap_or(UNK_TOKEN);
        if token == WB_TOKEN {
            segs.push(Seg::Boundary);
        } else {
            // Reserved spellings come back as a literal unknown marker;
            // PhonemeToken would reject them.
            match PhonemeToken::new(token) {
                Ok(p) => segs.push(Seg::Phoneme(p)),
                Err(_) => segs.push(Seg::Phoneme(PhonemeToken::new(format!("?{}", token.trim_matches(['<', '>']))).expect("sanitized token"))),
            }
        }
    }
    PhonemeSeq::lenient(segs)
}

/// Split a pronunciation into per-word token spans at boundary markers.
/// Degenerate sequences may produce empty spans; positions are preserved.
pub fn word_spans(pron: &PhonemeSeq) -> Vec<Vec<PhonemeToken>> {
    let mut spans = vec![Vec::new()];
    for seg in pron.segs() {
        match seg {
            Seg::Boundary => spans.push(Vec::new()),
            Seg::Phoneme(p) => spans.last_mut().expect("nonempty").push(p.clone()),
        }
    }
    spans
}
