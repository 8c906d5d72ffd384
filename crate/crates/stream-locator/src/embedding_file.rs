//! Text embedding files: one record per line, `<frame_index> <dim> <c_0> ... <c_{dim-1}>`.
//!
//! A question file holds exactly one record with frame index `-1`. A frames
//! file holds indices `0..n` once each, in any order. Blank lines and lines
//! starting with `#` are skipped.

use std::path::Path;

use stream_locator_core::scorer::EmbeddingScorer;
use stream_locator_core::{EmbeddingVector, ScoreError};

use crate::error::{Error, Result};
use crate::files::read_text;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub line: usize,
    pub frame_index: i64,
    pub vector: EmbeddingVector,
}

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn parse_records(path: &Path, text: &str) -> Result<Vec<EmbeddingRecord>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let frame_index: i64 = fields
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| format_err(path, line, "bad frame index"))?;
        let dim: usize = fields
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| format_err(path, line, "bad dimension"))?;
        let comps = fields
            .enumerate()
            .map(|(k, t)| {
                t.parse::<f64>()
                    .map_err(|_| format_err(path, line, format!("component {k}: cannot parse {t:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if comps.len() != dim {
            return Err(format_err(
                path,
                line,
                format!("declared dim {dim} but found {} components", comps.len()),
            ));
        }
        let vector =
            EmbeddingVector::new(comps).map_err(|e| format_err(path, line, e.to_string()))?;
        out.push(EmbeddingRecord {
            line,
            frame_index,
            vector,
        });
    }
    Ok(out)
}

pub fn parse_question(path: &Path, text: &str) -> Result<EmbeddingVector> {
    let mut recs = parse_records(path, text)?;
    match recs.len() {
        1 if recs[0].frame_index == -1 => Ok(recs.remove(0).vector),
        1 => Err(format_err(path, recs[0].line, "question record must have frame index -1")),
        n => Err(format_err(path, 1, format!("expected one question record, found {n}"))),
    }
}

pub fn parse_frames(path: &Path, text: &str) -> Result<Vec<EmbeddingVector>> {
    let recs = parse_records(path, text)?;
    let n = recs.len();
    let mut slots: Vec<Option<EmbeddingVector>> = vec![None; n];
    let mut dim = None;
    for r in recs {
        let idx = usize::try_from(r.frame_index)
            .ok()
            .filter(|&i| i < n)
            .ok_or_else(|| format_err(path, r.line, format!("frame index {} outside 0..{n}", r.frame_index)))?;
        let d = *dim.get_or_insert(r.vector.dim());
        if r.vector.dim() != d {
            return Err(Error::Scorer(ScoreError::DimMismatch {
                expected: d,
                found: r.vector.dim(),
            }));
        }
        if slots[idx].replace(r.vector).is_some() {
            return Err(format_err(path, r.line, format!("duplicate frame index {idx}")));
        }
    }
    Ok(slots.into_iter().map(|s| s.expect("n distinct indices below n")).collect())
}

/// Load a question file and a frames file into a scorer.
pub fn embedding_file_scorer(question_file: &Path, frames_file: &Path) -> Result<EmbeddingScorer> {
    let q = parse_question(question_file, &read_text(question_file)?)?;
    let frames = parse_frames(frames_file, &read_text(frames_file)?)?;
    Ok(EmbeddingScorer::new(&q, &frames)?)
}

/// Render records in the file format.
pub fn format_record(frame_index: i64, v: &EmbeddingVector) -> String {
    let mut s = format!("{frame_index} {}", v.dim());
    for c in v.components() {
        s.push(' ');
        s.push_str(&c.to_string());
    }
    s
}
