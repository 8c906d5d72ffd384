//! On-disk record shapes that are not core types.

use std::path::Path;

use serde::{Deserialize, Serialize};
use stream_locator_core::composer::{
    ClipKind, QAAnnotation, QaPool, SourceClip, DEFAULT_ANSWER_SPACE,
};
use stream_locator_core::eval::EvalReport;
use stream_locator_core::sampler::SampleStrategy;
use stream_locator_core::{ConfidenceTrace, FrameIndex, Phase, QuestionContext, QuestionType};

use crate::error::{Error, Result};
use crate::files::read_jsonl;

/// One scored frame: `phase, frame_index, confidence`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub phase: Phase,
    pub frame_index: u64,
    pub confidence: f64,
}

pub fn trace_records(trace: &ConfidenceTrace) -> Vec<TraceRecord> {
    trace
        .iter()
        .map(|(phase, s)| TraceRecord {
            phase,
            frame_index: s.frame.get(),
            confidence: s.confidence,
        })
        .collect()
}

pub fn trace_csv(trace: &ConfidenceTrace) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in trace_records(trace) {
        w.serialize(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

pub fn parse_trace_csv(text: &str) -> std::result::Result<Vec<TraceRecord>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes()).deserialize().collect()
}

/// Line record of a QA pool file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaRecord {
    pub clip_id: String,
    pub question_text: String,
    pub question_type: QuestionType,
    pub answer_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_space_size: Option<u32>,
}

pub fn read_qa_pool(path: &Path) -> Result<QaPool> {
    let records: Vec<QaRecord> = read_jsonl(path)?;
    Ok(records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let qa = QAAnnotation {
                question: QuestionContext {
                    question_id: r.question_id.unwrap_or_else(|| format!("{}_q{i}", r.clip_id)),
                    question_text: r.question_text,
                    question_type: r.question_type,
                    embedding: None,
                },
                answer_label: r.answer_label,
                answer_space_size: r.answer_space_size.unwrap_or(DEFAULT_ANSWER_SPACE),
            };
            (r.clip_id, qa)
        })
        .collect())
}

pub fn qa_records(pool: &QaPool) -> Vec<QaRecord> {
    pool.iter()
        .map(|(clip, qa)| QaRecord {
            clip_id: clip.to_owned(),
            question_text: qa.question.question_text.clone(),
            question_type: qa.question.question_type,
            answer_label: qa.answer_label.clone(),
            question_id: Some(qa.question.question_id.clone()),
            answer_space_size: Some(qa.answer_space_size),
        })
        .collect()
}

/// Read a clip listing and require every clip to be of `kind`.
pub fn read_clips(path: &Path, kind: ClipKind) -> Result<Vec<SourceClip>> {
    let clips: Vec<SourceClip> = read_jsonl(path)?;
    if let Some((i, c)) = clips.iter().enumerate().find(|(_, c)| c.kind != kind) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("clip {:?} is {:?}, expected {kind:?}", c.clip_id, c.kind),
        });
    }
    Ok(clips)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocateFailure {
    pub video_id: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocateSummary {
    pub videos: usize,
    pub succeeded: usize,
    pub frames_scored: u64,
    pub full_scan_frames: u64,
    pub failures: Vec<LocateFailure>,
}

/// Frames handed to the answering stage. `answer` stays empty until a model is attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub video_id: String,
    pub question_id: String,
    pub strategy: SampleStrategy,
    pub frames: Vec<FrameIndex>,
    pub answer: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportRow<'a> {
    video_id: &'a str,
    question_type: QuestionType,
    iou: f64,
    hit: bool,
    frames_scored: u64,
    full_scan_frames: u64,
    frames_ratio: f64,
    boundary_error_start: i64,
    boundary_error_end: i64,
}

pub fn report_csv(report: &EvalReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.per_video {
        w.serialize(ReportRow {
            video_id: &r.video_id,
            question_type: r.question_type,
            iou: r.iou,
            hit: r.hit,
            frames_scored: r.frames_scored,
            full_scan_frames: r.full_scan_frames,
            frames_ratio: r.frames_ratio(),
            boundary_error_start: r.boundary_error_start,
            boundary_error_end: r.boundary_error_end,
        })
        .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}
