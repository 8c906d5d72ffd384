//! Localization metrics against composed ground truth.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::composer::CompositionManifest;
use crate::interval::{temporal_iou, FrameIndex, FrameInterval};
use crate::locator::{LocatorMode, LocatorOutcome};
use crate::scorer::QuestionType;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("video {0:?} has no counterpart on the other side of the join")]
    Unmatched(String),
    #[error("video {0:?} appears more than once")]
    Duplicate(String),
}

/// The exported form of one locator outcome (no trace).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub video_id: String,
    pub target: FrameInterval,
    pub trigger: FrameIndex,
    pub mode: LocatorMode,
    pub terminated_early: bool,
    pub backward_overshoot_gap: u64,
    pub forward_overshoot_gap: u64,
    pub frames_scored: u64,
    pub c_max_used: f64,
    pub c_min_used: f64,
}

impl OutcomeRecord {
    pub fn from_outcome(video_id: impl Into<String>, outcome: &LocatorOutcome) -> Self {
        Self {
            video_id: video_id.into(),
            target: outcome.target,
            trigger: outcome.trigger,
            mode: outcome.mode,
            terminated_early: outcome.terminated_early,
            backward_overshoot_gap: outcome.backward_overshoot_gap,
            forward_overshoot_gap: outcome.forward_overshoot_gap,
            frames_scored: outcome.frames_scored() as u64,
            c_max_used: outcome.c_max_used,
            c_min_used: outcome.c_min_used,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VideoRow {
    pub video_id: String,
    pub question_type: QuestionType,
    pub iou: f64,
    pub hit: bool,
    pub frames_scored: u64,
    pub full_scan_frames: u64,
    /// `target.start - truth.start`.
    pub boundary_error_start: i64,
    /// `target.end - truth.end`.
    pub boundary_error_end: i64,
}

impl VideoRow {
    pub fn frames_ratio(&self) -> f64 {
        self.frames_scored as f64 / self.full_scan_frames as f64
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub count: usize,
    pub mean_iou: f64,
    pub hit_rate: f64,
    pub mean_frames_ratio: f64,
}

impl GroupStats {
    pub fn of<'a>(rows: impl IntoIterator<Item = &'a VideoRow>) -> Self {
        let (mut n, mut iou, mut hits, mut ratio) = (0usize, 0.0, 0usize, 0.0);
        for r in rows {
            n += 1;
            iou += r.iou;
            hits += usize::from(r.hit);
            ratio += r.frames_ratio();
        }
        if n == 0 {
            return Self::default();
        }
        let nf = n as f64;
        Self {
            count: n,
            mean_iou: iou / nf,
            hit_rate: hits as f64 / nf,
            mean_frames_ratio: ratio / nf,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    #[serde(flatten)]
    pub overall: GroupStats,
    pub per_question_type: BTreeMap<QuestionType, GroupStats>,
}

impl Aggregates {
    /// Recompute from rows; every question type is present, empty ones as zeros.
    pub fn from_rows(rows: &[VideoRow]) -> Self {
        let per_question_type = QuestionType::ALL
            .iter()
            .map(|&t| (t, GroupStats::of(rows.iter().filter(|r| r.question_type == t))))
            .collect();
        Self {
            overall: GroupStats::of(rows),
            per_question_type,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_video: Vec<VideoRow>,
    pub aggregates: Aggregates,
}

fn index_unique<T>(
    items: &[T],
    key: impl Fn(&T) -> &str,
) -> Result<BTreeMap<&str, &T>, EvalError> {
    let mut map = BTreeMap::new();
    for it in items {
        if map.insert(key(it), it).is_some() {
            return Err(EvalError::Duplicate(String::from(key(it))));
        }
    }
    Ok(map)
}

fn signed_diff(a: FrameIndex, b: FrameIndex) -> i64 {
    a.get() as i64 - b.get() as i64
}

/// Join outcomes with manifests one-to-one and score each video. Rows follow manifest order.
pub fn evaluate_run(
    outcomes: &[OutcomeRecord],
    manifests: &[CompositionManifest],
) -> Result<EvalReport, EvalError> {
    let by_id = index_unique(outcomes, |o| o.video_id.as_str())?;
    index_unique(manifests, |m| m.video_id())?;
    if let Some(o) = outcomes
        .iter()
        .find(|o| !manifests.iter().any(|m| m.video_id() == o.video_id))
    {
        return Err(EvalError::Unmatched(o.video_id.clone()));
    }
    let per_video = manifests
        .iter()
        .map(|m| {
            let o = by_id
                .get(m.video_id())
                .ok_or_else(|| EvalError::Unmatched(String::from(m.video_id())))?;
            let truth = m.ground_truth();
            Ok(VideoRow {
                video_id: o.video_id.clone(),
                question_type: m.qa().question.question_type,
                iou: temporal_iou(&o.target, &truth),
                hit: truth.contains(o.trigger),
                frames_scored: o.frames_scored,
                full_scan_frames: m.total_length(),
                boundary_error_start: signed_diff(o.target.start(), truth.start()),
                boundary_error_end: signed_diff(o.target.end(), truth.end()),
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    let aggregates = Aggregates::from_rows(&per_video);
    Ok(EvalReport {
        per_video,
        aggregates,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub video_id: String,
    pub start_gap_ok: bool,
    pub end_gap_ok: bool,
}

impl OracleCheck {
    pub fn ok(&self) -> bool {
        self.start_gap_ok && self.end_gap_ok
    }
}

/// Check each boundary against the exhaustive oracle within the recorded overshoot gap.
pub fn compare_oracle(
    outcomes: &[OutcomeRecord],
    oracle_intervals: &[(String, FrameInterval)],
) -> Result<Vec<OracleCheck>, EvalError> {
    let oracle = index_unique(oracle_intervals, |(id, _)| id.as_str())?;
    if oracle.len() != outcomes.len() {
        if let Some((id, _)) = oracle_intervals
            .iter()
            .find(|(id, _)| !outcomes.iter().any(|o| &o.video_id == id))
        {
            return Err(EvalError::Unmatched(id.clone()));
        }
    }
    outcomes
        .iter()
        .map(|o| {
            let (_, truth) = oracle
                .get(o.video_id.as_str())
                .ok_or_else(|| EvalError::Unmatched(o.video_id.clone()))?;
            Ok(OracleCheck {
                video_id: o.video_id.clone(),
                start_gap_ok: signed_diff(o.target.start(), truth.start()).unsigned_abs()
                    <= o.backward_overshoot_gap,
                end_gap_ok: signed_diff(o.target.end(), truth.end()).unsigned_abs()
                    <= o.forward_overshoot_gap,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composer::{compose, QAAnnotation, QaPool, SourceClip, ClipKind};
    use crate::scorer::QuestionContext;
    use proptest::prelude::*;
    use std::format;
    use std::vec;

    fn manifests(n: usize) -> Vec<CompositionManifest> {
        let t: Vec<_> = (0..n).map(|i| SourceClip::new(format!("t{i}"), 10, ClipKind::Target)).collect();
        let b: Vec<_> = (0..n).map(|i| SourceClip::new(format!("b{i}"), 40, ClipKind::Background)).collect();
        let pool: QaPool = t
            .iter()
            .enumerate()
            .map(|(i, c)| {
                (c.clip_id.clone(), QAAnnotation {
                    question: QuestionContext {
                        question_id: format!("q{i}"),
                        question_text: "who".into(),
                        question_type: QuestionType::ALL[i % 5],
                        embedding: None,
                    },
                    answer_label: "x".into(),
                    answer_space_size: 1290,
                })
            })
            .collect();
        compose(&t, &b, &pool, 2).unwrap()
    }

    fn record(id: &str, target: FrameInterval, trigger: u64, frames: u64) -> OutcomeRecord {
        OutcomeRecord {
            video_id: id.into(),
            target,
            trigger: FrameIndex(trigger),
            mode: LocatorMode::Online,
            terminated_early: true,
            backward_overshoot_gap: 1,
            forward_overshoot_gap: 3,
            frames_scored: frames,
            c_max_used: 0.4,
            c_min_used: 0.3,
        }
    }

    #[test]
    fn exact_and_disjoint() {
        let ms = manifests(2);
        let gt0 = ms[0].ground_truth();
        let gt1 = ms[1].ground_truth();
        let far = if gt1.start().get() >= 2 {
            FrameInterval::new(0, 1).unwrap()
        } else {
            FrameInterval::new(ms[1].total_length() - 1, ms[1].total_length()).unwrap()
        };
        let outs = vec![
            record(ms[0].video_id(), gt0, gt0.start().get(), 20),
            record(ms[1].video_id(), far, far.start().get(), 50),
        ];
        let r = evaluate_run(&outs, &ms).unwrap();
        assert_eq!((r.per_video[0].iou, r.per_video[0].hit), (1.0, true));
        assert_eq!((r.per_video[1].iou, r.per_video[1].hit), (0.0, false));
        assert_eq!(r.aggregates.overall.hit_rate, 0.5);
        assert_eq!(r.aggregates.overall.mean_frames_ratio, (20.0 / 50.0 + 50.0 / 50.0) / 2.0);
        assert_eq!(r.aggregates.per_question_type.len(), 5);
    }

    #[test]
    fn join_errors() {
        let ms = manifests(2);
        let gt = ms[0].ground_truth();
        let only_one = vec![record(ms[0].video_id(), gt, gt.start().get(), 1)];
        assert_eq!(evaluate_run(&only_one, &ms), Err(EvalError::Unmatched(ms[1].video_id().into())));
        let stray = vec![record("nope", gt, 0, 1), record(ms[0].video_id(), gt, 0, 1)];
        assert_eq!(evaluate_run(&stray, &ms[..1]), Err(EvalError::Unmatched("nope".into())));
        let dup = vec![record(ms[0].video_id(), gt, 0, 1), record(ms[0].video_id(), gt, 0, 1)];
        assert!(matches!(evaluate_run(&dup, &ms[..1]), Err(EvalError::Duplicate(_))));
    }

    #[test]
    fn oracle_comparison() {
        let iv = |s, e| FrameInterval::new(s, e).unwrap();
        let good = record("a", iv(10, 23), 10, 5);
        let bad = record("b", iv(7, 20), 10, 5);
        let oracle = vec![("a".into(), iv(10, 20)), ("b".into(), iv(10, 20))];
        let checks = compare_oracle(&[good, bad], &oracle).unwrap();
        assert!(checks[0].ok());
        assert!(!checks[1].start_gap_ok && checks[1].end_gap_ok);
        assert!(compare_oracle(&[], &[]).unwrap().is_empty());
        assert!(compare_oracle(&[record("c", iv(0, 1), 0, 1)], &oracle[..1]).is_err());
    }

    proptest! {
        #[test]
        fn aggregates_recompute_and_round_trip(seed in 0u64..1000, n in 1usize..30) {
            let ms = manifests(n);
            let outs: Vec<_> = ms.iter().enumerate().map(|(i, m)| {
                let len = m.total_length();
                let s = (seed + i as u64 * 7) % len;
                let e = (s + 1 + (seed % 17)).min(len);
                record(m.video_id(), FrameInterval::new(s, e).unwrap(), s, 1 + (seed + i as u64) % len)
            }).collect();
            let r = evaluate_run(&outs, &ms).unwrap();
            prop_assert_eq!(&Aggregates::from_rows(&r.per_video), &r.aggregates);
            prop_assert!(r.per_video.iter().all(|row| (0.0..=1.0).contains(&row.iou)));
            let text = serde_json::to_string(&r).unwrap();
            prop_assert_eq!(serde_json::from_str::<EvalReport>(&text).unwrap(), r);
        }
    }
}
