//! Online target-event localization.
//!
//! Frames are scored in stream order until one reaches `c_max`. From that
//! trigger the locator probes backward and forward at cumulative Fibonacci
//! offsets (1, 2, 4, 7, 12, ...) until a probe falls below `c_min`. The
//! located event spans everything strictly between the two failing probes, so
//! the true boundary lies within one overshoot gap of each reported end.
//! A probe that would leave the stream is clamped to the first or last frame.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Fallback, ForwardMode, HysteresisConfig};
use crate::interval::{interval_union, FrameIndex, FrameInterval};
use crate::scorer::{FrameScorer, QuestionContext, ScoreError};
use crate::trace::{ConfidenceTrace, Phase};

/// Fibonacci gaps `1, 1, 2, 3, 5, ...` whose running sum stays within `limit`.
pub fn fib_gaps(limit: u64) -> Vec<u64> {
    FibOffsets::new()
        .take_while(|&(_, offset)| offset <= limit)
        .map(|(gap, _)| gap)
        .collect()
}

/// Infinite iterator of `(gap, cumulative offset)` pairs: `(1,1), (1,2), (2,4), (3,7), ...`.
///
/// Saturates at `u64::MAX` instead of overflowing.
#[derive(Clone, Debug)]
pub struct FibOffsets {
    gap: u64,
    next_gap: u64,
    offset: u64,
}

impl FibOffsets {
    pub fn new() -> Self {
        Self {
            gap: 1,
            next_gap: 1,
            offset: 0,
        }
    }
}

impl Default for FibOffsets {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for FibOffsets {
    type Item = (u64, u64);

    fn next(&mut self) -> Option<Self::Item> {
        let gap = self.gap;
        self.offset = self.offset.saturating_add(gap);
        self.gap = self.next_gap;
        self.next_gap = gap.saturating_add(self.next_gap);
        Some((gap, self.offset))
    }
}

/// Cumulative offset reached after `k` Fibonacci gaps.
pub fn fib_reach(k: u32) -> u64 {
    FibOffsets::new()
        .nth(k.saturating_sub(1) as usize)
        .map_or(0, |(_, offset)| if k == 0 { 0 } else { offset })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocatorMode {
    Online,
    FallbackTwoPass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocatorOutcome {
    pub target: FrameInterval,
    pub trigger: FrameIndex,
    pub trace: ConfidenceTrace,
    pub terminated_early: bool,
    pub mode: LocatorMode,
    pub backward_overshoot_gap: u64,
    pub forward_overshoot_gap: u64,
    /// Thresholds the traversal actually used (adjusted under the fallback rule).
    pub c_max_used: f64,
    pub c_min_used: f64,
}

impl LocatorOutcome {
    pub fn frames_scored(&self) -> usize {
        self.trace.frames_scored()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocateErrorKind {
    #[error("stream is empty")]
    EmptyStream,
    #[error("no frame reached the trigger threshold")]
    NoTrigger,
    #[error(transparent)]
    Scorer(ScoreError),
}

/// A failed run, carrying every score gathered before the failure.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind}")]
pub struct LocateError {
    pub kind: LocateErrorKind,
    pub trace: ConfidenceTrace,
}

struct Run<'a, S: ?Sized> {
    scorer: &'a mut S,
    question: &'a QuestionContext,
    trace: ConfidenceTrace,
    len: Option<u64>,
}

struct Bounds {
    target: FrameInterval,
    backward_gap: u64,
    forward_gap: u64,
}

impl<'a, S: FrameScorer + ?Sized> Run<'a, S> {
    fn new(scorer: &'a mut S, question: &'a QuestionContext, len: Option<u64>) -> Self {
        let len = len.or_else(|| scorer.frame_count());
        Self {
            scorer,
            question,
            trace: ConfidenceTrace::new(),
            len,
        }
    }

    fn fail(self, kind: LocateErrorKind) -> LocateError {
        LocateError {
            kind,
            trace: self.trace,
        }
    }

    /// `Ok(None)` means the frame lies past the end of a stream of unknown length.
    fn score(&mut self, phase: Phase, frame: u64) -> Result<Option<f64>, ScoreError> {
        match self.scorer.score(self.question, FrameIndex(frame)) {
            Ok(c) => {
                self.trace.push(phase, FrameIndex(frame), c);
                Ok(Some(c))
            }
            Err(ScoreError::OutOfRange { .. }) if self.len.is_none() => {
                self.len = Some(frame);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    /// Stream phase. Returns the trigger, or `None` once the stream is exhausted.
    fn stream(&mut self, c_max: f64) -> Result<Option<u64>, ScoreError> {
        let mut frame = 0u64;
        loop {
            if self.len.is_some_and(|l| frame >= l) {
                return Ok(None);
            }
            match self.score(Phase::Stream, frame)? {
                None => return Ok(None),
                Some(c) if c >= c_max => return Ok(Some(frame)),
                Some(_) => frame += 1,
            }
        }
    }

    /// Returns `(start, gap)`.
    fn backward(&mut self, trigger: u64, c_min: f64) -> Result<(u64, u64), ScoreError> {
        let mut good = trigger;
        for (_, offset) in FibOffsets::new() {
            if good == 0 {
                return Ok((0, 0));
            }
            let probe = trigger.saturating_sub(offset);
            // Probes in front of the trigger are always inside the stream.
            let c = self
                .score(Phase::Backward, probe)?
                .ok_or(ScoreError::OutOfRange {
                    frame: probe,
                    len: self.len,
                })?;
            if c < c_min {
                return Ok((probe + 1, good - probe));
            }
            good = probe;
        }
        unreachable!("Fibonacci offsets are unbounded")
    }

    /// Returns `(end, gap)` for the until-below-min mode.
    fn forward(&mut self, trigger: u64, c_min: f64) -> Result<(u64, u64), ScoreError> {
        let mut good = trigger;
        for (_, offset) in FibOffsets::new() {
            let mut probe = trigger.saturating_add(offset);
            if let Some(len) = self.len {
                if good + 1 >= len {
                    return Ok((len, 0));
                }
                probe = probe.min(len - 1);
            }
            match self.score(Phase::Forward, probe)? {
                None => return Ok((good + 1, probe - good)),
                Some(c) if c < c_min => return Ok((probe, probe - good)),
                Some(_) => good = probe,
            }
            if good == u64::MAX {
                return Ok((good, 0));
            }
        }
        unreachable!("Fibonacci offsets are unbounded")
    }

    fn traverse(
        &mut self,
        trigger: u64,
        c_min: f64,
        mode: ForwardMode,
    ) -> Result<Bounds, ScoreError> {
        let (start, backward_gap) = self.backward(trigger, c_min)?;
        let (end, forward_gap) = match mode {
            ForwardMode::UntilBelowMin => self.forward(trigger, c_min)?,
            ForwardMode::FixedExtent { k } => {
                let reach = trigger.saturating_add(fib_reach(k).max(1));
                (self.len.map_or(reach, |l| reach.min(l)), 0)
            }
        };
        let before = FrameInterval::new(start, trigger + 1).expect("backward start <= trigger");
        let after = FrameInterval::new(trigger, end).expect("forward end > trigger");
        let target = interval_union(before, after).expect("both halves contain the trigger");
        Ok(Bounds {
            target,
            backward_gap,
            forward_gap,
        })
    }
}

/// Single-pass online localization.
///
/// `stream_length` overrides the scorer's own frame count. When neither is
/// known, an out-of-range answer from the scorer marks the end of the stream.
pub fn locate_online<S: FrameScorer + ?Sized>(
    scorer: &mut S,
    question: &QuestionContext,
    config: &HysteresisConfig,
    stream_length: Option<u64>,
) -> Result<LocatorOutcome, LocateError> {
    let mut run = Run::new(scorer, question, stream_length);
    let trigger = match run.stream(config.c_max()) {
        Ok(Some(f)) => f,
        Ok(None) if run.trace.is_empty() => return Err(run.fail(LocateErrorKind::EmptyStream)),
        Ok(None) => return Err(run.fail(LocateErrorKind::NoTrigger)),
        Err(e) => return Err(run.fail(LocateErrorKind::Scorer(e))),
    };
    let terminated_early = run.len.is_none_or(|l| trigger + 1 < l);
    match run.traverse(trigger, config.c_min(), config.forward_mode()) {
        Ok(b) => Ok(LocatorOutcome {
            target: b.target,
            trigger: FrameIndex(trigger),
            trace: run.trace,
            terminated_early,
            mode: LocatorMode::Online,
            backward_overshoot_gap: b.backward_gap,
            forward_overshoot_gap: b.forward_gap,
            c_max_used: config.c_max(),
            c_min_used: config.c_min(),
        }),
        Err(e) => Err(run.fail(LocateErrorKind::Scorer(e))),
    }
}

/// Online localization that falls back to the two-pass max rule when nothing triggers.
///
/// The fallback rescans the whole stream, takes the maximum confidence as the
/// trigger threshold and `max - delta` as the boundary threshold, then
/// traverses around the earliest maximum. With `Fallback::None` this is
/// exactly [`locate_online`].
pub fn locate_with_fallback<S: FrameScorer + ?Sized>(
    scorer: &mut S,
    question: &QuestionContext,
    config: &HysteresisConfig,
    stream_length: u64,
) -> Result<LocatorOutcome, LocateError> {
    let first = locate_online(scorer, question, config, Some(stream_length));
    let delta = match (config.fallback(), &first) {
        (
            Fallback::TwoPassMaxRule { delta },
            Err(LocateError {
                kind: LocateErrorKind::NoTrigger,
                ..
            }),
        ) => delta,
        _ => return first,
    };
    let Err(LocateError { trace, .. }) = first else {
        unreachable!()
    };

    let mut run = Run::new(scorer, question, Some(stream_length));
    run.trace = trace;
    let mut best: Option<(u64, f64)> = None;
    for frame in 0..stream_length {
        match run.score(Phase::Fallback, frame) {
            Ok(Some(c)) => {
                if best.is_none_or(|(_, b)| c > b) {
                    best = Some((frame, c));
                }
            }
            Ok(None) => break,
            Err(e) => return Err(run.fail(LocateErrorKind::Scorer(e))),
        }
    }
    let Some((trigger, c_max)) = best else {
        return Err(run.fail(LocateErrorKind::EmptyStream));
    };
    let c_min = c_max - delta;
    match run.traverse(trigger, c_min, config.forward_mode()) {
        Ok(b) => Ok(LocatorOutcome {
            target: b.target,
            trigger: FrameIndex(trigger),
            trace: run.trace,
            terminated_early: false,
            mode: LocatorMode::FallbackTwoPass,
            backward_overshoot_gap: b.backward_gap,
            forward_overshoot_gap: b.forward_gap,
            c_max_used: c_max,
            c_min_used: c_min,
        }),
        Err(e) => Err(run.fail(LocateErrorKind::Scorer(e))),
    }
}

/// Exhaustive reference: score every frame, take the earliest frame at or above
/// `c_max` (or the earliest maximum under the fallback rule), and return the
/// maximal run of frames at or above `c_min` around it.
pub fn linear_scan_oracle<S: FrameScorer + ?Sized>(
    scorer: &mut S,
    question: &QuestionContext,
    config: &HysteresisConfig,
    stream_length: u64,
) -> Result<FrameInterval, LocateError> {
    let mut run = Run::new(scorer, question, Some(stream_length));
    let mut values = Vec::with_capacity(stream_length as usize);
    for frame in 0..stream_length {
        match run.score(Phase::Stream, frame) {
            Ok(Some(c)) => values.push(c),
            Ok(None) => break,
            Err(e) => return Err(run.fail(LocateErrorKind::Scorer(e))),
        }
    }
    if values.is_empty() {
        return Err(run.fail(LocateErrorKind::EmptyStream));
    }
    let (trigger, c_min) = match values.iter().position(|&c| c >= config.c_max()) {
        Some(f) => (f, config.c_min()),
        None => match config.fallback() {
            Fallback::TwoPassMaxRule { delta } => {
                let (f, max) = values.iter().copied().enumerate().fold(
                    (0, f64::NEG_INFINITY),
                    |(bf, bc), (f, c)| if c > bc { (f, c) } else { (bf, bc) },
                );
                (f, max - delta)
            }
            Fallback::None => return Err(run.fail(LocateErrorKind::NoTrigger)),
        },
    };
    let mut start = trigger;
    while start > 0 && values[start - 1] >= c_min {
        start -= 1;
    }
    let mut end = trigger + 1;
    while end < values.len() && values[end] >= c_min {
        end += 1;
    }
    Ok(FrameInterval::new(start as u64, end as u64).expect("start <= end"))
}
