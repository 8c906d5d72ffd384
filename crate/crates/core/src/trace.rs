//! Per-frame confidence observations in scoring order.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::interval::FrameIndex;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSample {
    pub frame: FrameIndex,
    pub confidence: f64,
}

/// Which part of the locator asked for a score.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Stream,
    Backward,
    Forward,
    Fallback,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Stream => "stream",
            Phase::Backward => "backward",
            Phase::Forward => "forward",
            Phase::Fallback => "fallback",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "stream" => Phase::Stream,
            "backward" => Phase::Backward,
            "forward" => Phase::Forward,
            "fallback" => Phase::Fallback,
            _ => return None,
        })
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every scorer invocation of one locator run, in call order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceTrace {
    samples: Vec<ConfidenceSample>,
    phases: Vec<Phase>,
}

impl ConfidenceTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, phase: Phase, frame: FrameIndex, confidence: f64) {
        self.samples.push(ConfidenceSample { frame, confidence });
        self.phases.push(phase);
    }

    pub fn frames_scored(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[ConfidenceSample] {
        &self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = (Phase, ConfidenceSample)> + '_ {
        self.phases.iter().copied().zip(self.samples.iter().copied())
    }

    pub fn count_phase(&self, phase: Phase) -> usize {
        self.phases.iter().filter(|&&p| p == phase).count()
    }

    /// Highest frame index ever scored.
    pub fn max_frame(&self) -> Option<FrameIndex> {
        self.samples.iter().map(|s| s.frame).max()
    }
}
