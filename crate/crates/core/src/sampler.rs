//! Frame selection inside a located event for the answering stage.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{FrameIndex, FrameInterval};
use crate::locator::FibOffsets;
use crate::rng::SeededRng;

/// Number of frames handed to the answerer unless configured otherwise.
pub const DEFAULT_SAMPLE_FRAMES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum SampleError {
    #[error("cannot sample from an empty interval")]
    EmptyInterval,
    #[error("sample size must be at least 1")]
    ZeroFrames,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SampleStrategy {
    Fibonacci,
    UniformRandom { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub interval: FrameInterval,
    pub n: usize,
    pub strategy: SampleStrategy,
}

impl SamplePlan {
    pub fn new(interval: FrameInterval, n: usize, strategy: SampleStrategy) -> Result<Self, SampleError> {
        check(&interval, n)?;
        Ok(Self { interval, n, strategy })
    }

    pub fn run(&self) -> Result<Vec<FrameIndex>, SampleError> {
        match self.strategy {
            SampleStrategy::Fibonacci => sample_fibonacci(&self.interval, self.n),
            SampleStrategy::UniformRandom { seed } => sample_uniform_random(&self.interval, self.n, seed),
        }
    }
}

fn check(interval: &FrameInterval, n: usize) -> Result<(), SampleError> {
    if interval.is_empty() {
        return Err(SampleError::EmptyInterval);
    }
    if n == 0 {
        return Err(SampleError::ZeroFrames);
    }
    Ok(())
}

/// Frames at cumulative Fibonacci offsets `0, 1, 2, 4, 7, 12, ...` back from the
/// last frame of `interval`, densest near the present. Sorted ascending.
///
/// When `n` covers the whole interval, every frame is returned.
pub fn sample_fibonacci(interval: &FrameInterval, n: usize) -> Result<Vec<FrameIndex>, SampleError> {
    check(interval, n)?;
    if n as u64 >= interval.len() {
        return Ok(interval.iter().collect());
    }
    let last = interval.end().get() - 1;
    let len = interval.len();
    let mut frames: Vec<FrameIndex> = core::iter::once(0)
        .chain(FibOffsets::new().map(|(_, o)| o))
        .take_while(|&o| o < len)
        .take(n)
        .map(|o| FrameIndex(last - o))
        .collect();
    frames.reverse();
    Ok(frames)
}

/// `min(n, |interval|)` distinct frames drawn uniformly without replacement
/// (Floyd's algorithm over the seeded generator). Sorted ascending.
pub fn sample_uniform_random(
    interval: &FrameInterval,
    n: usize,
    seed: u64,
) -> Result<Vec<FrameIndex>, SampleError> {
    check(interval, n)?;
    let len = interval.len();
    let k = (n as u64).min(len);
    let mut rng = SeededRng::new(seed);
    let mut picked = BTreeSet::new();
    for j in (len - k)..len {
        let t = rng.below(j + 1);
        if !picked.insert(t) {
            picked.insert(j);
        }
    }
    let base = interval.start().get();
    Ok(picked.into_iter().map(|o| FrameIndex(base + o)).collect())
}
