//! Frame indices and half-open frame intervals.

use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a frame in a stream sampled at the configured scan rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrameIndex(pub u64);

impl FrameIndex {
    pub const fn new(value: u64) -> Self {
        Self(value)
    }

    pub const fn get(self) -> u64 {
        self.0
    }
}

impl From<u64> for FrameIndex {
    fn from(value: u64) -> Self {
        Self(value)
    }
}

impl fmt::Display for FrameIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("interval start {start} is after end {end}")]
    Inverted { start: u64, end: u64 },
    #[error("intervals [{0}) and [{1}) are separated by a gap")]
    DisjointIntervals(FrameInterval, FrameInterval),
}

/// Half-open interval `[start, end)` of frame indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct FrameInterval {
    start: FrameIndex,
    end: FrameIndex,
}

#[derive(Serialize, Deserialize)]
struct RawInterval {
    start: u64,
    end: u64,
}

impl TryFrom<RawInterval> for FrameInterval {
    type Error = IntervalError;

    fn try_from(raw: RawInterval) -> Result<Self, Self::Error> {
        FrameInterval::new(raw.start, raw.end)
    }
}

impl From<FrameInterval> for RawInterval {
    fn from(iv: FrameInterval) -> Self {
        RawInterval {
            start: iv.start.0,
            end: iv.end.0,
        }
    }
}

impl fmt::Display for FrameInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.start, self.end)
    }
}

impl FrameInterval {
    pub fn new(start: u64, end: u64) -> Result<Self, IntervalError> {
        if start > end {
            return Err(IntervalError::Inverted { start, end });
        }
        Ok(Self {
            start: FrameIndex(start),
            end: FrameIndex(end),
        })
    }

    /// The interval `[start, start + len)`.
    pub fn with_len(start: u64, len: u64) -> Self {
        Self {
            start: FrameIndex(start),
            end: FrameIndex(start + len),
        }
    }

    /// The one-frame interval containing `frame`.
    pub fn singleton(frame: FrameIndex) -> Self {
        Self::with_len(frame.0, 1)
    }

    pub fn start(&self) -> FrameIndex {
        self.start
    }

    pub fn end(&self) -> FrameIndex {
        self.end
    }

    pub fn len(&self) -> u64 {
        self.end.0 - self.start.0
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, frame: FrameIndex) -> bool {
        self.start <= frame && frame < self.end
    }

    /// Whether `other` lies entirely inside `self`. The empty interval is contained everywhere.
    pub fn contains_interval(&self, other: &FrameInterval) -> bool {
        other.is_empty() || (self.start <= other.start && other.end <= self.end)
    }

    pub fn intersection_len(&self, other: &FrameInterval) -> u64 {
        let lo = self.start.max(other.start).0;
        let hi = self.end.min(other.end).0;
        hi.saturating_sub(lo)
    }

    pub fn iter(&self) -> impl Iterator<Item = FrameIndex> + Clone {
        (self.start.0..self.end.0).map(FrameIndex)
    }
}

/// Smallest interval covering two overlapping or adjacent intervals.
///
/// An empty operand is absorbed by the other one.
pub fn interval_union(a: FrameInterval, b: FrameInterval) -> Result<FrameInterval, IntervalError> {
    if a.is_empty() {
        return Ok(b);
    }
    if b.is_empty() {
        return Ok(a);
    }
    let (first, second) = if a.start <= b.start { (a, b) } else { (b, a) };
    if first.end < second.start {
        return Err(IntervalError::DisjointIntervals(a, b));
    }
    Ok(FrameInterval {
        start: first.start,
        end: first.end.max(second.end),
    })
}

/// Temporal intersection-over-union, `|a ∩ b| / |a ∪ b|`, with the empty/empty case defined as 0.
pub fn temporal_iou(a: &FrameInterval, b: &FrameInterval) -> f64 {
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn iv(s: u64, e: u64) -> FrameInterval {
        FrameInterval::new(s, e).unwrap()
    }

    fn brute_iou(a: &FrameInterval, b: &FrameInterval) -> f64 {
        let sa: BTreeSet<u64> = (a.start.0..a.end.0).collect();
        let sb: BTreeSet<u64> = (b.start.0..b.end.0).collect();
        let inter = sa.intersection(&sb).count();
        let union = sa.union(&sb).count();
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }

    #[test]
    fn union_examples() {
        assert_eq!(interval_union(iv(0, 5), iv(5, 9)).unwrap(), iv(0, 9));
        assert_eq!(interval_union(iv(3, 7), iv(3, 7)).unwrap(), iv(3, 7));
        assert_eq!(interval_union(iv(2, 6), iv(4, 10)).unwrap(), iv(2, 10));
    }

    #[test]
    fn union_rejects_gap() {
        assert!(matches!(
            interval_union(iv(0, 4), iv(5, 9)),
            Err(IntervalError::DisjointIntervals(..))
        ));
    }

    #[test]
    fn inverted_interval_rejected() {
        assert_eq!(
            FrameInterval::new(5, 4),
            Err(IntervalError::Inverted { start: 5, end: 4 })
        );
    }

    #[test]
    fn iou_examples() {
        assert_eq!(temporal_iou(&iv(0, 10), &iv(0, 10)), 1.0);
        assert_eq!(temporal_iou(&iv(0, 10), &iv(10, 20)), 0.0);
        let expected = brute_iou(&iv(0, 10), &iv(5, 15));
        assert!((expected - 5.0 / 15.0).abs() < 1e-15);
        assert_eq!(temporal_iou(&iv(0, 10), &iv(5, 15)), expected);
        assert_eq!(temporal_iou(&iv(3, 3), &iv(3, 3)), 0.0);
    }

    #[test]
    fn serde_rejects_inverted() {
        let ok: FrameInterval = serde_json::from_str(r#"{"start":1,"end":4}"#).unwrap();
        assert_eq!(ok, iv(1, 4));
        assert!(serde_json::from_str::<FrameInterval>(r#"{"start":5,"end":4}"#).is_err());
    }

    fn arb_interval() -> impl Strategy<Value = FrameInterval> {
        (0u64..200, 0u64..200).prop_map(|(s, l)| FrameInterval::with_len(s, l))
    }

    proptest! {
        #[test]
        fn union_commutative_idempotent(s in 0u64..100, la in 0u64..50, off in 0u64..60, lb in 0u64..50) {
            let a = FrameInterval::with_len(s, la);
            let b = FrameInterval::with_len(s + off.min(la), lb);
            let ab = interval_union(a, b).unwrap();
            prop_assert_eq!(ab, interval_union(b, a).unwrap());
            prop_assert_eq!(interval_union(a, a).unwrap(), a);
            prop_assert!(ab.contains_interval(&a) && ab.contains_interval(&b));
        }

        #[test]
        fn iou_bounded_symmetric(a in arb_interval(), b in arb_interval()) {
            let x = temporal_iou(&a, &b);
            prop_assert!((0.0..=1.0).contains(&x));
            prop_assert_eq!(x, temporal_iou(&b, &a));
            prop_assert!((x - brute_iou(&a, &b)).abs() < 1e-12);
            prop_assert_eq!(x == 1.0, a == b && !a.is_empty());
        }
    }
}
