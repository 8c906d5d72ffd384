//! Online target-event localization over per-frame confidence streams.
//!
//! Frames of a stream are scored against a question; the first frame whose
//! confidence reaches the upper hysteresis threshold triggers a bidirectional
//! Fibonacci-gap traversal that stops below the lower threshold. The crate
//! also composes Background + Target evaluation corpora at manifest level and
//! scores localization against their ground truth.
//!
//! Pure algorithms only: this crate is `no_std` and needs `alloc`. File
//! formats, subprocess scorers and the command line live in the
//! `stream-locator` crate.
//!
//! ```
//! use stream_locator_core::{
//!     locate_with_fallback, HysteresisConfig, PrecomputedScorer, QuestionContext, QuestionType,
//! };
//!
//! let mut values = vec![0.1; 100];
//! values[40..60].fill(0.9);
//! let mut scorer = PrecomputedScorer::new(values);
//! let q = QuestionContext {
//!     question_id: "q0".into(),
//!     question_text: "what happens?".into(),
//!     question_type: QuestionType::What,
//!     embedding: None,
//! };
//! let out = locate_with_fallback(&mut scorer, &q, &HysteresisConfig::default(), 100).unwrap();
//! assert_eq!((out.target.start().0, out.target.end().0), (40, 60));
//! assert!(out.frames_scored() < 100);
//! ```

#![cfg_attr(not(test), no_std)]
// Threshold checks use negated comparisons so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod composer;
pub mod config;
pub mod eval;
pub mod interval;
pub mod locator;
pub mod rng;
pub mod sampler;
pub mod scorer;
pub mod trace;

pub use config::{ConfigError, Fallback, ForwardMode, HysteresisConfig};
pub use interval::{interval_union, temporal_iou, FrameIndex, FrameInterval, IntervalError};
pub use locator::{
    fib_gaps, linear_scan_oracle, locate_online, locate_with_fallback, LocateError,
    LocateErrorKind, LocatorMode, LocatorOutcome,
};
pub use rng::{derive_seed, seeded_rng, SeededRng};
pub use scorer::{
    confidence, normalize, synthetic_score, EmbeddingScorer, EmbeddingVector, FrameScorer,
    PrecomputedScorer, QuestionContext, QuestionType, ScoreError, SyntheticProfile,
    SyntheticScorer,
};
pub use trace::{ConfidenceSample, ConfidenceTrace, Phase};
