//! Confidence scoring of (question, frame) pairs.
//!
//! Confidence is the dot product of the L2-normalized question and frame
//! vectors, so it lives in the cosine range `[-1, 1]`. Backends implement
//! [`FrameScorer`]; the locator only ever talks to that trait.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{FrameIndex, FrameInterval};
use crate::rng::{derive_seed, SeededRng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScoreError {
    #[error("vector has zero norm")]
    ZeroNorm,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("embedding has no components")]
    EmptyVector,
    #[error("embedding component {index} is not finite")]
    NonFinite { index: usize },
    #[error("frame {frame} out of range (stream length {len:?})")]
    OutOfRange { frame: u64, len: Option<u64> },
    #[error("scorer protocol error: {reason}; offending line: {line:?}")]
    Protocol { reason: String, line: String },
    #[error("scorer did not answer within {millis} ms")]
    Timeout { millis: u64 },
    #[error("scorer I/O failure: {0}")]
    Io(String),
}

/// Fixed-length finite vector, typically a [CLS] embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmbeddingVector(Vec<f64>);

impl TryFrom<Vec<f64>> for EmbeddingVector {
    type Error = ScoreError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        EmbeddingVector::new(v)
    }
}

impl From<EmbeddingVector> for Vec<f64> {
    fn from(v: EmbeddingVector) -> Self {
        v.0
    }
}

impl EmbeddingVector {
    pub fn new(components: Vec<f64>) -> Result<Self, ScoreError> {
        if components.is_empty() {
            return Err(ScoreError::EmptyVector);
        }
        if let Some(index) = components.iter().position(|c| !c.is_finite()) {
            return Err(ScoreError::NonFinite { index });
        }
        Ok(Self(components))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.0.iter().map(|c| c * c).sum())
    }

    /// Multiply every component by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, ScoreError> {
        Self::new(self.0.iter().map(|c| c * factor).collect())
    }
}

/// Scale `v` to unit L2 norm.
pub fn normalize(v: &EmbeddingVector) -> Result<EmbeddingVector, ScoreError> {
    let norm = v.norm();
    if norm == 0.0 {
        return Err(ScoreError::ZeroNorm);
    }
    Ok(EmbeddingVector(v.0.iter().map(|c| c / norm).collect()))
}

fn dot_clamped(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    d.clamp(-1.0, 1.0)
}

/// Cosine confidence between a question and a frame embedding.
pub fn confidence(question: &EmbeddingVector, frame: &EmbeddingVector) -> Result<f64, ScoreError> {
    if question.dim() != frame.dim() {
        return Err(ScoreError::DimMismatch {
            expected: question.dim(),
            found: frame.dim(),
        });
    }
    let q = normalize(question)?;
    let f = normalize(frame)?;
    Ok(dot_clamped(&q.0, &f.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    What,
    Who,
    How,
    Where,
    When,
}

impl QuestionType {
    pub const ALL: [QuestionType; 5] = [
        QuestionType::What,
        QuestionType::Who,
        QuestionType::How,
        QuestionType::Where,
        QuestionType::When,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::What => "what",
            QuestionType::Who => "who",
            QuestionType::How => "how",
            QuestionType::Where => "where",
            QuestionType::When => "when",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        QuestionType::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuestionContext {
    pub question_id: String,
    pub question_text: String,
    pub question_type: QuestionType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<EmbeddingVector>,
}

/// A source of per-frame confidences for one stream.
pub trait FrameScorer {
    /// Number of frames, when the backend knows it.
    fn frame_count(&self) -> Option<u64>;

    fn score(&mut self, question: &QuestionContext, frame: FrameIndex) -> Result<f64, ScoreError>;
}

impl<S: FrameScorer + ?Sized> FrameScorer for &mut S {
    fn frame_count(&self) -> Option<u64> {
        (**self).frame_count()
    }

    fn score(&mut self, question: &QuestionContext, frame: FrameIndex) -> Result<f64, ScoreError> {
        (**self).score(question, frame)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("stream length must be positive")]
    EmptyStream,
    #[error("plateau [{plateau}) is empty or leaves the stream of length {len}")]
    PlateauOutOfStream { plateau: FrameInterval, len: u64 },
    #[error("plateau mean {plateau} must exceed baseline mean {baseline}")]
    MeansOrder { plateau: f64, baseline: f64 },
    #[error("noise std must be finite and non-negative, got {0}")]
    Noise(f64),
}

/// Step-shaped synthetic confidence: a baseline with one raised plateau and keyed Gaussian noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProfile {
    stream_length: u64,
    baseline_mean: f64,
    plateau_interval: FrameInterval,
    plateau_mean: f64,
    noise_std: f64,
    noise_seed: u64,
}

impl SyntheticProfile {
    pub fn new(
        stream_length: u64,
        baseline_mean: f64,
        plateau_interval: FrameInterval,
        plateau_mean: f64,
        noise_std: f64,
        noise_seed: u64,
    ) -> Result<Self, ProfileError> {
        if stream_length == 0 {
            return Err(ProfileError::EmptyStream);
        }
        if plateau_interval.is_empty() || plateau_interval.end().get() > stream_length {
            return Err(ProfileError::PlateauOutOfStream {
                plateau: plateau_interval,
                len: stream_length,
            });
        }
        if !(plateau_mean > baseline_mean) {
            return Err(ProfileError::MeansOrder {
                plateau: plateau_mean,
                baseline: baseline_mean,
            });
        }
        if !(noise_std >= 0.0) || !noise_std.is_finite() {
            return Err(ProfileError::Noise(noise_std));
        }
        Ok(Self {
            stream_length,
            baseline_mean,
            plateau_interval,
            plateau_mean,
            noise_std,
            noise_seed,
        })
    }

    pub fn stream_length(&self) -> u64 {
        self.stream_length
    }

    pub fn baseline_mean(&self) -> f64 {
        self.baseline_mean
    }

    pub fn plateau_interval(&self) -> FrameInterval {
        self.plateau_interval
    }

    pub fn plateau_mean(&self) -> f64 {
        self.plateau_mean
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn noise_seed(&self) -> u64 {
        self.noise_seed
    }
}

/// Confidence of `frame` under `profile`.
///
/// The noise draw is keyed by `(noise_seed, frame)`, so the value does not
/// depend on which frames were scored before.
pub fn synthetic_score(profile: &SyntheticProfile, frame: FrameIndex) -> Result<f64, ScoreError> {
    if frame.get() >= profile.stream_length {
        return Err(ScoreError::OutOfRange {
            frame: frame.get(),
            len: Some(profile.stream_length),
        });
    }
    let mean = if profile.plateau_interval.contains(frame) {
        profile.plateau_mean
    } else {
        profile.baseline_mean
    };
    if profile.noise_std == 0.0 {
        return Ok(mean.clamp(-1.0, 1.0));
    }
    let z = SeededRng::new(derive_seed(profile.noise_seed, frame.get())).standard_normal();
    Ok((mean + profile.noise_std * z).clamp(-1.0, 1.0))
}

#[derive(Clone, Debug)]
pub struct SyntheticScorer {
    profile: SyntheticProfile,
}

impl SyntheticScorer {
    pub fn new(profile: SyntheticProfile) -> Self {
        Self { profile }
    }

    pub fn profile(&self) -> &SyntheticProfile {
        &self.profile
    }
}

impl FrameScorer for SyntheticScorer {
    fn frame_count(&self) -> Option<u64> {
        Some(self.profile.stream_length)
    }

    fn score(&mut self, _question: &QuestionContext, frame: FrameIndex) -> Result<f64, ScoreError> {
        synthetic_score(&self.profile, frame)
    }
}

/// Scores frames against precomputed embeddings.
#[derive(Clone, Debug)]
pub struct EmbeddingScorer {
    question: EmbeddingVector,
    frames: Vec<EmbeddingVector>,
}

impl EmbeddingScorer {
    /// Normalizes every vector once up front; the per-frame result equals
    /// [`confidence`] on the raw vectors bit for bit.
    pub fn new(question: &EmbeddingVector, frames: &[EmbeddingVector]) -> Result<Self, ScoreError> {
        let dim = question.dim();
        let question = normalize(question)?;
        let frames = frames
            .iter()
            .map(|f| {
                if f.dim() != dim {
                    return Err(ScoreError::DimMismatch {
                        expected: dim,
                        found: f.dim(),
                    });
                }
                normalize(f)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { question, frames })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn confidence_at(&self, frame: FrameIndex) -> Result<f64, ScoreError> {
        let f = usize::try_from(frame.get())
            .ok()
            .and_then(|i| self.frames.get(i))
            .ok_or(ScoreError::OutOfRange {
                frame: frame.get(),
                len: Some(self.frames.len() as u64),
            })?;
        Ok(dot_clamped(&self.question.0, &f.0))
    }
}

impl FrameScorer for EmbeddingScorer {
    fn frame_count(&self) -> Option<u64> {
        Some(self.frames.len() as u64)
    }

    fn score(&mut self, _question: &QuestionContext, frame: FrameIndex) -> Result<f64, ScoreError> {
        self.confidence_at(frame)
    }
}

/// A fixed list of confidences, one per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecomputedScorer {
    values: Vec<f64>,
}

impl PrecomputedScorer {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl FrameScorer for PrecomputedScorer {
    fn frame_count(&self) -> Option<u64> {
        Some(self.values.len() as u64)
    }

    fn score(&mut self, _question: &QuestionContext, frame: FrameIndex) -> Result<f64, ScoreError> {
        usize::try_from(frame.get())
            .ok()
            .and_then(|i| self.values.get(i).copied())
            .ok_or(ScoreError::OutOfRange {
                frame: frame.get(),
                len: Some(self.values.len() as u64),
            })
    }
}
