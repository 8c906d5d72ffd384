use std::io;
use std::path::PathBuf;

use stream_locator_core::composer::ComposeError;
use stream_locator_core::eval::EvalError;
use stream_locator_core::sampler::SampleError;
use stream_locator_core::scorer::ProfileError;
use stream_locator_core::{ConfigError, LocateError, LocateErrorKind, ScoreError};
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const DATA: i32 = 2;
    pub const SCORER: i32 = 3;
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Scorer(#[from] ScoreError),
    #[error("video {video_id}: {source}")]
    Locate {
        video_id: String,
        source: LocateError,
    },
    #[error("plot: {0}")]
    Plot(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable name of the failure.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "IoError",
            Error::Format { .. } => "FormatError",
            Error::Usage(_) => "UsageError",
            Error::Config(_) => "ConfigError",
            Error::Compose(e) => match e {
                ComposeError::InsufficientBackgrounds { .. } => "InsufficientBackgrounds",
                ComposeError::WrongKind { .. } => "WrongKind",
                ComposeError::EmptyClip(_) => "EmptyClip",
                ComposeError::MissingQA(_) => "MissingQA",
                ComposeError::InsertionOutOfRange { .. } => "InsertionOutOfRange",
                ComposeError::InconsistentManifest { .. } => "InconsistentManifest",
                ComposeError::InvalidRatios(..) => "InvalidRatios",
                ComposeError::DurationModel(_) => "DurationModel",
            },
            Error::Eval(_) => "JoinError",
            Error::Sample(SampleError::EmptyInterval) => "EmptyInterval",
            Error::Sample(SampleError::ZeroFrames) => "ZeroFrames",
            Error::Profile(_) => "ProfileError",
            Error::Scorer(e) => score_kind(e),
            Error::Locate { source, .. } => match &source.kind {
                LocateErrorKind::EmptyStream => "EmptyStream",
                LocateErrorKind::NoTrigger => "NoTrigger",
                LocateErrorKind::Scorer(e) => score_kind(e),
            },
            Error::Plot(_) => "PlotError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => exit::USAGE,
            Error::Scorer(e) => score_exit(e),
            Error::Locate {
                source:
                    LocateError {
                        kind: LocateErrorKind::Scorer(e),
                        ..
                    },
                ..
            } => score_exit(e),
            _ => exit::DATA,
        }
    }

    /// One-line report: `error kind=<Kind> code=<n>: <message>`.
    pub fn report_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error kind={} code={}: {msg}", self.kind(), self.exit_code())
    }
}

fn score_kind(e: &ScoreError) -> &'static str {
    match e {
        ScoreError::ZeroNorm => "ZeroNorm",
        ScoreError::DimMismatch { .. } => "DimMismatch",
        ScoreError::EmptyVector | ScoreError::NonFinite { .. } => "FormatError",
        ScoreError::OutOfRange { .. } => "OutOfRange",
        ScoreError::Protocol { .. } => "ScorerProtocolError",
        ScoreError::Timeout { .. } => "ScorerTimeout",
        ScoreError::Io(_) => "ScorerIoError",
    }
}

fn score_exit(e: &ScoreError) -> i32 {
    match e {
        ScoreError::Protocol { .. } | ScoreError::Timeout { .. } | ScoreError::Io(_) => exit::SCORER,
        _ => exit::DATA,
    }
}
