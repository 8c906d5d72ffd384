//! Compose, locate, sample and evaluate over whole corpora.

use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use stream_locator_core::composer::{
    self, ClipKind, CompositionManifest, CorpusParams, CorpusSummary, QaPool, SplitRatios,
};
use stream_locator_core::eval::{self, EvalReport, OracleCheck, OutcomeRecord};
use stream_locator_core::rng::derive_seed_str;
use stream_locator_core::sampler::{SamplePlan, SampleStrategy};
use stream_locator_core::scorer::{SyntheticProfile, SyntheticScorer};
use stream_locator_core::{
    derive_seed, linear_scan_oracle, locate_with_fallback, FrameInterval, FrameScorer,
    HysteresisConfig, LocatorOutcome,
};

use crate::embedding_file::embedding_file_scorer;
use crate::error::{Error, Result};
use crate::external::ExternalScorer;
use crate::formats::{read_clips, read_qa_pool, LocateFailure, LocateSummary, SampleRecord};

const TAG_SPLIT: u64 = 0x0053_504c_4954;

pub enum ComposeSource {
    Synthetic { count: usize, params: CorpusParams },
    Files {
        targets: PathBuf,
        backgrounds: PathBuf,
        qa_pool: Option<PathBuf>,
    },
}

/// Build and split a corpus. Returns the manifests and their summary.
pub fn compose_corpus(
    source: &ComposeSource,
    ratios: &SplitRatios,
    scan_rate_fps: f64,
    seed: u64,
) -> Result<(Vec<CompositionManifest>, CorpusSummary)> {
    let (targets, backgrounds, pool) = match source {
        ComposeSource::Synthetic { count, params } => {
            let c = composer::synthetic_corpus(*count, params, seed);
            (c.targets, c.backgrounds, c.qa_pool)
        }
        ComposeSource::Files {
            targets,
            backgrounds,
            qa_pool,
        } => {
            let t = read_clips(targets, ClipKind::Target)?;
            let b = read_clips(backgrounds, ClipKind::Background)?;
            let pool = match qa_pool {
                Some(p) => read_qa_pool(p)?,
                None => QaPool::new(),
            };
            (t, b, pool)
        }
    };
    let mut manifests = composer::compose(&targets, &backgrounds, &pool, seed)?;
    composer::split(&mut manifests, ratios, derive_seed(seed, TAG_SPLIT));
    let summary = composer::summarize(&manifests, scan_rate_fps);
    Ok((manifests, summary))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSignal {
    pub baseline: f64,
    pub plateau: f64,
    pub noise: f64,
}

impl Default for SyntheticSignal {
    fn default() -> Self {
        Self {
            baseline: 0.1,
            plateau: 0.6,
            noise: 0.0,
        }
    }
}

/// Profile for `manifest`, with noise keyed by the video id.
pub fn synthetic_profile(
    manifest: &CompositionManifest,
    signal: &SyntheticSignal,
    seed: u64,
) -> Result<SyntheticProfile> {
    Ok(composer::synth_profile_for(
        manifest,
        signal.baseline,
        signal.plateau,
        signal.noise,
        derive_seed_str(seed, manifest.video_id()),
    )?)
}

#[derive(Debug, Clone)]
pub enum ScorerSpec {
    Synthetic(SyntheticSignal),
    /// `<dir>/<video_id>.question.txt` and `<dir>/<video_id>.frames.txt`.
    EmbeddingDir(PathBuf),
    /// Command line; `{video_id}` in any argument is replaced per video.
    External { argv: Vec<String>, timeout: Duration },
}

pub fn embedding_paths(dir: &Path, video_id: &str) -> (PathBuf, PathBuf) {
    (
        dir.join(format!("{video_id}.question.txt")),
        dir.join(format!("{video_id}.frames.txt")),
    )
}

fn open_scorer(spec: &ScorerSpec, m: &CompositionManifest, seed: u64) -> Result<Box<dyn FrameScorer>> {
    Ok(match spec {
        ScorerSpec::Synthetic(signal) => Box::new(SyntheticScorer::new(synthetic_profile(m, signal, seed)?)),
        ScorerSpec::EmbeddingDir(dir) => {
            let (q, f) = embedding_paths(dir, m.video_id());
            Box::new(embedding_file_scorer(&q, &f)?)
        }
        ScorerSpec::External { argv, timeout } => {
            let argv: Vec<String> = argv.iter().map(|a| a.replace("{video_id}", m.video_id())).collect();
            Box::new(ExternalScorer::spawn(&argv, *timeout)?)
        }
    })
}

pub struct LocateOptions {
    pub config: HysteresisConfig,
    pub scorer: ScorerSpec,
    pub seed: u64,
}

pub fn locate_one(m: &CompositionManifest, opts: &LocateOptions) -> Result<LocatorOutcome> {
    let mut scorer = open_scorer(&opts.scorer, m, opts.seed)?;
    locate_with_fallback(scorer.as_mut(), &m.qa().question, &opts.config, m.total_length()).map_err(
        |source| Error::Locate {
            video_id: m.video_id().to_owned(),
            source,
        },
    )
}

pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))
}

/// Locate every manifest on `pool`; results keep manifest order.
pub fn locate_all(
    manifests: &[CompositionManifest],
    opts: &LocateOptions,
    pool: &rayon::ThreadPool,
) -> Vec<Result<LocatorOutcome>> {
    pool.install(|| manifests.par_iter().map(|m| locate_one(m, opts)).collect())
}

/// Exhaustive oracle intervals under the same scorer and thresholds.
pub fn oracle_all(
    manifests: &[CompositionManifest],
    opts: &LocateOptions,
    pool: &rayon::ThreadPool,
) -> Result<Vec<(String, FrameInterval)>> {
    pool.install(|| {
        manifests
            .par_iter()
            .map(|m| {
                let mut s = open_scorer(&opts.scorer, m, opts.seed)?;
                let iv = linear_scan_oracle(s.as_mut(), &m.qa().question, &opts.config, m.total_length())
                    .map_err(|source| Error::Locate {
                        video_id: m.video_id().to_owned(),
                        source,
                    })?;
                Ok((m.video_id().to_owned(), iv))
            })
            .collect()
    })
}

/// Split results into exportable records and a summary.
pub fn summarize_locate(
    manifests: &[CompositionManifest],
    results: &[Result<LocatorOutcome>],
) -> (Vec<OutcomeRecord>, LocateSummary) {
    let mut records = Vec::new();
    let mut failures = Vec::new();
    let (mut frames, mut full) = (0u64, 0u64);
    for (m, r) in manifests.iter().zip(results) {
        match r {
            Ok(o) => {
                frames += o.frames_scored() as u64;
                full += m.total_length();
                records.push(OutcomeRecord::from_outcome(m.video_id(), o));
            }
            Err(e) => failures.push(LocateFailure {
                video_id: m.video_id().to_owned(),
                kind: e.kind().to_owned(),
                message: e.to_string(),
            }),
        }
    }
    let summary = LocateSummary {
        videos: manifests.len(),
        succeeded: records.len(),
        frames_scored: frames,
        full_scan_frames: full,
        failures,
    };
    (records, summary)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyChoice {
    Fibonacci,
    Uniform,
}

pub fn sample_all(
    manifests: &[CompositionManifest],
    outcomes: &[OutcomeRecord],
    strategy: StrategyChoice,
    n: usize,
    seed: u64,
) -> Result<Vec<SampleRecord>> {
    outcomes
        .iter()
        .map(|o| {
            let m = manifests
                .iter()
                .find(|m| m.video_id() == o.video_id)
                .ok_or_else(|| eval::EvalError::Unmatched(o.video_id.clone()))?;
            let strategy = match strategy {
                StrategyChoice::Fibonacci => SampleStrategy::Fibonacci,
                StrategyChoice::Uniform => SampleStrategy::UniformRandom {
                    seed: derive_seed_str(seed, &o.video_id),
                },
            };
            let frames = SamplePlan::new(o.target, n, strategy)?.run()?;
            Ok(SampleRecord {
                video_id: o.video_id.clone(),
                question_id: m.qa().question.question_id.clone(),
                strategy,
                frames,
                answer: None,
            })
        })
        .collect()
}

pub fn evaluate(outcomes: &[OutcomeRecord], manifests: &[CompositionManifest]) -> Result<EvalReport> {
    Ok(eval::evaluate_run(outcomes, manifests)?)
}

pub fn check_oracle(
    outcomes: &[OutcomeRecord],
    oracle: &[(String, FrameInterval)],
) -> Result<Vec<OracleCheck>> {
    Ok(eval::compare_oracle(outcomes, oracle)?)
}
