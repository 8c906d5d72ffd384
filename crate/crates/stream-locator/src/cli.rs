//! Command-line interface.

use std::io::{self, BufReader};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stream_locator_core::composer::{CompositionManifest, CorpusParams, SplitRatios};
use stream_locator_core::eval::OutcomeRecord;
use stream_locator_core::sampler::DEFAULT_SAMPLE_FRAMES;
use stream_locator_core::{Fallback, ForwardMode, HysteresisConfig, LocatorOutcome};

use crate::error::{exit, Error, Result};
use crate::files::{read_jsonl, write_atomic, write_json, write_jsonl};
use crate::formats::{qa_records, report_csv, trace_csv, trace_records};
use crate::pipeline::{
    self, ComposeSource, LocateOptions, ScorerSpec, StrategyChoice, SyntheticSignal,
};
use crate::stub::{self, StubMode, StubOptions};
use crate::{files, plots};

#[derive(Debug, Parser)]
#[command(name = "stream-locator", version, about = "Online target-event localization and evaluation")]
pub struct Cli {
    /// Master seed; falls back to STREAM_LOCATOR_SEED, then 0.
    #[arg(long, global = true, env = "STREAM_LOCATOR_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for per-video work (0 = logical cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compose Background + Target manifests and their summary.
    Compose(ComposeArgs),
    /// Locate the target event of every manifest.
    Locate(LocateArgs),
    /// Sample frames from located events for the answering stage.
    Sample(SampleArgs),
    /// Score outcomes against manifest ground truth.
    Eval(EvalArgs),
    /// Compose, locate, sample and evaluate a small noiseless corpus.
    Demo(DemoArgs),
    /// Serve the scorer line protocol on stdin/stdout.
    #[command(hide = true)]
    ScorerStub(StubArgs),
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    /// Output manifest file (one JSON record per line).
    #[arg(long)]
    pub out: PathBuf,
    /// Corpus summary file [default: <out>.summary.json].
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Fabricate this many target clips from built-in duration statistics.
    #[arg(long)]
    pub synthetic_corpus: Option<usize>,
    /// Target clip listing (JSON lines of clip_id, length_frames, kind).
    #[arg(long, requires = "backgrounds")]
    pub targets: Option<PathBuf>,
    /// Background clip listing.
    #[arg(long, requires = "targets")]
    pub backgrounds: Option<PathBuf>,
    /// QA pool (JSON lines of clip_id, question_text, question_type, answer_label).
    #[arg(long)]
    pub qa_pool: Option<PathBuf>,
    /// Also write the QA pool used (useful with --synthetic-corpus).
    #[arg(long)]
    pub write_qa_pool: Option<PathBuf>,
    /// Frames per second used to turn durations into frame counts.
    #[arg(long, default_value_t = 4.0)]
    pub scan_rate: f64,
    #[arg(long, default_value_t = 0.7)]
    pub train: f64,
    #[arg(long, default_value_t = 0.1)]
    pub val: f64,
    #[arg(long, default_value_t = 0.2)]
    pub test: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ForwardArg {
    UntilBelowMin,
    Fixed,
}

#[derive(Debug, Clone, Args)]
pub struct HysteresisArgs {
    /// Trigger threshold.
    #[arg(long, default_value_t = 0.4)]
    pub c_max: f64,
    /// Boundary threshold.
    #[arg(long, default_value_t = 0.3)]
    pub c_min: f64,
    /// Frames per second of the scored stream.
    #[arg(long, default_value_t = 4.0)]
    pub scan_rate: f64,
    /// Forward traversal mode.
    #[arg(long, value_enum, default_value_t = ForwardArg::UntilBelowMin)]
    pub forward: ForwardArg,
    /// Number of Fibonacci gaps reached by `--forward fixed`.
    #[arg(long, default_value_t = 5)]
    pub fixed_extent: u32,
    /// Fallback rule: c_min' = max confidence - delta.
    #[arg(long, default_value_t = 0.1)]
    pub fallback_delta: f64,
    /// Disable the two-pass fallback rule.
    #[arg(long)]
    pub no_fallback: bool,
}

impl HysteresisArgs {
    pub fn config(&self, seed: u64) -> Result<HysteresisConfig> {
        let forward = match self.forward {
            ForwardArg::UntilBelowMin => ForwardMode::UntilBelowMin,
            ForwardArg::Fixed => ForwardMode::FixedExtent { k: self.fixed_extent },
        };
        let fallback = if self.no_fallback {
            Fallback::None
        } else {
            Fallback::TwoPassMaxRule { delta: self.fallback_delta }
        };
        Ok(HysteresisConfig::new(self.c_max, self.c_min, self.scan_rate, forward, fallback, seed)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerArg {
    Synthetic,
    EmbeddingFile,
    External,
}

#[derive(Debug, Clone, Args)]
pub struct ScorerArgs {
    /// Confidence source.
    #[arg(long, value_enum, default_value_t = ScorerArg::Synthetic)]
    pub scorer: ScorerArg,
    /// Synthetic baseline confidence.
    #[arg(long, default_value_t = 0.1)]
    pub baseline: f64,
    /// Synthetic plateau confidence over the ground truth.
    #[arg(long, default_value_t = 0.6)]
    pub plateau: f64,
    /// Synthetic Gaussian noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Directory with <video_id>.question.txt and <video_id>.frames.txt.
    #[arg(long)]
    pub embeddings_dir: Option<PathBuf>,
    /// Per-request timeout for external scorers.
    #[arg(long, default_value_t = 30_000)]
    pub scorer_timeout_ms: u64,
    /// External scorer command after `--`; `{video_id}` is substituted.
    #[arg(last = true)]
    pub scorer_cmd: Vec<String>,
}

impl ScorerArgs {
    pub fn signal(&self) -> SyntheticSignal {
        SyntheticSignal {
            baseline: self.baseline,
            plateau: self.plateau,
            noise: self.noise,
        }
    }

    pub fn spec(&self) -> Result<ScorerSpec> {
        Ok(match self.scorer {
            ScorerArg::Synthetic => ScorerSpec::Synthetic(self.signal()),
            ScorerArg::EmbeddingFile => ScorerSpec::EmbeddingDir(
                self.embeddings_dir
                    .clone()
                    .ok_or_else(|| Error::Usage("--scorer embedding-file needs --embeddings-dir".into()))?,
            ),
            ScorerArg::External => {
                if self.scorer_cmd.is_empty() {
                    return Err(Error::Usage("--scorer external needs a command after `--`".into()));
                }
                ScorerSpec::External {
                    argv: self.scorer_cmd.clone(),
                    timeout: Duration::from_millis(self.scorer_timeout_ms),
                }
            }
        })
    }
}

#[derive(Debug, Args)]
pub struct LocateArgs {
    /// Manifest file written by `compose`.
    #[arg(long)]
    pub manifests: PathBuf,
    /// Output outcome file (one JSON record per video).
    #[arg(long)]
    pub out: PathBuf,
    /// Run summary with failures [default: <out>.summary.json].
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Write <video_id>.trace.csv and <video_id>.trace.jsonl here.
    #[arg(long)]
    pub traces_dir: Option<PathBuf>,
    #[command(flatten)]
    pub hysteresis: HysteresisArgs,
    #[command(flatten)]
    pub scorer: ScorerArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Fibonacci,
    Uniform,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub manifests: PathBuf,
    /// Outcome file written by `locate`.
    #[arg(long)]
    pub outcomes: PathBuf,
    /// Output sample file (one JSON record per video).
    #[arg(long)]
    pub out: PathBuf,
    /// Frame selection inside each located interval.
    #[arg(long, value_enum, default_value_t = StrategyArg::Uniform)]
    pub strategy: StrategyArg,
    /// Frames per video.
    #[arg(long, default_value_t = DEFAULT_SAMPLE_FRAMES)]
    pub n_frames: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifests: PathBuf,
    #[arg(long)]
    pub outcomes: PathBuf,
    /// Receives report.csv, report.json and summary.json.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Also write SVG histograms into <out-dir>/plots.
    #[arg(long)]
    pub plots: bool,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Number of composed videos.
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    /// Also write per-video traces.
    #[arg(long)]
    pub traces: bool,
    #[arg(long)]
    pub plots: bool,
    #[command(flatten)]
    pub hysteresis: HysteresisArgs,
    #[command(flatten)]
    pub scorer: ScorerArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StubModeArg {
    Constant,
    Reciprocal,
    Garbage,
    Synthetic,
}

#[derive(Debug, Args)]
pub struct StubArgs {
    #[arg(value_enum)]
    pub mode: StubModeArg,
    #[arg(long, default_value_t = 0.5)]
    pub value: f64,
    #[arg(long)]
    pub manifests: Option<PathBuf>,
    #[arg(long)]
    pub video: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    pub baseline: f64,
    #[arg(long, default_value_t = 0.6)]
    pub plateau: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long)]
    pub delay_ms: Option<u64>,
    #[arg(long)]
    pub exit_after: Option<u64>,
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    pipeline::worker_pool(workers)
}

pub fn cmd_compose(args: &ComposeArgs, seed: u64) -> Result<()> {
    let ratios = SplitRatios::new(args.train, args.val, args.test)?;
    let source = match (&args.synthetic_corpus, &args.targets, &args.backgrounds) {
        (Some(count), None, None) => ComposeSource::Synthetic {
            count: *count,
            params: CorpusParams {
                scan_rate_fps: args.scan_rate,
                ..CorpusParams::default()
            },
        },
        (None, Some(t), Some(b)) => {
            if args.qa_pool.is_none() {
                return Err(Error::Compose(
                    stream_locator_core::composer::ComposeError::MissingQA("<no --qa-pool given>".into()),
                ));
            }
            ComposeSource::Files {
                targets: t.clone(),
                backgrounds: b.clone(),
                qa_pool: args.qa_pool.clone(),
            }
        }
        (Some(_), _, _) => {
            return Err(Error::Usage("--synthetic-corpus excludes --targets/--backgrounds".into()))
        }
        _ => {
            return Err(Error::Compose(
                stream_locator_core::composer::ComposeError::MissingQA(
                    "<no --synthetic-corpus or --targets/--backgrounds/--qa-pool given>".into(),
                ),
            ))
        }
    };
    if let (Some(path), ComposeSource::Synthetic { count, params }) = (&args.write_qa_pool, &source) {
        let corpus = stream_locator_core::composer::synthetic_corpus(*count, params, seed);
        write_jsonl(path, qa_records(&corpus.qa_pool))?;
    }
    let (manifests, summary) = pipeline::compose_corpus(&source, &ratios, args.scan_rate, seed)?;
    write_jsonl(&args.out, &manifests)?;
    let summary_path = args.summary.clone().unwrap_or_else(|| sidecar(&args.out, ".summary.json"));
    write_json(&summary_path, &summary)?;
    println!(
        "composed {} videos (train {}, val {}, test {}), mean duration {:.2}s",
        summary.count, summary.splits.train, summary.splits.val, summary.splits.test, summary.duration.mean_s
    );
    Ok(())
}

fn write_traces(dir: &Path, manifests: &[CompositionManifest], results: &[Result<LocatorOutcome>]) -> Result<()> {
    for (m, r) in manifests.iter().zip(results) {
        let trace = match r {
            Ok(o) => &o.trace,
            Err(Error::Locate { source, .. }) => &source.trace,
            Err(_) => continue,
        };
        write_atomic(&dir.join(format!("{}.trace.csv", m.video_id())), trace_csv(trace).as_bytes())?;
        write_jsonl(&dir.join(format!("{}.trace.jsonl", m.video_id())), trace_records(trace))?;
    }
    Ok(())
}

/// Locate and write outputs. Fails with the first per-video error after all outputs are written.
fn locate_and_write(
    manifests: &[CompositionManifest],
    opts: &LocateOptions,
    workers: usize,
    out: &Path,
    summary: &Path,
    traces_dir: Option<&Path>,
) -> Result<Vec<OutcomeRecord>> {
    let results = pipeline::locate_all(manifests, opts, &pool(workers)?);
    let (records, run_summary) = pipeline::summarize_locate(manifests, &results);
    write_jsonl(out, &records)?;
    write_json(summary, &run_summary)?;
    if let Some(dir) = traces_dir {
        write_traces(dir, manifests, &results)?;
    }
    println!(
        "located {}/{} videos, {} of {} frames scored",
        run_summary.succeeded, run_summary.videos, run_summary.frames_scored, run_summary.full_scan_frames
    );
    if let Some(err) = results.into_iter().find_map(|r| r.err()) {
        eprintln!("{} of {} videos failed", run_summary.failures.len(), run_summary.videos);
        return Err(err);
    }
    Ok(records)
}

pub fn cmd_locate(args: &LocateArgs, seed: u64, workers: usize) -> Result<()> {
    let manifests: Vec<CompositionManifest> = read_jsonl(&args.manifests)?;
    let opts = LocateOptions {
        config: args.hysteresis.config(seed)?,
        scorer: args.scorer.spec()?,
        seed,
    };
    let summary = args.summary.clone().unwrap_or_else(|| sidecar(&args.out, ".summary.json"));
    locate_and_write(&manifests, &opts, workers, &args.out, &summary, args.traces_dir.as_deref())?;
    Ok(())
}

fn strategy(s: StrategyArg) -> StrategyChoice {
    match s {
        StrategyArg::Fibonacci => StrategyChoice::Fibonacci,
        StrategyArg::Uniform => StrategyChoice::Uniform,
    }
}

pub fn cmd_sample(args: &SampleArgs, seed: u64) -> Result<()> {
    let manifests: Vec<CompositionManifest> = read_jsonl(&args.manifests)?;
    let outcomes: Vec<OutcomeRecord> = read_jsonl(&args.outcomes)?;
    let samples = pipeline::sample_all(&manifests, &outcomes, strategy(args.strategy), args.n_frames, seed)?;
    write_jsonl(&args.out, &samples)?;
    println!("sampled {} videos", samples.len());
    Ok(())
}

fn eval_and_write(
    manifests: &[CompositionManifest],
    outcomes: &[OutcomeRecord],
    out_dir: &Path,
    plots: bool,
) -> Result<()> {
    let report = pipeline::evaluate(outcomes, manifests)?;
    write_atomic(&out_dir.join("report.csv"), report_csv(&report).as_bytes())?;
    write_json(&out_dir.join("report.json"), &report)?;
    write_json(&out_dir.join("summary.json"), &report.aggregates)?;
    if plots {
        plots::write_plots(&report, &out_dir.join("plots"))?;
    }
    let a = &report.aggregates.overall;
    println!(
        "videos {} mean_iou {:.4} hit_rate {:.4} mean_frames_ratio {:.4}",
        a.count, a.mean_iou, a.hit_rate, a.mean_frames_ratio
    );
    Ok(())
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let manifests: Vec<CompositionManifest> = read_jsonl(&args.manifests)?;
    let outcomes: Vec<OutcomeRecord> = read_jsonl(&args.outcomes)?;
    eval_and_write(&manifests, &outcomes, &args.out_dir, args.plots)
}

pub fn cmd_demo(args: &DemoArgs, seed: u64, workers: usize) -> Result<()> {
    let dir = &args.out_dir;
    let ratios = SplitRatios::default();
    let source = ComposeSource::Synthetic {
        count: args.count,
        params: CorpusParams {
            scan_rate_fps: args.hysteresis.scan_rate,
            ..CorpusParams::default()
        },
    };
    let (manifests, summary) = pipeline::compose_corpus(&source, &ratios, args.hysteresis.scan_rate, seed)?;
    write_jsonl(&dir.join("manifests.jsonl"), &manifests)?;
    write_json(&dir.join("manifests.summary.json"), &summary)?;
    let opts = LocateOptions {
        config: args.hysteresis.config(seed)?,
        scorer: args.scorer.spec()?,
        seed,
    };
    let traces = dir.join("traces");
    let outcomes = locate_and_write(
        &manifests,
        &opts,
        workers,
        &dir.join("outcomes.jsonl"),
        &dir.join("outcomes.summary.json"),
        args.traces.then_some(traces.as_path()),
    )?;
    let samples = pipeline::sample_all(&manifests, &outcomes, StrategyChoice::Uniform, DEFAULT_SAMPLE_FRAMES, seed)?;
    write_jsonl(&dir.join("samples.jsonl"), &samples)?;
    eval_and_write(&manifests, &outcomes, dir, args.plots)
}

pub fn cmd_scorer_stub(args: &StubArgs, seed: u64) -> Result<()> {
    let mode = match args.mode {
        StubModeArg::Constant => StubMode::Constant(args.value),
        StubModeArg::Reciprocal => StubMode::Reciprocal,
        StubModeArg::Garbage => StubMode::Garbage,
        StubModeArg::Synthetic => {
            let (Some(path), Some(video)) = (&args.manifests, &args.video) else {
                return Err(Error::Usage("synthetic stub needs --manifests and --video".into()));
            };
            let manifests: Vec<CompositionManifest> = files::read_jsonl(path)?;
            let m = stub::find_manifest(&manifests, video)
                .ok_or_else(|| Error::Usage(format!("video {video:?} not in {}", path.display())))?;
            let signal = SyntheticSignal {
                baseline: args.baseline,
                plateau: args.plateau,
                noise: args.noise,
            };
            StubMode::Synthetic(pipeline::synthetic_profile(m, &signal, seed)?)
        }
    };
    let opts = StubOptions {
        mode,
        delay: args.delay_ms.map(Duration::from_millis),
        exit_after: args.exit_after,
    };
    let stdin = io::stdin();
    stub::serve(&opts, BufReader::new(stdin.lock()), io::stdout().lock())
        .map_err(|e| Error::io("<stdio>", e))
}

pub fn run(cli: &Cli) -> Result<()> {
    let workers = if cli.workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    } else {
        cli.workers
    };
    match &cli.command {
        Command::Compose(a) => cmd_compose(a, cli.seed),
        Command::Locate(a) => cmd_locate(a, cli.seed, workers),
        Command::Sample(a) => cmd_sample(a, cli.seed),
        Command::Eval(a) => cmd_eval(a),
        Command::Demo(a) => cmd_demo(a, cli.seed, workers),
        Command::ScorerStub(a) => cmd_scorer_stub(a, cli.seed),
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => exit::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report_line());
            e.exit_code()
        }
    }
}
