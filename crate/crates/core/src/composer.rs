//! Background + Target dataset composition at manifest level.
//!
//! Each target clip is paired with its own background clip and inserted at a
//! uniformly drawn frame position. Insertion index `k` places the target
//! before background frame `k`; `k = 0` puts it first and `k = len` appends it.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{FrameIndex, FrameInterval};
use crate::rng::{derive_seed, SeededRng};
use crate::scorer::{ProfileError, QuestionContext, QuestionType, SyntheticProfile};

/// Closed answer-space size used when none is given.
pub const DEFAULT_ANSWER_SPACE: u32 = 1290;

const TAG_PAIR: u64 = 1;
const TAG_MANIFEST: u64 = 2;
const TAG_QA: u64 = 3;
const TAG_CORPUS_TARGETS: u64 = 10;
const TAG_CORPUS_BACKGROUNDS: u64 = 11;
const TAG_CORPUS_QA: u64 = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComposeError {
    #[error("{backgrounds} backgrounds cannot be uniquely paired with {targets} targets")]
    InsufficientBackgrounds { targets: usize, backgrounds: usize },
    #[error("clip {clip_id:?} has kind {found:?}, expected {expected:?}")]
    WrongKind {
        clip_id: String,
        expected: ClipKind,
        found: ClipKind,
    },
    #[error("clip {0:?} has no frames")]
    EmptyClip(String),
    #[error("no QA annotation for target clip {0:?}")]
    MissingQA(String),
    #[error("insertion index {index} exceeds background length {len}")]
    InsertionOutOfRange { index: u64, len: u64 },
    #[error("manifest {video_id:?} is inconsistent: {reason}")]
    InconsistentManifest { video_id: String, reason: &'static str },
    #[error("split ratios must be positive and sum to 1, got ({0}, {1}, {2})")]
    InvalidRatios(f64, f64, f64),
    #[error("invalid duration model: {0}")]
    DurationModel(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipKind {
    Background,
    Target,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceClip {
    pub clip_id: String,
    pub length_frames: u64,
    pub kind: ClipKind,
}

impl SourceClip {
    pub fn new(clip_id: impl Into<String>, length_frames: u64, kind: ClipKind) -> Self {
        Self {
            clip_id: clip_id.into(),
            length_frames,
            kind,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QAAnnotation {
    pub question: QuestionContext,
    pub answer_label: String,
    pub answer_space_size: u32,
}

/// QA annotations grouped by target clip id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QaPool {
    by_clip: BTreeMap<String, Vec<QAAnnotation>>,
}

impl QaPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, clip_id: impl Into<String>, qa: QAAnnotation) {
        self.by_clip.entry(clip_id.into()).or_default().push(qa);
    }

    pub fn get(&self, clip_id: &str) -> &[QAAnnotation] {
        self.by_clip.get(clip_id).map_or(&[], Vec::as_slice)
    }

    /// Total number of annotations.
    pub fn len(&self) -> usize {
        self.by_clip.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &QAAnnotation)> {
        self.by_clip
            .iter()
            .flat_map(|(k, v)| v.iter().map(move |qa| (k.as_str(), qa)))
    }
}

impl FromIterator<(String, QAAnnotation)> for QaPool {
    fn from_iter<I: IntoIterator<Item = (String, QAAnnotation)>>(iter: I) -> Self {
        let mut pool = QaPool::new();
        for (clip, qa) in iter {
            pool.insert(clip, qa);
        }
        pool
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// One composed video.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ManifestFields", into = "ManifestFields")]
pub struct CompositionManifest {
    video_id: String,
    background: SourceClip,
    target: SourceClip,
    insertion_index: FrameIndex,
    ground_truth: FrameInterval,
    total_length: u64,
    qa: QAAnnotation,
    split: Split,
}

#[derive(Serialize, Deserialize)]
struct ManifestFields {
    video_id: String,
    background: SourceClip,
    target: SourceClip,
    insertion_index: FrameIndex,
    ground_truth: FrameInterval,
    total_length: u64,
    qa: QAAnnotation,
    split: Split,
}

impl TryFrom<ManifestFields> for CompositionManifest {
    type Error = ComposeError;

    fn try_from(f: ManifestFields) -> Result<Self, Self::Error> {
        let m = CompositionManifest::new(
            f.video_id,
            f.background,
            f.target,
            f.insertion_index,
            f.qa,
            f.split,
        )?;
        let bad = |reason| ComposeError::InconsistentManifest {
            video_id: m.video_id.clone(),
            reason,
        };
        if m.ground_truth != f.ground_truth {
            return Err(bad("ground_truth does not match insertion and target length"));
        }
        if m.total_length != f.total_length {
            return Err(bad("total_length is not background + target length"));
        }
        Ok(m)
    }
}

impl From<CompositionManifest> for ManifestFields {
    fn from(m: CompositionManifest) -> Self {
        ManifestFields {
            video_id: m.video_id,
            background: m.background,
            target: m.target,
            insertion_index: m.insertion_index,
            ground_truth: m.ground_truth,
            total_length: m.total_length,
            qa: m.qa,
            split: m.split,
        }
    }
}

fn check_clip(clip: &SourceClip, expected: ClipKind) -> Result<(), ComposeError> {
    if clip.kind != expected {
        return Err(ComposeError::WrongKind {
            clip_id: clip.clip_id.clone(),
            expected,
            found: clip.kind,
        });
    }
    if clip.length_frames == 0 {
        return Err(ComposeError::EmptyClip(clip.clip_id.clone()));
    }
    Ok(())
}

impl CompositionManifest {
    pub fn new(
        video_id: String,
        background: SourceClip,
        target: SourceClip,
        insertion_index: FrameIndex,
        qa: QAAnnotation,
        split: Split,
    ) -> Result<Self, ComposeError> {
        check_clip(&background, ClipKind::Background)?;
        check_clip(&target, ClipKind::Target)?;
        if insertion_index.get() > background.length_frames {
            return Err(ComposeError::InsertionOutOfRange {
                index: insertion_index.get(),
                len: background.length_frames,
            });
        }
        let ground_truth = FrameInterval::with_len(insertion_index.get(), target.length_frames);
        let total_length = background.length_frames + target.length_frames;
        Ok(Self {
            video_id,
            background,
            target,
            insertion_index,
            ground_truth,
            total_length,
            qa,
            split,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn background(&self) -> &SourceClip {
        &self.background
    }

    pub fn target(&self) -> &SourceClip {
        &self.target
    }

    pub fn insertion_index(&self) -> FrameIndex {
        self.insertion_index
    }

    pub fn ground_truth(&self) -> FrameInterval {
        self.ground_truth
    }

    pub fn total_length(&self) -> u64 {
        self.total_length
    }

    pub fn qa(&self) -> &QAAnnotation {
        &self.qa
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn set_split(&mut self, split: Split) {
        self.split = split;
    }
}

/// Injective random assignment of one background per target.
pub fn pair_unique(
    targets: &[SourceClip],
    backgrounds: &[SourceClip],
    seed: u64,
) -> Result<Vec<(SourceClip, SourceClip)>, ComposeError> {
    for t in targets {
        check_clip(t, ClipKind::Target)?;
    }
    for b in backgrounds {
        check_clip(b, ClipKind::Background)?;
    }
    if backgrounds.len() < targets.len() {
        return Err(ComposeError::InsufficientBackgrounds {
            targets: targets.len(),
            backgrounds: backgrounds.len(),
        });
    }
    // Partial Fisher-Yates: position i receives a uniform pick from the untaken rest.
    let mut order: Vec<usize> = (0..backgrounds.len()).collect();
    let mut rng = SeededRng::new(seed);
    let n = order.len() as u64;
    let mut pairs = Vec::with_capacity(targets.len());
    for (i, t) in targets.iter().enumerate() {
        let j = i + rng.below(n - i as u64) as usize;
        order.swap(i, j);
        pairs.push((t.clone(), backgrounds[order[i]].clone()));
    }
    Ok(pairs)
}

/// Uniform insertion index over `0..=background_length`.
pub fn draw_insertion(background_length: u64, seed: u64) -> FrameIndex {
    FrameIndex(SeededRng::new(seed).below(background_length + 1))
}

/// Build one manifest per target. Every manifest starts tagged [`Split::Train`]; see [`split`].
///
/// Per-manifest randomness comes from seeds derived from `seed` and the target's
/// position, so manifests can be built independently.
pub fn compose(
    targets: &[SourceClip],
    backgrounds: &[SourceClip],
    qa_pool: &QaPool,
    seed: u64,
) -> Result<Vec<CompositionManifest>, ComposeError> {
    if let Some(t) = targets.iter().find(|t| qa_pool.get(&t.clip_id).is_empty()) {
        return Err(ComposeError::MissingQA(t.clip_id.clone()));
    }
    let pairs = pair_unique(targets, backgrounds, derive_seed(seed, TAG_PAIR))?;
    let manifest_seed = derive_seed(seed, TAG_MANIFEST);
    pairs
        .into_iter()
        .enumerate()
        .map(|(i, (target, background))| {
            let s = derive_seed(manifest_seed, i as u64);
            let insertion = draw_insertion(background.length_frames, s);
            let choices = qa_pool.get(&target.clip_id);
            let pick = SeededRng::new(derive_seed(s, TAG_QA)).below(choices.len() as u64);
            CompositionManifest::new(
                format!("video_{i:05}"),
                background,
                target,
                insertion,
                choices[pick as usize].clone(),
                Split::Train,
            )
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.7,
            val: 0.1,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self, ComposeError> {
        let ok = [train, val, test].iter().all(|r| *r > 0.0 && r.is_finite())
            && (train + val + test - 1.0).abs() <= 1e-9;
        if !ok {
            return Err(ComposeError::InvalidRatios(train, val, test));
        }
        Ok(Self { train, val, test })
    }

    /// `(train, val, test)` counts for `n` items: val and test are floored, train takes the rest.
    pub fn counts(&self, n: usize) -> SplitCounts {
        // The epsilon keeps products such as 0.29 * 100 from flooring one short.
        let floor = |r: f64| libm::floor(r * n as f64 + 1e-9) as usize;
        let val = floor(self.val);
        let test = floor(self.test);
        SplitCounts {
            train: n - val - test,
            val,
            test,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn of(manifests: &[CompositionManifest]) -> Self {
        let mut c = SplitCounts::default();
        for m in manifests {
            match m.split {
                Split::Train => c.train += 1,
                Split::Val => c.val += 1,
                Split::Test => c.test += 1,
            }
        }
        c
    }
}

/// Randomly partition `manifests` into exactly sized splits, in place.
pub fn split(manifests: &mut [CompositionManifest], ratios: &SplitRatios, seed: u64) -> SplitCounts {
    let counts = ratios.counts(manifests.len());
    let mut order: Vec<usize> = (0..manifests.len()).collect();
    let mut rng = SeededRng::new(seed);
    for i in (1..order.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    for (rank, &i) in order.iter().enumerate() {
        manifests[i].split = if rank < counts.val {
            Split::Val
        } else if rank < counts.val + counts.test {
            Split::Test
        } else {
            Split::Train
        };
    }
    counts
}

/// Synthetic confidence profile whose plateau is the manifest's ground truth.
pub fn synth_profile_for(
    manifest: &CompositionManifest,
    baseline_mean: f64,
    plateau_mean: f64,
    noise_std: f64,
    seed: u64,
) -> Result<SyntheticProfile, ProfileError> {
    SyntheticProfile::new(
        manifest.total_length,
        baseline_mean,
        manifest.ground_truth,
        plateau_mean,
        noise_std,
        seed,
    )
}

/// Clip durations in seconds: an exponential tail above `min_s`, truncated at
/// `max_s`, with its rate solved so the truncated mean equals `mean_s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationModel {
    pub min_s: f64,
    pub max_s: f64,
    pub mean_s: f64,
    rate: f64,
}

impl DurationModel {
    pub fn new(min_s: f64, max_s: f64, mean_s: f64) -> Result<Self, ComposeError> {
        if !(min_s > 0.0 && max_s > min_s) {
            return Err(ComposeError::DurationModel("need 0 < min < max"));
        }
        let width = max_s - min_s;
        let excess = mean_s - min_s;
        if !(excess > 0.0 && excess < width / 2.0) {
            return Err(ComposeError::DurationModel("mean must lie in (min, (min + max) / 2)"));
        }
        // Truncated mean is decreasing in the rate; bisect in log space.
        let (mut lo, mut hi) = (1e-12f64, 1e6f64);
        for _ in 0..200 {
            let mid = libm::sqrt(lo * hi);
            if truncated_exp_mean(mid, width) > excess {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Self {
            min_s,
            max_s,
            mean_s,
            rate: libm::sqrt(lo * hi),
        })
    }

    /// Target clips: 9.32 s to 30 s, 14 s on average.
    pub fn target_default() -> Self {
        Self::new(9.32, 30.0, 14.0).expect("valid constants")
    }

    /// Background streams chosen so composed videos span 22.04 s to 447.04 s
    /// and average 63 s together with [`DurationModel::target_default`].
    pub fn background_default() -> Self {
        Self::new(12.72, 417.04, 49.0).expect("valid constants")
    }

    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        let width = self.max_s - self.min_s;
        let u = rng.unit_f64();
        let mass = -libm::expm1(-self.rate * width);
        let x = -libm::log1p(-u * mass) / self.rate;
        (self.min_s + x).clamp(self.min_s, self.max_s)
    }
}

fn truncated_exp_mean(rate: f64, width: f64) -> f64 {
    let lw = rate * width;
    if lw < 1e-6 {
        return width / 2.0;
    }
    1.0 / rate - width / libm::expm1(lw)
}

/// Frames covering `seconds` at `fps`, at least one.
pub fn frames_for(seconds: f64, fps: f64) -> u64 {
    (libm::round(seconds * fps) as u64).max(1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub scan_rate_fps: f64,
    pub target: DurationModel,
    pub background: DurationModel,
    /// Backgrounds generated per target (10,464 backgrounds for 10,000 targets by default).
    pub backgrounds_per_target: f64,
    /// Each target receives between 1 and this many QA annotations.
    pub max_qa_per_target: u32,
    pub answer_space_size: u32,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            scan_rate_fps: 4.0,
            target: DurationModel::target_default(),
            background: DurationModel::background_default(),
            backgrounds_per_target: 1.0464,
            max_qa_per_target: 3,
            answer_space_size: DEFAULT_ANSWER_SPACE,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub targets: Vec<SourceClip>,
    pub backgrounds: Vec<SourceClip>,
    pub qa_pool: QaPool,
}

fn question_text(kind: QuestionType, clip_id: &str) -> String {
    match kind {
        QuestionType::What => format!("what is happening in {clip_id}"),
        QuestionType::Who => format!("who appears in {clip_id}"),
        QuestionType::How => format!("how does the action in {clip_id} unfold"),
        QuestionType::Where => format!("where does {clip_id} take place"),
        QuestionType::When => format!("when does the event in {clip_id} occur"),
    }
}

/// Fabricate `count` target clips, their backgrounds and a QA pool.
pub fn synthetic_corpus(count: usize, params: &CorpusParams, seed: u64) -> SyntheticCorpus {
    let fps = params.scan_rate_fps;
    let mut rng = SeededRng::new(derive_seed(seed, TAG_CORPUS_TARGETS));
    let targets: Vec<SourceClip> = (0..count)
        .map(|i| {
            let secs = params.target.sample(&mut rng);
            SourceClip::new(format!("target_{i:05}"), frames_for(secs, fps), ClipKind::Target)
        })
        .collect();
    let n_bg = libm::ceil(count as f64 * params.backgrounds_per_target.max(1.0)) as usize;
    let mut rng = SeededRng::new(derive_seed(seed, TAG_CORPUS_BACKGROUNDS));
    let backgrounds = (0..n_bg.max(count))
        .map(|i| {
            let secs = params.background.sample(&mut rng);
            SourceClip::new(format!("background_{i:05}"), frames_for(secs, fps), ClipKind::Background)
        })
        .collect();
    let mut rng = SeededRng::new(derive_seed(seed, TAG_CORPUS_QA));
    let mut qa_pool = QaPool::new();
    let space = params.answer_space_size.max(1);
    for t in &targets {
        let n = 1 + rng.below(u64::from(params.max_qa_per_target.max(1)));
        for j in 0..n {
            let kind = QuestionType::ALL[rng.below(5) as usize];
            let label = rng.below(u64::from(space));
            qa_pool.insert(
                t.clip_id.clone(),
                QAAnnotation {
                    question: QuestionContext {
                        question_id: format!("{}_q{j}", t.clip_id),
                        question_text: question_text(kind, &t.clip_id),
                        question_type: kind,
                        embedding: None,
                    },
                    answer_label: format!("answer_{label:04}"),
                    answer_space_size: space,
                },
            );
        }
    }
    SyntheticCorpus {
        targets,
        backgrounds,
        qa_pool,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationStats {
    pub min_s: f64,
    pub mean_s: f64,
    pub max_s: f64,
}

impl DurationStats {
    fn of(lengths: impl Iterator<Item = u64>, fps: f64) -> Self {
        let (mut min, mut max, mut sum, mut n) = (u64::MAX, 0u64, 0u64, 0u64);
        for l in lengths {
            min = min.min(l);
            max = max.max(l);
            sum += l;
            n += 1;
        }
        if n == 0 {
            return Self {
                min_s: 0.0,
                mean_s: 0.0,
                max_s: 0.0,
            };
        }
        Self {
            min_s: min as f64 / fps,
            mean_s: sum as f64 / n as f64 / fps,
            max_s: max as f64 / fps,
        }
    }
}

/// Corpus statistics recorded next to a manifest file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub count: usize,
    pub scan_rate_fps: f64,
    pub duration: DurationStats,
    pub target_duration: DurationStats,
    pub background_duration: DurationStats,
    pub splits: SplitCounts,
    pub question_types: BTreeMap<QuestionType, usize>,
}

pub fn summarize(manifests: &[CompositionManifest], scan_rate_fps: f64) -> CorpusSummary {
    let mut question_types: BTreeMap<QuestionType, usize> =
        QuestionType::ALL.iter().map(|&t| (t, 0)).collect();
    for m in manifests {
        *question_types.entry(m.qa.question.question_type).or_default() += 1;
    }
    CorpusSummary {
        count: manifests.len(),
        scan_rate_fps,
        duration: DurationStats::of(manifests.iter().map(|m| m.total_length), scan_rate_fps),
        target_duration: DurationStats::of(
            manifests.iter().map(|m| m.target.length_frames),
            scan_rate_fps,
        ),
        background_duration: DurationStats::of(
            manifests.iter().map(|m| m.background.length_frames),
            scan_rate_fps,
        ),
        splits: SplitCounts::of(manifests),
        question_types,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use std::collections::BTreeSet;
    use std::vec;

    fn clips(prefix: &str, n: usize, len: u64, kind: ClipKind) -> Vec<SourceClip> {
        (0..n).map(|i| SourceClip::new(format!("{prefix}{i}"), len + i as u64 % 7, kind)).collect()
    }

    fn qa(clip: &str, kind: QuestionType) -> QAAnnotation {
        QAAnnotation {
            question: QuestionContext {
                question_id: format!("{clip}-q"),
                question_text: "what".into(),
                question_type: kind,
                embedding: None,
            },
            answer_label: "a".into(),
            answer_space_size: DEFAULT_ANSWER_SPACE,
        }
    }

    fn pool_for(targets: &[SourceClip]) -> QaPool {
        targets.iter().map(|t| (t.clip_id.clone(), qa(&t.clip_id, QuestionType::Who))).collect()
    }

    fn chi2_p(observed: &[u64], expected: &[f64]) -> f64 {
        let stat: f64 = observed
            .iter()
            .zip(expected)
            .filter(|(_, e)| **e > 0.0)
            .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
            .sum();
        let dof = expected.iter().filter(|e| **e > 0.0).count() - 1;
        1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat)
    }

    #[test]
    fn pairing_at_full_corpus_scale() {
        let t = clips("t", 10_000, 50, ClipKind::Target);
        let b = clips("b", 10_464, 190, ClipKind::Background);
        let pairs = pair_unique(&t, &b, 5).unwrap();
        assert_eq!(pairs.len(), 10_000);
        let distinct: BTreeSet<_> = pairs.iter().map(|(_, bg)| bg.clip_id.clone()).collect();
        assert_eq!(distinct.len(), 10_000);
        assert!(pairs.iter().zip(&t).all(|((pt, _), tt)| pt == tt));
    }

    #[test]
    fn pairing_edges() {
        let t = clips("t", 1, 5, ClipKind::Target);
        let b = clips("b", 1, 9, ClipKind::Background);
        assert_eq!(pair_unique(&t, &b, 0).unwrap(), vec![(t[0].clone(), b[0].clone())]);
        let t3 = clips("t", 3, 5, ClipKind::Target);
        let b2 = clips("b", 2, 9, ClipKind::Background);
        assert_eq!(
            pair_unique(&t3, &b2, 0),
            Err(ComposeError::InsufficientBackgrounds { targets: 3, backgrounds: 2 })
        );
        assert!(matches!(pair_unique(&b2, &b2, 0), Err(ComposeError::WrongKind { .. })));
    }

    #[test]
    fn insertion_draws() {
        for seed in 0..50 {
            assert!(draw_insertion(1, seed).get() <= 1);
            assert_eq!(draw_insertion(1, seed), draw_insertion(1, seed));
        }
        let seen: BTreeSet<u64> = (0..50).map(|s| draw_insertion(1, s).get()).collect();
        assert_eq!(seen.len(), 2);
    }

    #[test]
    fn insertion_uniform_chi_square() {
        let mut counts = vec![0u64; 101];
        for seed in 0..100_000u64 {
            counts[draw_insertion(100, seed).get() as usize] += 1;
        }
        let expected = vec![100_000.0 / 101.0; 101];
        let p = chi2_p(&counts, &expected);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn compose_worked_arithmetic() {
        let bg = SourceClip::new("bg", 192, ClipKind::Background);
        let tg = SourceClip::new("tg", 56, ClipKind::Target);
        let m = CompositionManifest::new("v".into(), bg.clone(), tg.clone(), FrameIndex(100), qa("tg", QuestionType::What), Split::Test).unwrap();
        assert_eq!(m.ground_truth(), FrameInterval::new(100, 156).unwrap());
        assert_eq!(m.total_length(), 248);
        assert_eq!(m.total_length() as f64 / 4.0, 62.0);
        let first = CompositionManifest::new("v".into(), bg.clone(), tg.clone(), FrameIndex(0), qa("tg", QuestionType::What), Split::Test).unwrap();
        assert_eq!(first.ground_truth().start(), FrameIndex(0));
        let last = CompositionManifest::new("v".into(), bg.clone(), tg.clone(), FrameIndex(192), qa("tg", QuestionType::What), Split::Test).unwrap();
        assert_eq!(last.ground_truth().end().get(), last.total_length());
        assert_eq!(
            CompositionManifest::new("v".into(), bg, tg, FrameIndex(193), qa("tg", QuestionType::What), Split::Test),
            Err(ComposeError::InsertionOutOfRange { index: 193, len: 192 })
        );
    }

    #[test]
    fn compose_missing_qa() {
        let t = clips("t", 3, 5, ClipKind::Target);
        let b = clips("b", 3, 9, ClipKind::Background);
        let mut pool = pool_for(&t[..2]);
        assert_eq!(compose(&t, &b, &pool, 1), Err(ComposeError::MissingQA("t2".into())));
        pool.insert("t2", qa("t2", QuestionType::How));
        let ms = compose(&t, &b, &pool, 1).unwrap();
        assert_eq!(ms.len(), 3);
        assert_eq!(ms, compose(&t, &b, &pool, 1).unwrap());
    }

    #[test]
    fn manifest_serde_validates() {
        let t = clips("t", 2, 5, ClipKind::Target);
        let b = clips("b", 2, 9, ClipKind::Background);
        let m = compose(&t, &b, &pool_for(&t), 3).unwrap().remove(0);
        let json = serde_json::to_string(&m).unwrap();
        for key in ["video_id", "background", "target", "insertion_index", "ground_truth", "total_length", "qa", "split"] {
            assert!(json.contains(&format!("\"{key}\"")), "{key}");
        }
        assert_eq!(serde_json::from_str::<CompositionManifest>(&json).unwrap(), m);
        let tampered = json.replace(&format!("\"total_length\":{}", m.total_length()), "\"total_length\":1");
        assert!(serde_json::from_str::<CompositionManifest>(&tampered).is_err());
    }

    #[test]
    fn split_counts() {
        let r = SplitRatios::default();
        assert_eq!(r.counts(10_000), SplitCounts { train: 7000, val: 1000, test: 2000 });
        assert_eq!(r.counts(10), SplitCounts { train: 7, val: 1, test: 2 });
        assert_eq!(r.counts(3), SplitCounts { train: 3, val: 0, test: 0 });
        assert!(SplitRatios::new(0.5, 0.5, 0.1).is_err());
        assert!(SplitRatios::new(0.8, 0.2, 0.0).is_err());
    }

    #[test]
    fn split_assigns_exact_sizes() {
        let t = clips("t", 10, 5, ClipKind::Target);
        let b = clips("b", 10, 9, ClipKind::Background);
        let mut ms = compose(&t, &b, &pool_for(&t), 4).unwrap();
        let counts = split(&mut ms, &SplitRatios::default(), 9);
        assert_eq!(counts, SplitCounts::of(&ms));
        assert_eq!(counts, SplitCounts { train: 7, val: 1, test: 2 });
    }

    #[test]
    fn profile_passes_ground_truth() {
        let bg = SourceClip::new("bg", 192, ClipKind::Background);
        let tg = SourceClip::new("tg", 56, ClipKind::Target);
        let m = CompositionManifest::new("v".into(), bg, tg, FrameIndex(100), qa("tg", QuestionType::What), Split::Train).unwrap();
        let p = synth_profile_for(&m, 0.1, 0.6, 0.0, 0).unwrap();
        assert_eq!(p.plateau_interval(), FrameInterval::new(100, 156).unwrap());
        assert_eq!(p.stream_length(), 248);
        assert!(p.plateau_mean() >= 0.4 && p.baseline_mean() < 0.3);
    }

    #[test]
    fn noisy_baseline_stays_below_c_min() {
        // P(N(0.1, 0.05) >= 0.3) = P(Z >= 4) ~ 3.2e-5.
        let tail = 1.0 - statrs::distribution::Normal::new(0.0, 1.0).unwrap().cdf(4.0);
        assert!(tail < 1e-3);
        let bg = SourceClip::new("bg", 20_000, ClipKind::Background);
        let tg = SourceClip::new("tg", 1, ClipKind::Target);
        let m = CompositionManifest::new("v".into(), bg, tg, FrameIndex(20_000), qa("tg", QuestionType::What), Split::Train).unwrap();
        let p = synth_profile_for(&m, 0.1, 0.6, 0.05, 11).unwrap();
        let below = (0..20_000)
            .filter(|&f| crate::scorer::synthetic_score(&p, FrameIndex(f)).unwrap() < 0.3)
            .count();
        assert!(below as f64 / 20_000.0 >= 0.999, "{below}");
    }

    #[test]
    fn duration_model_hits_mean() {
        let m = DurationModel::target_default();
        let mut rng = SeededRng::new(1);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| m.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 14.0).abs() < 0.05, "{mean}");
        assert!(xs.iter().all(|&x| (9.32..=30.0).contains(&x)));
        assert!(DurationModel::new(10.0, 20.0, 16.0).is_err());
    }

    #[test]
    fn corpus_question_types_follow_pool() {
        let c = synthetic_corpus(4000, &CorpusParams::default(), 21);
        let ms = compose(&c.targets, &c.backgrounds, &c.qa_pool, 21).unwrap();
        // Expected share of each type: average over targets of that type's share in the target's pool.
        let mut expected = [0.0f64; 5];
        for t in &c.targets {
            let anns = c.qa_pool.get(&t.clip_id);
            for a in anns {
                let k = QuestionType::ALL.iter().position(|&x| x == a.question.question_type).unwrap();
                expected[k] += 1.0 / anns.len() as f64;
            }
        }
        let mut observed = [0u64; 5];
        for m in &ms {
            let k = QuestionType::ALL.iter().position(|&x| x == m.qa().question.question_type).unwrap();
            observed[k] += 1;
        }
        assert!(chi2_p(&observed, &expected) > 0.001);
    }

    #[test]
    fn summary_reports_table_scale_durations() {
        let c = synthetic_corpus(2000, &CorpusParams::default(), 8);
        let mut ms = compose(&c.targets, &c.backgrounds, &c.qa_pool, 8).unwrap();
        split(&mut ms, &SplitRatios::default(), 8);
        let s = summarize(&ms, 4.0);
        assert_eq!(s.count, 2000);
        assert!((s.duration.mean_s - 63.0).abs() < 3.0, "{}", s.duration.mean_s);
        assert!(s.duration.min_s >= 22.0 && s.duration.max_s <= 447.04 + 0.25);
        assert_eq!(s.question_types.values().sum::<usize>(), 2000);
        assert_eq!(s.splits, SplitCounts { train: 1400, val: 200, test: 400 });
    }

    proptest! {
        #[test]
        fn composed_manifests_are_consistent(nt in 1usize..40, extra in 0usize..10, seed: u64) {
            let t = clips("t", nt, 3, ClipKind::Target);
            let b = clips("b", nt + extra, 11, ClipKind::Background);
            let ms = compose(&t, &b, &pool_for(&t), seed).unwrap();
            let bgs: BTreeSet<_> = ms.iter().map(|m| m.background().clip_id.clone()).collect();
            prop_assert_eq!(bgs.len(), nt);
            for (m, tt) in ms.iter().zip(&t) {
                prop_assert_eq!(m.target(), tt);
                prop_assert_eq!(m.ground_truth().len(), tt.length_frames);
                prop_assert!(m.ground_truth().end().get() <= m.total_length());
                prop_assert!(m.insertion_index().get() <= m.background().length_frames);
            }
        }

        #[test]
        fn split_partition_exact(n in 0usize..300, seed: u64) {
            let t = clips("t", n, 3, ClipKind::Target);
            let b = clips("b", n, 11, ClipKind::Background);
            let mut ms = compose(&t, &b, &pool_for(&t), 1).unwrap();
            let c = split(&mut ms, &SplitRatios::default(), seed);
            prop_assert_eq!(c, SplitCounts::of(&ms));
            prop_assert_eq!(c.train + c.val + c.test, n);
            prop_assert_eq!(c.val, (n as f64 * 0.1 + 1e-9).floor() as usize);
            prop_assert_eq!(c.test, (n as f64 * 0.2 + 1e-9).floor() as usize);
        }
    }
}
