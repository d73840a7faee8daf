//! Synthetic robustness benchmark: a base shape is mapped through a random
//! similarity transform and then perturbed by one of five disturbance
//! categories. Ground-truth correspondences are tracked throughout so the
//! fraction of recovered matches can be scored.
//!
//! All randomness of a trial flows from its seed: stream 0 drives geometry
//! (transform and perturbation), stream 1 drives the order of scene points.
//! Suites derive trial seeds from `(suite seed, trial index)` only, so the
//! same trial index sees the same pose and the same perturbation directions
//! at every level of every category.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::icp_baseline;
use crate::cloud::PointCloud;
use crate::config::MatchConfig;
use crate::error::{Error, Result};
use crate::io::parse_points;
use crate::pathfollow::match_point_sets;
use crate::rng::{mix_seed, RngStream};
use crate::transform::SimilarityTransform;

const DEFORMATION_BUMPS: usize = 5;
/// Width of each deformation bump relative to the scene RMS radius.
const BUMP_WIDTH: f64 = 0.5;
/// Outliers are drawn in the bounding box enlarged by this factor.
const OUTLIER_BOX: f64 = 1.5;

const BUNDLED_SHAPE: &str = include_str!("../data/helix_cluster.txt");

/// The bundled 60-point 3-D base shape: a two-turn helix interleaved with
/// a compact cluster. Any prefix of it keeps both parts.
pub fn bundled_shape() -> PointCloud {
    parse_points(BUNDLED_SHAPE).expect("bundled shape parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Deformation,
    Noise,
    Outliers,
    Occlusion,
    CoexistingOutliers,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Deformation,
        Category::Noise,
        Category::Outliers,
        Category::Occlusion,
        Category::CoexistingOutliers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Deformation => "deformation",
            Category::Noise => "noise",
            Category::Outliers => "outliers",
            Category::Occlusion => "occlusion",
            Category::CoexistingOutliers => "coexisting_outliers",
        }
    }

    /// Default grid of five levels. Deformation and noise levels are
    /// magnitudes relative to the scene RMS radius; the others are
    /// fractions of the base point count.
    pub fn default_levels(self) -> Vec<f64> {
        match self {
            Category::Deformation => vec![0.05, 0.1, 0.15, 0.2, 0.25],
            Category::Noise => vec![0.01, 0.02, 0.03, 0.04, 0.05],
            Category::Outliers | Category::Occlusion | Category::CoexistingOutliers => {
                vec![0.1, 0.2, 0.3, 0.4, 0.5]
            }
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidTrial(format!("unknown category '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub category: Category,
    pub level: f64,
    pub rotation_max_deg: f64,
    pub scale_range: (f64, f64),
    /// Translation components are uniform in `±translation_scale · rms`.
    pub translation_scale: f64,
    /// Randomly permute the scene points.
    pub shuffle: bool,
    pub trial_seed: u64,
}

impl TrialSpec {
    pub fn new(category: Category, level: f64, trial_seed: u64) -> Self {
        Self {
            category,
            level,
            rotation_max_deg: 60.0,
            scale_range: (0.5, 1.5),
            translation_scale: 1.0,
            shuffle: true,
            trial_seed,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTrial(m));
        if !(self.level >= 0.0 && self.level.is_finite()) {
            return bad(format!("level must be a non-negative number, got {}", self.level));
        }
        if self.category == Category::Occlusion && self.level >= 1.0 {
            return bad(format!("occlusion level {} leaves no points", self.level));
        }
        if !(0.0..=180.0).contains(&self.rotation_max_deg) {
            return bad(format!("rotation cap {} is outside [0, 180]", self.rotation_max_deg));
        }
        let (lo, hi) = self.scale_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("scale range [{lo}, {hi}] is invalid"));
        }
        if !(self.translation_scale >= 0.0 && self.translation_scale.is_finite()) {
            return bad("translation scale must be non-negative".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trial {
    pub model: PointCloud,
    pub scene: PointCloud,
    /// `(model index, scene index)` of surviving true correspondences.
    pub gt_pairs: Vec<(usize, usize)>,
    pub gt_transform: SimilarityTransform,
}

/// `⌈level · m⌉`, tolerant of products like `0.1 * 30` landing just above
/// an integer.
fn perturbed_count(level: f64, m: usize) -> usize {
    (level * m as f64 - 1e-9).ceil().max(0.0) as usize
}

fn uniform_in_box(rng: &mut RngStream, cloud: &PointCloud, count: usize) -> Vec<Vec<f64>> {
    let d = cloud.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in cloud.points() {
        for k in 0..d {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (0..count)
        .map(|_| {
            (0..d)
                .map(|k| {
                    let center = 0.5 * (lo[k] + hi[k]);
                    let half = 0.5 * (hi[k] - lo[k]) * OUTLIER_BOX;
                    rng.uniform_range(center - half, center + half)
                })
                .collect()
        })
        .collect()
}

/// Builds a model/scene pair from `base` following `spec`.
pub fn generate_trial(base: &PointCloud, spec: &TrialSpec) -> Result<Trial> {
    spec.validate()?;
    let d = base.dim();
    let m = base.len();
    let mut rng = RngStream::with_stream(spec.trial_seed, 0);
    let mut order_rng = RngStream::with_stream(spec.trial_seed, 1);

    let rotation = rng.rotation(d, spec.rotation_max_deg.to_radians());
    let scale = rng.uniform_range(spec.scale_range.0, spec.scale_range.1);
    let spread = spec.translation_scale * base.rms_radius();
    let translation = DVector::from_iterator(d, (0..d).map(|_| rng.uniform_range(-spread, spread)));
    let gt_transform = SimilarityTransform::new(scale, rotation, translation)?;

    let image = gt_transform.apply_cloud(base)?;
    let rms = image.rms_radius();
    let mut inliers: Vec<(usize, Vec<f64>)> = image.points().map(|p| p.to_vec()).enumerate().collect();
    let mut scene_outliers: Vec<Vec<f64>> = Vec::new();
    let mut model = base.clone();
    let count = perturbed_count(spec.level, m);

    match spec.category {
        Category::Deformation => {
            let amplitude = spec.level * rms;
            let width2 = (BUMP_WIDTH * rms).powi(2);
            let bumps: Vec<(Vec<f64>, Vec<f64>)> = (0..DEFORMATION_BUMPS)
                .map(|_| {
                    let center = image.point(rng.index(m)).to_vec();
                    let dir: Vec<f64> = rng.unit_vector(d).into_iter().map(|v| v * amplitude).collect();
                    (center, dir)
                })
                .collect();
            for (i, p) in inliers.iter_mut() {
                let x = image.point(*i);
                for (center, dir) in &bumps {
                    let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                    let w = (-r2 / (2.0 * width2)).exp();
                    for (c, v) in p.iter_mut().zip(dir) {
                        *c += w * v;
                    }
                }
            }
        }
        Category::Noise => {
            let sigma = spec.level * rms;
            for (_, p) in inliers.iter_mut() {
                for c in p.iter_mut() {
                    *c += sigma * rng.normal();
                }
            }
        }
        Category::Outliers => {
            scene_outliers = uniform_in_box(&mut rng, &image, count);
        }
        Category::Occlusion => {
            if count >= m {
                return Err(Error::InvalidTrial(format!(
                    "occlusion level {} removes all {m} points",
                    spec.level
                )));
            }
            let dir = rng.unit_vector(d);
            let mut ranked: Vec<(f64, usize)> = inliers
                .iter()
                .map(|(i, p)| (p.iter().zip(&dir).map(|(a, b)| a * b).sum(), *i))
                .collect();
            ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let removed: HashSet<usize> = ranked.iter().take(count).map(|r| r.1).collect();
            inliers.retain(|(i, _)| !removed.contains(i));
        }
        Category::CoexistingOutliers => {
            let extra = uniform_in_box(&mut rng, base, count);
            if !extra.is_empty() {
                model = model.concat(&PointCloud::from_points(&extra)?)?;
            }
            scene_outliers = uniform_in_box(&mut rng, &image, count);
        }
    }

    let mut entries: Vec<(Option<usize>, Vec<f64>)> = inliers
        .into_iter()
        .map(|(i, p)| (Some(i), p))
        .chain(scene_outliers.into_iter().map(|p| (None, p)))
        .collect();
    if spec.shuffle {
        order_rng.shuffle(&mut entries);
    }
    let mut gt_pairs: Vec<(usize, usize)> = entries
        .iter()
        .enumerate()
        .filter_map(|(pos, (src, _))| src.map(|i| (i, pos)))
        .collect();
    gt_pairs.sort_unstable();
    let points: Vec<Vec<f64>> = entries.into_iter().map(|(_, p)| p).collect();
    let scene = PointCloud::from_points(&points)?;

    Ok(Trial {
        model,
        scene,
        gt_pairs,
        gt_transform,
    })
}

/// Fraction of ground-truth pairs present in `found`.
pub fn accuracy(found: &[(usize, usize)], gt_pairs: &[(usize, usize)]) -> Result<f64> {
    if gt_pairs.is_empty() {
        return Err(Error::EmptyGroundTruth);
    }
    let found: HashSet<&(usize, usize)> = found.iter().collect();
    let hits = gt_pairs.iter().filter(|p| found.contains(p)).count();
    Ok(hits as f64 / gt_pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PathFollowing,
    Icp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::PathFollowing => "path_following",
            Method::Icp => "icp",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub category: Category,
    pub level: f64,
    pub trial: usize,
    pub method: Method,
    pub accuracy: f64,
    pub runtime_seconds: f64,
    pub n_model: usize,
    pub n_scene: usize,
    pub recovered_transform: SimilarityTransform,
    pub ground_truth_transform: SimilarityTransform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub category: Category,
    pub level: f64,
    pub method: Method,
    pub n_trials: usize,
    pub mean_accuracy: f64,
    /// Sample standard deviation (zero for a single trial).
    pub std_accuracy: f64,
    pub mean_runtime_s: f64,
}

#[derive(Debug, Clone)]
pub struct SuiteSpec {
    pub categories: Vec<(Category, Vec<f64>)>,
    pub n_trials: usize,
    pub seed: u64,
    pub rotation_max_deg: f64,
    pub scale_range: (f64, f64),
    pub run_baseline: bool,
    /// Worker threads; 1 runs serially.
    pub threads: usize,
    /// When false every runtime is reported as 0 so output is reproducible
    /// byte for byte.
    pub record_timing: bool,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        Self {
            categories: Category::ALL.iter().map(|&c| (c, c.default_levels())).collect(),
            n_trials: 100,
            seed: 0,
            rotation_max_deg: 60.0,
            scale_range: (0.5, 1.5),
            run_baseline: false,
            threads: 1,
            record_timing: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub outcomes: Vec<TrialOutcome>,
    pub summary: Vec<SummaryRow>,
}

impl SuiteReport {
    pub fn summary_for(&self, category: Category, method: Method) -> Vec<&SummaryRow> {
        self.summary
            .iter()
            .filter(|r| r.category == category && r.method == method)
            .collect()
    }
}

/// Seed of trial `index` in a suite seeded with `suite_seed`.
pub fn trial_seed(suite_seed: u64, index: usize) -> u64 {
    mix_seed(suite_seed, index as u64)
}

struct Job {
    category: Category,
    level: f64,
    trial: usize,
}

fn run_job(base: &PointCloud, spec: &SuiteSpec, config: &MatchConfig, job: &Job) -> Result<Vec<TrialOutcome>> {
    let trial_spec = TrialSpec {
        rotation_max_deg: spec.rotation_max_deg,
        scale_range: spec.scale_range,
        ..TrialSpec::new(job.category, job.level, trial_seed(spec.seed, job.trial))
    };
    let trial = generate_trial(base, &trial_spec)?;
    let mut methods = vec![Method::PathFollowing];
    if spec.run_baseline {
        methods.push(Method::Icp);
    }
    methods
        .into_iter()
        .map(|method| {
            let start = Instant::now();
            let result = match method {
                Method::PathFollowing => match_point_sets(&trial.model, &trial.scene, config)?,
                Method::Icp => icp_baseline(&trial.model, &trial.scene, config)?,
            };
            let elapsed = start.elapsed().as_secs_f64();
            Ok(TrialOutcome {
                category: job.category,
                level: job.level,
                trial: job.trial,
                method,
                accuracy: accuracy(&result.matches, &trial.gt_pairs)?,
                runtime_seconds: if spec.record_timing { elapsed } else { 0.0 },
                n_model: trial.model.len(),
                n_scene: trial.scene.len(),
                recovered_transform: result.transform,
                ground_truth_transform: trial.gt_transform.clone(),
            })
        })
        .collect()
}

/// Runs every `(category, level, trial)` cell and summarizes per cell and
/// method. Parallel and serial runs produce identical outcomes.
pub fn run_suite(base: &PointCloud, spec: &SuiteSpec, config: &MatchConfig) -> Result<SuiteReport> {
    config.validate()?;
    if spec.n_trials == 0 {
        return Err(Error::InvalidTrial("at least one trial per cell is required".into()));
    }
    let (lo, hi) = spec.scale_range;
    if lo < config.s_lo || hi > config.s_hi {
        return Err(Error::InvalidTrial(format!(
            "scale range [{lo}, {hi}] exceeds the matcher bounds [{}, {}]",
            config.s_lo, config.s_hi
        )));
    }
    let jobs: Vec<Job> = spec
        .categories
        .iter()
        .flat_map(|(category, levels)| {
            levels.iter().flat_map(move |&level| {
                (0..spec.n_trials).map(move |trial| Job {
                    category: *category,
                    level,
                    trial,
                })
            })
        })
        .collect();

    let per_job: Vec<Vec<TrialOutcome>> = if spec.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.threads)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        pool.install(|| {
            jobs.par_iter()
                .map(|job| run_job(base, spec, config, job))
                .collect::<Result<_>>()
        })?
    } else {
        jobs.iter()
            .map(|job| run_job(base, spec, config, job))
            .collect::<Result<_>>()?
    };
    let outcomes: Vec<TrialOutcome> = per_job.into_iter().flatten().collect();
    let summary = summarize(&outcomes);
    Ok(SuiteReport { outcomes, summary })
}

fn summarize(outcomes: &[TrialOutcome]) -> Vec<SummaryRow> {
    let mut rows: Vec<SummaryRow> = Vec::new();
    let mut cells: Vec<(Category, f64, Method)> = Vec::new();
    for o in outcomes {
        let key = (o.category, o.level, o.method);
        if !cells.contains(&key) {
            cells.push(key);
        }
    }
    for (category, level, method) in cells {
        let cell: Vec<&TrialOutcome> = outcomes
            .iter()
            .filter(|o| o.category == category && o.level == level && o.method == method)
            .collect();
        let n = cell.len() as f64;
        let mean = cell.iter().map(|o| o.accuracy).sum::<f64>() / n;
        let var = if cell.len() > 1 {
            cell.iter().map(|o| (o.accuracy - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        rows.push(SummaryRow {
            category,
            level,
            method,
            n_trials: cell.len(),
            mean_accuracy: mean,
            std_accuracy: var.sqrt(),
            mean_runtime_s: cell.iter().map(|o| o.runtime_seconds).sum::<f64>() / n,
        });
    }
    rows
}

pub fn write_trials_csv<'a, W, I>(outcomes: I, mut out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a TrialOutcome>,
{
    writeln!(out, "category,level,trial,method,accuracy,runtime_s")?;
    for o in outcomes {
        writeln!(
            out,
            "{},{:?},{},{},{:?},{:?}",
            o.category,
            o.level,
            o.trial,
            o.method.name(),
            o.accuracy,
            o.runtime_seconds
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<'a, W, I>(rows: I, mut out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a SummaryRow>,
{
    writeln!(out, "category,level,method,n_trials,mean_accuracy,std_accuracy,mean_runtime_s")?;
    for r in rows {
        writeln!(
            out,
            "{},{:?},{},{},{:?},{:?},{:?}",
            r.category,
            r.level,
            r.method.name(),
            r.n_trials,
            r.mean_accuracy,
            r.std_accuracy,
            r.mean_runtime_s
        )?;
    }
    Ok(())
}
