//! Iterative closest point with closed-form similarity fits, used as a
//! reference method in the benchmark.

use crate::cloud::{normalize_cloud, Normalization, PointCloud};
use crate::config::MatchConfig;
use crate::error::{Error, Result};
use crate::matching::MatchVector;
use crate::objective::{phi_envelope, sr_from_moments, translation_from_moments, VectorizedOperators};
use crate::pathfollow::{MatchResult, MatchWarning};
use crate::transform::SimilarityTransform;

#[derive(Debug, Clone, PartialEq)]
pub struct IcpParams {
    pub max_iters: usize,
    /// Pairs farther than this multiple of the median pair distance are
    /// dropped before each fit.
    pub rejection_factor: f64,
    /// Stop once `|Δs| + ‖ΔR‖_F + ‖Δt‖` falls below this.
    pub convergence_tol: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iters: 50,
            rejection_factor: 2.0,
            convergence_tol: 1e-7,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("ICP needs at least one iteration".into()));
        }
        if !(self.rejection_factor > 0.0) {
            return Err(Error::InvalidConfig("ICP rejection factor must be positive".into()));
        }
        Ok(())
    }
}

/// Mean squared residual of the accepted pairs around one fit step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpIteration {
    pub pairs: usize,
    pub before_fit: f64,
    pub after_fit: f64,
}

#[derive(Debug, Clone)]
pub struct IcpReport {
    pub result: MatchResult,
    pub iterations: Vec<IcpIteration>,
}

/// Nearest scene point for every transformed model point. Ties go to the
/// lower scene index.
fn nearest_pairs(x: &PointCloud, y: &PointCloud, t: &SimilarityTransform) -> Vec<(usize, usize, f64)> {
    x.points()
        .enumerate()
        .map(|(i, p)| {
            let tp = t.apply(p);
            let mut best = (0usize, f64::INFINITY);
            for (j, q) in y.points().enumerate() {
                let d2: f64 = tp.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 < best.1 {
                    best = (j, d2);
                }
            }
            (i, best.0, best.1.sqrt())
        })
        .collect()
}

/// Drops pairs beyond `factor` times the median distance. `floor` keeps
/// rounding noise from deciding the cut when the fit is exact.
fn reject(pairs: &mut Vec<(usize, usize, f64)>, factor: f64, floor: f64) {
    let mut dists: Vec<f64> = pairs.iter().map(|p| p.2).collect();
    dists.sort_by(f64::total_cmp);
    let median = dists[dists.len() / 2];
    let cut = (factor * median).max(floor);
    pairs.retain(|p| p.2 <= cut);
}

fn mean_sq_residual(x: &PointCloud, y: &PointCloud, t: &SimilarityTransform, pairs: &[(usize, usize, f64)]) -> f64 {
    let total: f64 = pairs
        .iter()
        .map(|&(i, j, _)| {
            let tp = t.apply(x.point(i));
            tp.iter().zip(y.point(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        })
        .sum();
    total / pairs.len() as f64
}

/// Runs ICP from the identity (in normalized coordinates when
/// `config.normalize` is set), refitting scale, rotation and translation
/// in closed form on every iteration.
pub fn run_icp(
    model: &PointCloud,
    scene: &PointCloud,
    config: &MatchConfig,
    params: &IcpParams,
) -> Result<IcpReport> {
    config.validate()?;
    params.validate()?;
    if model.dim() != scene.dim() {
        return Err(Error::DimensionMismatch {
            model: model.dim(),
            scene: scene.dim(),
        });
    }
    let d = model.dim();
    let (x, nx, y, ny) = if config.normalize {
        let (x, nx) = normalize_cloud(model)?;
        let (y, ny) = normalize_cloud(scene)?;
        (x, nx, y, ny)
    } else {
        (model.clone(), Normalization::identity(d), scene.clone(), Normalization::identity(d))
    };
    let ops = VectorizedOperators::new(&x, &y)?;
    let (rows, cols) = (ops.rows(), ops.cols());

    let floor = 1e-9 * y.rms_radius().max(f64::MIN_POSITIVE);
    let mut t = SimilarityTransform::identity(d);
    let mut iterations = Vec::new();
    for _ in 0..params.max_iters {
        let mut pairs = nearest_pairs(&x, &y, &t);
        reject(&mut pairs, params.rejection_factor, floor);
        let mut weights = vec![0.0; rows * cols];
        for &(i, j, _) in &pairs {
            weights[i * cols + j] = 1.0;
        }
        let moments = ops.moments(&weights);
        let sol = sr_from_moments(&moments, config)?;
        let translation = translation_from_moments(&moments, sol.scale, &sol.rotation, config.denom_guard)?;
        let next = SimilarityTransform {
            scale: sol.scale,
            rotation: sol.rotation,
            translation,
        };
        iterations.push(IcpIteration {
            pairs: pairs.len(),
            before_fit: mean_sq_residual(&x, &y, &t, &pairs),
            after_fit: mean_sq_residual(&x, &y, &next, &pairs),
        });
        let change = (next.scale - t.scale).abs()
            + (&next.rotation - &t.rotation).norm()
            + (&next.translation - &t.translation).norm();
        t = next;
        if change < params.convergence_tol {
            break;
        }
    }

    // One-to-one output: each scene point keeps its closest model point.
    let mut pairs = nearest_pairs(&x, &y, &t);
    reject(&mut pairs, params.rejection_factor, floor);
    let mut owner: Vec<Option<(usize, f64)>> = vec![None; cols];
    for &(i, j, dist) in &pairs {
        if owner[j].is_none_or(|(_, best)| dist < best) {
            owner[j] = Some((i, dist));
        }
    }
    let mut matches: Vec<(usize, usize)> = owner
        .iter()
        .enumerate()
        .filter_map(|(j, o)| o.map(|(i, _)| (i, j)))
        .collect();
    matches.sort_unstable();
    let vertex = MatchVector::from_pairs(rows, cols, &matches);
    let phi_value = phi_envelope(&vertex, &ops, config);
    let mut warnings = Vec::new();
    if t.scale == 0.0 {
        warnings.push(MatchWarning::ZeroScale);
    }
    let transform = t.denormalize(&nx, &ny);

    Ok(IcpReport {
        result: MatchResult {
            matches,
            vertex,
            transform,
            phi_value,
            path_trace: Vec::new(),
            warnings,
            model_normalization: nx,
            scene_normalization: ny,
        },
        iterations,
    })
}

pub fn icp_baseline(model: &PointCloud, scene: &PointCloud, config: &MatchConfig) -> Result<MatchResult> {
    run_icp(model, scene, config, &IcpParams::default()).map(|r| r.result)
}
