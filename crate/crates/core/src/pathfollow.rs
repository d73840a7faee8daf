//! Path following on `E_λ(p) = (1 − λ)‖p‖² + λ Φ(p)`.
//!
//! `λ` walks from near zero (convex, unique minimizer) to one (the concave
//! matching objective). At each weight the previous solution warm-starts a
//! Frank-Wolfe solver whose linear subproblem is the exact assignment
//! oracle of [`crate::polytope`].

use std::fmt;

use crate::cloud::{normalize_cloud, Normalization, PointCloud};
use crate::config::MatchConfig;
use crate::error::{Error, Result};
use crate::matching::MatchVector;
use crate::objective::{
    envelope_from_moments, gradient_from_parts, phi_envelope, solve_sr, solve_translation,
    Moments, VectorizedOperators,
};
use crate::polytope::{is_feasible, lp_oracle, round_to_vertex};
use crate::transform::SimilarityTransform;

/// Function evaluations allowed per line search, endpoint included.
const LINE_SEARCH_EVALS: usize = 40;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Outcome of one inner minimization at a fixed `λ`.
#[derive(Debug, Clone)]
pub struct PathState {
    pub lambda: f64,
    pub p: MatchVector,
    pub e_value: f64,
    /// Last Frank-Wolfe duality gap `∇E_λᵀ(p − q)`.
    pub fw_gap: f64,
    pub iters: usize,
    pub converged: bool,
    /// Stopped against the denominator guard: every improving step would
    /// have pushed `1ᵀp` below it, or (at `λ = 1` only) the iterate reached
    /// the empty vertex, where the gradient is undefined.
    pub pinned: bool,
    /// `E_λ` before the first step and after every accepted step.
    pub energy_trace: Vec<f64>,
}

/// Compact record of a [`PathState`] kept in [`MatchResult::path_trace`].
#[derive(Debug, Clone, PartialEq)]
pub struct PathStep {
    pub lambda: f64,
    pub e_start: f64,
    pub e_value: f64,
    pub fw_gap: f64,
    pub iters: usize,
    pub converged: bool,
    pub pinned: bool,
    pub feasible: bool,
}

impl From<&PathState> for PathStep {
    fn from(s: &PathState) -> Self {
        Self {
            lambda: s.lambda,
            e_start: s.energy_trace[0],
            e_value: s.e_value,
            fw_gap: s.fw_gap,
            iters: s.iters,
            converged: s.converged,
            pinned: s.pinned,
            feasible: is_feasible(&s.p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchWarning {
    /// No pair survived; the transform is the identity.
    EmptyMatching,
    /// The scale lower bound is zero and was attained.
    ZeroScale,
}

impl fmt::Display for MatchWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchWarning::EmptyMatching => f.write_str("empty matching"),
            MatchWarning::ZeroScale => f.write_str("zero scale"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatchResult {
    /// `(model index, scene index)` pairs, sorted by model index.
    pub matches: Vec<(usize, usize)>,
    pub vertex: MatchVector,
    /// Maps model points onto scene points in data coordinates.
    pub transform: SimilarityTransform,
    /// `Φ` at the final vertex, in the (possibly normalized) space the
    /// matcher worked in.
    pub phi_value: f64,
    pub path_trace: Vec<PathStep>,
    pub warnings: Vec<MatchWarning>,
    pub model_normalization: Normalization,
    pub scene_normalization: Normalization,
}

pub fn e_lambda(p: &MatchVector, lambda: f64, ops: &VectorizedOperators, config: &MatchConfig) -> f64 {
    (1.0 - lambda) * p.norm_sq() + lambda * phi_envelope(p, ops, config)
}

/// Golden-section search for the minimum of `f` on `[0, upper]`, also
/// trying the endpoint `upper`. Returns the best point seen, which is 0
/// (with `f0`) when nothing improves.
fn line_search<F: Fn(f64) -> f64>(f: F, f0: f64, upper: f64) -> (f64, f64) {
    let mut best = (0.0, f0);
    let keep = |g: f64, v: f64, best: &mut (f64, f64)| {
        if v < best.1 {
            *best = (g, v);
        }
    };
    keep(upper, f(upper), &mut best);
    let (mut a, mut b) = (0.0, upper);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    keep(c, fc, &mut best);
    keep(d, fd, &mut best);
    let mut evals = 3;
    while evals < LINE_SEARCH_EVALS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            keep(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            keep(d, fd, &mut best);
        }
        evals += 1;
    }
    best
}

struct Evaluated {
    moments: Moments,
    energy: f64,
    solution: crate::objective::RotationScaleSolution,
}

fn evaluate(p: &[f64], lambda: f64, ops: &VectorizedOperators, config: &MatchConfig) -> Result<Evaluated> {
    let moments = ops.moments(p);
    let (phi, solution) = envelope_from_moments(&moments, config);
    let solution = solution.ok_or(Error::EmptyMatching)?;
    let norm_sq: f64 = p.iter().map(|v| v * v).sum();
    Ok(Evaluated {
        energy: (1.0 - lambda) * norm_sq + lambda * phi,
        moments,
        solution,
    })
}

/// Frank-Wolfe minimization of `E_λ` from `p0`.
///
/// Each step moves toward the oracle vertex for `∇E_λ`, with the step
/// length chosen by line search on `[0, γ_max]`; `γ_max` keeps `1ᵀp`
/// above twice the denominator guard. Only strictly improving steps are
/// taken, so `E_λ` never increases.
pub fn fw_minimize(
    p0: &MatchVector,
    lambda: f64,
    ops: &VectorizedOperators,
    config: &MatchConfig,
) -> Result<PathState> {
    let (rows, cols) = (p0.rows(), p0.cols());
    let guard = config.denom_guard;
    let mut p = p0.as_slice().to_vec();
    let mut cur = evaluate(&p, lambda, ops, config)?;
    let mut trace = vec![cur.energy];
    let mut gap = f64::INFINITY;
    let mut iters = 0;
    let mut converged = false;
    let mut pinned = false;

    while iters < config.fw_max_iters {
        let phi_grad = gradient_from_parts(ops, &cur.moments, &cur.solution, config.mu);
        let grad: Vec<f64> = p
            .iter()
            .zip(&phi_grad)
            .map(|(pk, gk)| 2.0 * (1.0 - lambda) * pk + lambda * gk)
            .collect();
        let oracle = lp_oracle(&grad, rows, cols);
        let q = oracle.vertex.as_slice();
        gap = grad.iter().zip(&p).map(|(g, v)| g * v).sum::<f64>() - oracle.objective;
        if gap < config.fw_tol * (1.0 + cur.energy.abs()) {
            converged = true;
            break;
        }

        let q_moments = ops.moments(q);
        let (sp, sq) = (cur.moments.total, q_moments.total);
        // At λ = 1 the empty vertex itself is a legal end point (Φ(0) = 0);
        // otherwise iterates keep their mass above the guard.
        let to_empty = lambda >= 1.0 && oracle.matched_pairs.is_empty();
        let upper = if sq >= sp || to_empty {
            1.0
        } else {
            ((sp - 2.0 * guard) / (sp - sq)).min(1.0)
        };
        if upper <= 0.0 {
            pinned = true;
            break;
        }

        let mut pp = 0.0;
        let mut pd = 0.0;
        let mut dd = 0.0;
        for (a, b) in p.iter().zip(q) {
            let d = b - a;
            pp += a * a;
            pd += a * d;
            dd += d * d;
        }
        let base = &cur.moments;
        let along = |gamma: f64| {
            let convex = pp + 2.0 * gamma * pd + gamma * gamma * dd;
            let (phi, _) = envelope_from_moments(&base.lerp(&q_moments, gamma), config);
            (1.0 - lambda) * convex + lambda * phi
        };
        let (gamma, value) = line_search(along, cur.energy, upper);
        if !(value < cur.energy) {
            // No improving step along the direction.
            pinned = upper < 1.0;
            break;
        }

        for (a, b) in p.iter_mut().zip(q) {
            *a = ((1.0 - gamma) * *a + gamma * b).clamp(0.0, 1.0);
        }
        if to_empty && gamma == 1.0 {
            p.iter_mut().for_each(|v| *v = 0.0);
            trace.push(value);
            iters += 1;
            return Ok(PathState {
                lambda,
                p: MatchVector::from_values(rows, cols, p)?,
                e_value: value,
                fw_gap: gap,
                iters,
                converged: false,
                pinned: true,
                energy_trace: trace,
            });
        }
        cur = evaluate(&p, lambda, ops, config)?;
        trace.push(cur.energy);
        iters += 1;
    }

    Ok(PathState {
        lambda,
        p: MatchVector::from_values(rows, cols, p)?,
        e_value: cur.energy,
        fw_gap: gap,
        iters,
        converged,
        pinned,
        energy_trace: trace,
    })
}

/// Matches `model` against `scene`.
///
/// Both clouds are normalized (unless disabled), `p` starts uniform, and the
/// homotopy schedule of [`MatchConfig::lambda_schedule`] is followed with
/// warm starts. Along the way the reward weight moves from `mu_start` to
/// `mu` (see [`MatchConfig::mu_at`]), so the last step and everything after
/// it work on the objective with `mu` itself. The end point is rounded to a vertex and polished by one
/// more Frank-Wolfe pass at `λ = 1`; the better vertex wins. The transform
/// is then fitted on the final correspondences and lifted back to data
/// coordinates.
pub fn match_point_sets(
    model: &PointCloud,
    scene: &PointCloud,
    config: &MatchConfig,
) -> Result<MatchResult> {
    config.validate()?;
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
        (
            model.clone(),
            Normalization::identity(d),
            scene.clone(),
            Normalization::identity(d),
        )
    };
    let ops = VectorizedOperators::new(&x, &y)?;
    let (rows, cols) = (ops.rows(), ops.cols());

    let mut p = MatchVector::uniform(rows, cols);
    let mut path_trace = Vec::new();
    for lambda in config.lambda_schedule() {
        let step_config = MatchConfig {
            mu: config.mu_at(lambda),
            ..config.clone()
        };
        let state = fw_minimize(&p, lambda, &ops, &step_config)?;
        path_trace.push(PathStep::from(&state));
        p = state.p;
    }

    let mut vertex = round_to_vertex(&p).vertex;
    let mut phi_value = phi_envelope(&vertex, &ops, config);
    if vertex.total() > config.denom_guard {
        let polished = fw_minimize(&vertex, 1.0, &ops, config)?;
        path_trace.push(PathStep::from(&polished));
        let candidate = round_to_vertex(&polished.p).vertex;
        let candidate_phi = phi_envelope(&candidate, &ops, config);
        if candidate_phi < phi_value {
            vertex = candidate;
            phi_value = candidate_phi;
        }
    }

    let mut warnings = Vec::new();
    let transform = if vertex.total() > config.denom_guard {
        let sol = solve_sr(&vertex, &ops, config)?;
        let t = solve_translation(&vertex, sol.scale, &sol.rotation, &ops, config.denom_guard)?;
        if sol.scale == 0.0 {
            warnings.push(MatchWarning::ZeroScale);
        }
        SimilarityTransform {
            scale: sol.scale,
            rotation: sol.rotation,
            translation: t,
        }
        .denormalize(&nx, &ny)
    } else {
        warnings.push(MatchWarning::EmptyMatching);
        SimilarityTransform::identity(d)
    };

    Ok(MatchResult {
        matches: vertex.pairs(),
        vertex,
        transform,
        phi_value,
        path_trace,
        warnings,
        model_normalization: nx,
        scene_normalization: ny,
    })
}
