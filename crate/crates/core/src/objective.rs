//! The matching objective at every level of variable elimination.
//!
//! With model points `X` (m x d), scene points `Y` (n x d) and a relaxed
//! matching matrix `P`, the full objective is
//!
//! ```text
//! Φ(P, s, R, t) = Σ_ij p_ij ‖y_j − s R x_i − t‖² − μ 1ᵀP1
//! ```
//!
//! Translation, rotation and scale all have closed-form minimizers, which
//! leaves the concave envelope `Φ(p) = min_{s,R,t} Φ(P, s, R, t)` over the
//! row-major vectorization `p = vec(P)`.
//!
//! Every quantity the envelope needs is linear in `p` and is collected in
//! [`Moments`]. That makes a line search along `p + γ(q − p)` cost O(d³)
//! per evaluation instead of O(mnd).

use nalgebra::{DMatrix, DVector, SMatrix, SVD};

use crate::cloud::PointCloud;
use crate::config::MatchConfig;
use crate::error::{Error, Result};
use crate::matching::MatchVector;
use crate::transform::SimilarityTransform;

const ALPHA_ROUNDING: f64 = 1e-12;

/// Matrix-free realization of the Kronecker operators tying `p` to the
/// weighted moments of the two clouds:
///
/// | operator                 | forward            | adjoint entry `(i, j)` |
/// |--------------------------|--------------------|------------------------|
/// | `B = Xᵀ ⊗ Yᵀ`            | `vec(XᵀPY)`        | `x_iᵀ V y_j`           |
/// | `C = Xᵀ ⊗ 1ₙᵀ`           | `XᵀP1ₙ`            | `x_i · v`              |
/// | `D = 1ₘᵀ ⊗ Yᵀ`           | `YᵀPᵀ1ₘ`           | `y_j · v`              |
/// | `a = x̃ ⊗ 1ₙ`             | `x̃ᵀP1ₙ`            | `‖x_i‖²`               |
/// | `b = 1ₘ ⊗ ỹ`             | `1ₘᵀPỹ`            | `‖y_j‖²`               |
#[derive(Debug, Clone)]
pub struct VectorizedOperators {
    model: PointCloud,
    scene: PointCloud,
}

impl VectorizedOperators {
    pub fn new(model: &PointCloud, scene: &PointCloud) -> Result<Self> {
        if model.dim() != scene.dim() {
            return Err(Error::DimensionMismatch {
                model: model.dim(),
                scene: scene.dim(),
            });
        }
        Ok(Self {
            model: model.clone(),
            scene: scene.clone(),
        })
    }

    pub fn model(&self) -> &PointCloud {
        &self.model
    }

    pub fn scene(&self) -> &PointCloud {
        &self.scene
    }

    pub fn rows(&self) -> usize {
        self.model.len()
    }

    pub fn cols(&self) -> usize {
        self.scene.len()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    fn check_len(&self, p: &[f64]) {
        assert_eq!(
            p.len(),
            self.rows() * self.cols(),
            "match vector length does not fit the operators"
        );
    }

    /// `mat(B p) = XᵀPY`.
    pub fn cross_moment(&self, p: &[f64]) -> DMatrix<f64> {
        self.moments(p).cross
    }

    /// `C p = XᵀP1ₙ`.
    pub fn model_moment(&self, p: &[f64]) -> DVector<f64> {
        self.moments(p).model_sum
    }

    /// `D p = YᵀPᵀ1ₘ`.
    pub fn scene_moment(&self, p: &[f64]) -> DVector<f64> {
        self.moments(p).scene_sum
    }

    /// `aᵀp = x̃ᵀP1ₙ`.
    pub fn model_sq_weight(&self, p: &[f64]) -> f64 {
        self.check_len(p);
        let n = self.cols();
        p.chunks_exact(n)
            .zip(self.model.sq_norms())
            .map(|(row, x2)| x2 * row.iter().sum::<f64>())
            .sum()
    }

    /// `bᵀp = 1ₘᵀPỹ`.
    pub fn scene_sq_weight(&self, p: &[f64]) -> f64 {
        self.check_len(p);
        let n = self.cols();
        p.chunks_exact(n)
            .map(|row| {
                row.iter()
                    .zip(self.scene.sq_norms())
                    .map(|(w, y2)| w * y2)
                    .sum::<f64>()
            })
            .sum()
    }

    /// `Bᵀ vec(V)`: entry `(i, j)` is `x_iᵀ V y_j`.
    pub fn cross_adjoint(&self, v: &DMatrix<f64>) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for x in self.model.points() {
            // (Vᵀ x)_l = Σ_k x_k V_kl
            let mut vx = [0.0; 3];
            for (l, slot) in vx.iter_mut().enumerate().take(d) {
                *slot = (0..d).map(|k| x[k] * v[(k, l)]).sum();
            }
            out.extend(self.scene.points().map(|y| dot(&vx[..d], y)));
        }
        out
    }

    /// `Cᵀ v`: entry `(i, j)` is `x_i · v`.
    pub fn model_adjoint(&self, v: &DVector<f64>) -> Vec<f64> {
        let n = self.cols();
        let mut out = Vec::with_capacity(self.rows() * n);
        for x in self.model.points() {
            let s = dot(x, v.as_slice());
            out.extend(std::iter::repeat_n(s, n));
        }
        out
    }

    /// `Dᵀ v`: entry `(i, j)` is `y_j · v`.
    pub fn scene_adjoint(&self, v: &DVector<f64>) -> Vec<f64> {
        let col: Vec<f64> = self.scene.points().map(|y| dot(y, v.as_slice())).collect();
        let mut out = Vec::with_capacity(self.rows() * col.len());
        for _ in 0..self.rows() {
            out.extend_from_slice(&col);
        }
        out
    }

    /// All linear statistics of `p` in one pass over the entries.
    pub fn moments(&self, p: &[f64]) -> Moments {
        self.check_len(p);
        let d = self.dim();
        let n = self.cols();
        let mut total = 0.0;
        let mut model_sq = 0.0;
        let mut scene_sq = 0.0;
        let mut model_sum = [0.0; 3];
        let mut scene_sum = [0.0; 3];
        let mut cross = [[0.0; 3]; 3];
        let y2 = self.scene.sq_norms();
        for (i, row) in p.chunks_exact(n).enumerate() {
            let x = self.model.point(i);
            let mut weight = 0.0;
            let mut wy = [0.0; 3];
            for (j, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                weight += w;
                scene_sq += w * y2[j];
                let y = self.scene.point(j);
                for l in 0..d {
                    wy[l] += w * y[l];
                }
            }
            total += weight;
            model_sq += weight * self.model.sq_norms()[i];
            for k in 0..d {
                model_sum[k] += weight * x[k];
                scene_sum[k] += wy[k];
                for l in 0..d {
                    cross[k][l] += x[k] * wy[l];
                }
            }
        }
        Moments {
            total,
            model_sq,
            scene_sq,
            model_sum: DVector::from_column_slice(&model_sum[..d]),
            scene_sum: DVector::from_column_slice(&scene_sum[..d]),
            cross: DMatrix::from_fn(d, d, |k, l| cross[k][l]),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Linear statistics of a match vector: `1ᵀp`, `aᵀp`, `bᵀp`, `Cp`, `Dp`
/// and `mat(Bp)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub total: f64,
    pub model_sq: f64,
    pub scene_sq: f64,
    pub model_sum: DVector<f64>,
    pub scene_sum: DVector<f64>,
    pub cross: DMatrix<f64>,
}

impl Moments {
    /// Moments of `(1 − γ) p + γ q` given those of `p` (self) and `q`.
    pub fn lerp(&self, other: &Moments, gamma: f64) -> Moments {
        let a = 1.0 - gamma;
        Moments {
            total: a * self.total + gamma * other.total,
            model_sq: a * self.model_sq + gamma * other.model_sq,
            scene_sq: a * self.scene_sq + gamma * other.scene_sq,
            model_sum: &self.model_sum * a + &other.model_sum * gamma,
            scene_sum: &self.scene_sum * a + &other.scene_sum * gamma,
            cross: &self.cross * a + &other.cross * gamma,
        }
    }

    fn require_mass(&self, guard: f64) -> Result<()> {
        if self.total > guard {
            Ok(())
        } else {
            Err(Error::EmptyMatching)
        }
    }

    /// `A = XᵀPY − XᵀP1 1ᵀPY / 1ᵀp`.
    pub fn centered_cross(&self) -> DMatrix<f64> {
        &self.cross - &self.model_sum * self.scene_sum.transpose() / self.total
    }

    /// Coefficient of `s²` after eliminating `t`: `aᵀp − ‖Cp‖² / 1ᵀp`.
    pub fn scale_curvature(&self) -> f64 {
        self.model_sq - self.model_sum.norm_squared() / self.total
    }
}

/// Jointly optimal scale and rotation for a fixed match vector.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationScaleSolution {
    pub scale: f64,
    pub rotation: DMatrix<f64>,
    /// Row-major flattening of `Rᵀ`.
    pub rotation_vec: Vec<f64>,
    /// The centered cross-covariance `A`.
    pub cross_covariance: DMatrix<f64>,
    /// `tr(R A)` at the optimum.
    pub trace_term: f64,
    pub alpha: f64,
    /// `alpha s² − 2 s tr(RA)` at the optimum.
    pub value: f64,
}

/// `Φ(P, s, R, t)` in expanded form.
pub fn phi_full(
    p: &MatchVector,
    transform: &SimilarityTransform,
    ops: &VectorizedOperators,
    mu: f64,
) -> f64 {
    let m = ops.moments(p.as_slice());
    let s = transform.scale;
    let r = &transform.rotation;
    let t = &transform.translation;
    let shifted = &m.scene_sum - r * &m.model_sum * s;
    m.scene_sq + s * s * m.model_sq - 2.0 * s * (r * &m.cross).trace()
        + m.total * t.norm_squared()
        - 2.0 * t.dot(&shifted)
        - mu * m.total
}

/// Optimal translation `t̂ = (Dp − s R Cp) / 1ᵀp`.
pub fn solve_translation(
    p: &MatchVector,
    scale: f64,
    rotation: &DMatrix<f64>,
    ops: &VectorizedOperators,
    guard: f64,
) -> Result<DVector<f64>> {
    translation_from_moments(&ops.moments(p.as_slice()), scale, rotation, guard)
}

pub fn translation_from_moments(
    m: &Moments,
    scale: f64,
    rotation: &DMatrix<f64>,
    guard: f64,
) -> Result<DVector<f64>> {
    m.require_mass(guard)?;
    Ok((&m.scene_sum - rotation * &m.model_sum * scale) / m.total)
}

/// The centered cross-covariance `A` of the weighted correspondences.
pub fn build_a(p: &MatchVector, ops: &VectorizedOperators, guard: f64) -> Result<DMatrix<f64>> {
    let m = ops.moments(p.as_slice());
    m.require_mass(guard)?;
    Ok(m.centered_cross())
}

/// Proper rotation maximizing `tr(R A)`.
///
/// With `Aᵀ = U S Vᵀ` (singular values descending), the optimum is
/// `U diag(1, …, 1, det(UVᵀ)) Vᵀ`. Singular pairs are sign-normalized so
/// the largest-magnitude entry of each left singular vector is positive,
/// which pins down the answer when `A` is rank deficient.
pub fn solve_rotation(a: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let rotation = match a.nrows() {
        2 => rotation2(a),
        3 => rotation3(a),
        _ => {
            let svd = SVD::new(a.transpose(), true, true);
            let u = svd.u.expect("left singular vectors requested");
            let v = svd.v_t.expect("right singular vectors requested").transpose();
            signed_product(u, v)
        }
    };
    let trace = rotation.component_mul(&a.transpose()).sum();
    (rotation, trace)
}

macro_rules! fixed_rotation {
    ($name:ident, $d:literal) => {
        fn $name(a: &DMatrix<f64>) -> DMatrix<f64> {
            let at = SMatrix::<f64, $d, $d>::from_fn(|r, c| a[(c, r)]);
            let svd = at.svd(true, true);
            let u = svd.u.expect("left singular vectors requested");
            let v = svd.v_t.expect("right singular vectors requested").transpose();
            signed_product(
                DMatrix::from_column_slice($d, $d, u.as_slice()),
                DMatrix::from_column_slice($d, $d, v.as_slice()),
            )
        }
    };
}

fixed_rotation!(rotation2, 2);
fixed_rotation!(rotation3, 3);

/// `U diag(1, .., det) Vᵀ` with each column of `U` oriented so its
/// largest-magnitude entry is positive.
fn signed_product(mut u: DMatrix<f64>, mut v: DMatrix<f64>) -> DMatrix<f64> {
    let d = u.nrows();
    for k in 0..d {
        let mut lead = 0;
        for r in 1..d {
            if u[(r, k)].abs() > u[(lead, k)].abs() {
                lead = r;
            }
        }
        if u[(lead, k)] < 0.0 {
            u.column_mut(k).neg_mut();
            v.column_mut(k).neg_mut();
        }
    }
    if (&u * v.transpose()).determinant() < 0.0 {
        u.column_mut(d - 1).neg_mut();
    }
    u * v.transpose()
}

/// Minimizer of `alpha s² − 2 beta s` on `[s_lo, s_hi]`, comparing both
/// bounds and the stationary point. Ties go to the smaller `s`.
pub fn solve_scale(alpha: f64, beta: f64, s_lo: f64, s_hi: f64) -> f64 {
    let f = |s: f64| alpha * s * s - 2.0 * beta * s;
    let mut best = s_lo;
    let mut best_val = f(s_lo);
    let mut consider = |s: f64| {
        let v = f(s);
        if v < best_val {
            best = s;
            best_val = v;
        }
    };
    if alpha > 0.0 {
        let s = beta / alpha;
        if s > s_lo && s < s_hi {
            consider(s);
        }
    }
    consider(s_hi);
    best
}

/// Optimal `(s, R)` for the match vector `p`.
pub fn solve_sr(
    p: &MatchVector,
    ops: &VectorizedOperators,
    config: &MatchConfig,
) -> Result<RotationScaleSolution> {
    sr_from_moments(&ops.moments(p.as_slice()), config)
}

/// Below this (relative to the mass) the centered cross-covariance is
/// treated as zero: every rotation is then optimal and the identity is
/// used instead of whatever the SVD of rounding noise would give.
const DEGENERATE_CROSS: f64 = 1e-9;

pub fn sr_from_moments(m: &Moments, config: &MatchConfig) -> Result<RotationScaleSolution> {
    m.require_mass(config.denom_guard)?;
    let a = m.centered_cross();
    let (mut rotation, mut trace_term) = if a.norm() <= DEGENERATE_CROSS * m.total.max(1.0) {
        let d = a.nrows();
        (DMatrix::identity(d, d), a.trace())
    } else {
        solve_rotation(&a)
    };
    let mut alpha = m.scale_curvature();
    if alpha.abs() < ALPHA_ROUNDING {
        alpha = alpha.max(0.0);
    }
    let scale = solve_scale(alpha, trace_term, config.s_lo, config.s_hi);
    if scale == 0.0 {
        let d = a.nrows();
        rotation = DMatrix::identity(d, d);
        trace_term = a.trace();
    }
    let value = alpha * scale * scale - 2.0 * scale * trace_term;
    let rotation_vec = rotation.iter().copied().collect();
    Ok(RotationScaleSolution {
        scale,
        rotation,
        rotation_vec,
        cross_covariance: a,
        trace_term,
        alpha,
        value,
    })
}

/// `Φ(p)` from the moments of `p` together with the minimizing `(s, R)`.
/// Below the denominator guard the envelope is 0 and no solution exists.
pub fn envelope_from_moments(
    m: &Moments,
    config: &MatchConfig,
) -> (f64, Option<RotationScaleSolution>) {
    match sr_from_moments(m, config) {
        Ok(sol) => {
            let value = m.scene_sq - config.mu * m.total - m.scene_sum.norm_squared() / m.total
                + sol.value;
            (value, Some(sol))
        }
        Err(_) => (0.0, None),
    }
}

/// The concave envelope `Φ(p) = min_{s,R,t} Φ(P, s, R, t)`; `Φ(0) = 0`.
pub fn phi_envelope(p: &MatchVector, ops: &VectorizedOperators, config: &MatchConfig) -> f64 {
    envelope_from_moments(&ops.moments(p.as_slice()), config).0
}

/// Danskin gradient of `Φ(p)`, evaluated at the minimizing `(ŝ, R̂)`.
pub fn phi_gradient(
    p: &MatchVector,
    ops: &VectorizedOperators,
    config: &MatchConfig,
) -> Result<Vec<f64>> {
    let m = ops.moments(p.as_slice());
    let sol = sr_from_moments(&m, config)?;
    Ok(gradient_from_parts(ops, &m, &sol, config.mu))
}

/// ```text
/// ∇Φ = b − μ1 − (2/S) DᵀDp + (‖Dp‖²/S²) 1
///    + ŝ² (a − (2/S) CᵀCp + (‖Cp‖²/S²) 1)
///    − 2ŝ { Bᵀr̂ − (1/S) [Dᵀ R̂Cp + Cᵀ R̂ᵀDp] + (tr(R̂ Cp pᵀDᵀ)/S²) 1 }
/// ```
/// with `S = 1ᵀp` and `r̂ = vec(R̂ᵀ)`.
pub fn gradient_from_parts(
    ops: &VectorizedOperators,
    m: &Moments,
    sol: &RotationScaleSolution,
    mu: f64,
) -> Vec<f64> {
    let inv = 1.0 / m.total;
    let s = sol.scale;
    let r = &sol.rotation;
    let cp = &m.model_sum;
    let dp = &m.scene_sum;

    let constant = -mu + dp.norm_squared() * inv * inv + s * s * cp.norm_squared() * inv * inv
        - 2.0 * s * inv * inv * (r * cp).dot(dp);

    let scene_lin = ops.scene_adjoint(&(dp * (-2.0 * inv) + r * cp * (2.0 * s * inv)));
    let model_lin = ops.model_adjoint(&(cp * (-2.0 * s * s * inv) + r.transpose() * dp * (2.0 * s * inv)));
    let cross = ops.cross_adjoint(&r.transpose());

    let n = ops.cols();
    let x2 = ops.model().sq_norms();
    let y2 = ops.scene().sq_norms();
    let mut grad = Vec::with_capacity(ops.rows() * n);
    for k in 0..ops.rows() * n {
        let (i, j) = (k / n, k % n);
        grad.push(
            y2[j] + s * s * x2[i] + constant + scene_lin[k] + model_lin[k] - 2.0 * s * cross[k],
        );
    }
    grad
}
