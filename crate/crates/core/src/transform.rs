use nalgebra::{DMatrix, DVector};

use crate::cloud::{Normalization, PointCloud};
use crate::error::{Error, Result};

const ROTATION_TOL: f64 = 1e-10;

/// `x -> scale * rotation * x + translation` with a proper rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    pub rotation: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl SimilarityTransform {
    pub fn new(scale: f64, rotation: DMatrix<f64>, translation: DVector<f64>) -> Result<Self> {
        let d = rotation.nrows();
        if rotation.ncols() != d || translation.len() != d {
            return Err(Error::InvalidTransform(format!(
                "rotation is {}x{}, translation has {} entries",
                rotation.nrows(),
                rotation.ncols(),
                translation.len()
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidTransform(format!("scale {scale} is not positive")));
        }
        if !is_rotation(&rotation) {
            return Err(Error::InvalidTransform("rotation is not in SO(d)".into()));
        }
        if translation.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTransform("non-finite translation".into()));
        }
        Ok(Self {
            scale,
            rotation,
            translation,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            scale: 1.0,
            rotation: DMatrix::identity(dim, dim),
            translation: DVector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        let y = &self.rotation * x * self.scale + &self.translation;
        y.iter().copied().collect()
    }

    pub fn apply_cloud(&self, cloud: &PointCloud) -> Result<PointCloud> {
        cloud.map_points(|p| self.apply(p))
    }

    /// Lifts a transform fitted between normalized clouds back to data space.
    ///
    /// With `x' = (x - cx) / rx` and `y' = (y - cy) / ry`, a fit
    /// `y' = s R x' + t` becomes `y = (s ry / rx) R x + (ry t + cy - (s ry / rx) R cx)`.
    pub fn denormalize(&self, model: &Normalization, scene: &Normalization) -> Self {
        let scale = self.scale * scene.rms / model.rms;
        let cx = DVector::from_column_slice(&model.centroid);
        let cy = DVector::from_column_slice(&scene.centroid);
        let translation = &self.translation * scene.rms + cy - &self.rotation * cx * scale;
        Self {
            scale,
            rotation: self.rotation.clone(),
            translation,
        }
    }

    /// The rotation flattened row-major.
    pub fn rotation_row_major(&self) -> Vec<f64> {
        self.rotation.transpose().iter().copied().collect()
    }
}

/// True when `r` is orthogonal with determinant +1 (Frobenius tolerance 1e-10).
pub fn is_rotation(r: &DMatrix<f64>) -> bool {
    if !r.is_square() {
        return false;
    }
    let d = r.nrows();
    let ortho = (r.transpose() * r - DMatrix::<f64>::identity(d, d)).norm();
    ortho <= ROTATION_TOL && (r.determinant() - 1.0).abs() <= ROTATION_TOL
}

/// Angle of a rotation matrix in radians, from its trace.
pub fn rotation_angle(r: &DMatrix<f64>) -> f64 {
    let cos = match r.nrows() {
        2 => r[(0, 0)],
        _ => (r.trace() - 1.0) / 2.0,
    };
    cos.clamp(-1.0, 1.0).acos()
}
