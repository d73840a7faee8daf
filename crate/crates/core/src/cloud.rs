use crate::error::{Error, Result};

/// An ordered set of 2-D or 3-D points with cached squared norms.
///
/// Coordinates are stored row-major: point `i` occupies
/// `coords[i * dim..(i + 1) * dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
    sq_norms: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidCloud(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if coords.is_empty() {
            return Err(Error::InvalidCloud("at least one point is required".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::InvalidCloud(format!(
                "{} coordinates do not split into {dim}-D points",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidCloud(format!(
                "point {} has a non-finite coordinate",
                pos / dim
            )));
        }
        let sq_norms = coords
            .chunks_exact(dim)
            .map(|p| p.iter().map(|c| c * c).sum())
            .collect();
        Ok(Self {
            coords,
            dim,
            sq_norms,
        })
    }

    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let dim = points
            .first()
            .map(|p| p.as_ref().len())
            .ok_or_else(|| Error::InvalidCloud("at least one point is required".into()))?;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::InvalidCloud(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::new(dim, coords)
    }

    pub fn len(&self) -> usize {
        self.sq_norms.len()
    }

    /// Always false; a cloud holds at least one point.
    pub fn is_empty(&self) -> bool {
        self.sq_norms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Squared Euclidean norm of every point.
    pub fn sq_norms(&self) -> &[f64] {
        &self.sq_norms
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in self.points() {
            for (acc, v) in c.iter_mut().zip(p) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.len() as f64;
        c.iter_mut().for_each(|v| *v *= inv);
        c
    }

    /// Root-mean-square distance of the points from their centroid.
    pub fn rms_radius(&self) -> f64 {
        let c = self.centroid();
        let total: f64 = self
            .points()
            .map(|p| p.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum();
        (total / self.len() as f64).sqrt()
    }

    /// Applies `f` to every point, producing a new cloud of dimension `dim`.
    pub fn map_points<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Vec<f64>,
    {
        let mut coords = Vec::with_capacity(self.coords.len());
        for p in self.points() {
            coords.extend(f(p));
        }
        Self::new(self.dim, coords)
    }

    /// Returns the cloud made of the points at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self::new(self.dim, coords)
    }

    /// Appends the points of `other` after the points of `self`.
    pub fn concat(&self, other: &PointCloud) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                model: self.dim,
                scene: other.dim,
            });
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(&other.coords);
        Self::new(self.dim, coords)
    }
}

/// The affine map `x -> (x - centroid) / rms` used to bring a cloud to
/// zero mean and unit RMS radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub centroid: Vec<f64>,
    pub rms: f64,
}

impl Normalization {
    pub fn identity(dim: usize) -> Self {
        Self {
            centroid: vec![0.0; dim],
            rms: 1.0,
        }
    }

    pub fn apply(&self, cloud: &PointCloud) -> Result<PointCloud> {
        let inv = 1.0 / self.rms;
        cloud.map_points(|p| {
            p.iter()
                .zip(&self.centroid)
                .map(|(v, c)| (v - c) * inv)
                .collect()
        })
    }

    pub fn invert(&self, cloud: &PointCloud) -> Result<PointCloud> {
        cloud.map_points(|p| {
            p.iter()
                .zip(&self.centroid)
                .map(|(v, c)| v * self.rms + c)
                .collect()
        })
    }
}

/// Centers `cloud` at the origin and rescales it to unit RMS radius.
pub fn normalize_cloud(cloud: &PointCloud) -> Result<(PointCloud, Normalization)> {
    let centroid = cloud.centroid();
    let rms = cloud.rms_radius();
    let extent = cloud.coords().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(rms > 1e-12 * (1.0 + extent)) {
        return Err(Error::DegenerateCloud);
    }
    let norm = Normalization { centroid, rms };
    let out = norm.apply(cloud)?;
    Ok((out, norm))
}
