use crate::error::{Error, Result};

const FEAS_TOL: f64 = 1e-9;

/// Relaxed matching matrix `P` (m x n) stored row-major: entry `(i, j)`
/// lives at index `i * n + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchVector {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl MatchVector {
    /// Wraps raw values. Only the length is checked; feasibility is a
    /// separate question (see [`crate::polytope::is_feasible`]).
    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::InvalidConfig(format!(
                "match vector has {} entries, expected {rows}x{cols}",
                values.len()
            )));
        }
        Ok(Self { values, rows, cols })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            values: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    /// Every entry `1 / max(m, n)`: row and column sums are at most one.
    pub fn uniform(rows: usize, cols: usize) -> Self {
        let v = 1.0 / rows.max(cols) as f64;
        Self {
            values: vec![v; rows * cols],
            rows,
            cols,
        }
    }

    pub fn from_pairs(rows: usize, cols: usize, pairs: &[(usize, usize)]) -> Self {
        let mut out = Self::zeros(rows, cols);
        for &(i, j) in pairs {
            out.values[i * cols + j] = 1.0;
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `1ᵀp`, the total match weight.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.values.chunks_exact(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.values.chunks_exact(self.cols) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    /// Partial permutation matrix test: entries in {0, 1} and at most one
    /// per row and column, within 1e-9.
    pub fn is_vertex(&self) -> bool {
        let integral = self
            .values
            .iter()
            .all(|&v| v.abs() <= FEAS_TOL || (v - 1.0).abs() <= FEAS_TOL);
        integral
            && self.row_sums().iter().all(|&s| s <= 1.0 + FEAS_TOL)
            && self.col_sums().iter().all(|&s| s <= 1.0 + FEAS_TOL)
    }

    /// Pairs `(i, j)` whose entry exceeds one half, in row-major order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.5)
            .map(|(k, _)| (k / self.cols, k % self.cols))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let p = MatchVector::from_pairs(2, 3, &[(1, 2)]);
        assert_eq!(p.as_slice()[5], 1.0);
        assert_eq!(p.get(1, 2), 1.0);
        assert_eq!(p.pairs(), vec![(1, 2)]);
    }

    #[test]
    fn vertex_predicate() {
        assert!(MatchVector::zeros(3, 2).is_vertex());
        assert!(MatchVector::from_pairs(3, 3, &[(0, 1), (1, 0), (2, 2)]).is_vertex());
        assert!(!MatchVector::from_pairs(3, 3, &[(0, 1), (1, 1)]).is_vertex());
        assert!(!MatchVector::uniform(2, 2).is_vertex());
    }

    #[test]
    fn uniform_sums_stay_below_one() {
        let p = MatchVector::uniform(3, 7);
        assert!(p.row_sums().iter().all(|&s| s <= 1.0 + 1e-12));
        assert!(p.col_sums().iter().all(|&s| s <= 1.0 + 1e-12));
    }

    #[test]
    fn length_is_checked() {
        assert!(MatchVector::from_values(2, 2, vec![0.0; 3]).is_err());
    }
}
