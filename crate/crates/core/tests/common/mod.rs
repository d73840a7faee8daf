#![allow(dead_code)]
//! Independent oracles shared by the integration tests.

use nalgebra::{DMatrix, DVector};
use simmatch::{MatchVector, PointCloud, RngStream};

pub fn random_cloud(rng: &mut RngStream, n: usize, d: usize) -> PointCloud {
    PointCloud::new(d, (0..n * d).map(|_| rng.normal()).collect()).unwrap()
}

/// Random feasible point strictly inside the polytope: a mixture of
/// scaled random permutations, shrunk so every row/column sum is < 1.
pub fn random_interior(rng: &mut RngStream, m: usize, n: usize) -> MatchVector {
    let mut v = vec![0.0; m * n];
    for k in 0..m * n {
        v[k] = 0.05 + rng.uniform();
    }
    let rows: Vec<f64> = v.chunks(n).map(|r| r.iter().sum()).collect();
    let mut cols = vec![0.0; n];
    for (k, x) in v.iter().enumerate() {
        cols[k % n] += x;
    }
    let worst = rows.iter().chain(&cols).fold(0.0f64, |a, &b| a.max(b));
    let shrink = rng.uniform_range(0.3, 0.95) / worst;
    MatchVector::from_values(m, n, v.into_iter().map(|x| x * shrink).collect()).unwrap()
}

/// Random feasible point: random permutation vertex mixtures, possibly on
/// the boundary.
pub fn random_feasible(rng: &mut RngStream, m: usize, n: usize) -> MatchVector {
    let k = 1 + rng.index(4);
    let mut v = vec![0.0; m * n];
    let mut weights: Vec<f64> = (0..k).map(|_| rng.uniform()).collect();
    let total: f64 = weights.iter().sum::<f64>() / rng.uniform_range(0.2, 1.0);
    weights.iter_mut().for_each(|w| *w /= total);
    for w in weights {
        let mut cols: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut cols);
        for i in 0..m.min(n) {
            if rng.uniform() < 0.85 {
                v[i * n + cols[i]] += w;
            }
        }
    }
    MatchVector::from_values(m, n, v).unwrap()
}

/// All partial permutation matrices of an m x n grid.
pub fn enumerate_vertices(rows: usize, cols: usize) -> Vec<Vec<(usize, usize)>> {
    fn go(
        i: usize,
        rows: usize,
        cols: usize,
        used: &mut Vec<bool>,
        cur: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if i == rows {
            out.push(cur.clone());
            return;
        }
        go(i + 1, rows, cols, used, cur, out);
        for j in 0..cols {
            if !used[j] {
                used[j] = true;
                cur.push((i, j));
                go(i + 1, rows, cols, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(0, rows, cols, &mut vec![false; cols], &mut Vec::new(), &mut out);
    out
}

/// Haar-uniform rotation via QR of a Gaussian matrix with sign and
/// determinant fix-up; independent of the library's sampler.
pub fn haar_rotation(rng: &mut RngStream, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.normal());
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..d {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// `Σ_ij p_ij (‖y_j − s R x_i − t‖² − μ)` by direct summation.
pub fn naive_phi(
    p: &MatchVector,
    x: &PointCloud,
    y: &PointCloud,
    s: f64,
    r: &DMatrix<f64>,
    t: &DVector<f64>,
    mu: f64,
) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        let xi = DVector::from_column_slice(x.point(i));
        let tx = r * xi * s + t;
        for j in 0..y.len() {
            let yj = DVector::from_column_slice(y.point(j));
            acc += p.get(i, j) * ((yj - &tx).norm_squared() - mu);
        }
    }
    acc
}

/// Dense `M1 ⊗ M2`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Central finite difference of `f` along coordinate `k`.
pub fn central_diff<F: Fn(&[f64]) -> f64>(f: F, p: &[f64], k: usize, h: f64) -> f64 {
    let mut a = p.to_vec();
    let mut b = p.to_vec();
    a[k] += h;
    b[k] -= h;
    (f(&a) - f(&b)) / (2.0 * h)
}

/// Rotation by `angle` about `axis` (Rodrigues).
pub fn axis_angle(axis: &[f64], angle: f64) -> DMatrix<f64> {
    let a = DVector::from_column_slice(axis).normalize();
    let k = DMatrix::from_row_slice(3, 3, &[0.0, -a[2], a[1], a[2], 0.0, -a[0], -a[1], a[0], 0.0]);
    DMatrix::identity(3, 3) + &k * angle.sin() + &k * &k * (1.0 - angle.cos())
}

/// Minimum of `value` over every vertex of the rows x cols polytope.
pub fn brute_force_min<F: Fn(&MatchVector) -> f64>(rows: usize, cols: usize, value: F) -> f64 {
    enumerate_vertices(rows, cols)
        .iter()
        .map(|v| value(&MatchVector::from_pairs(rows, cols, v)))
        .fold(f64::INFINITY, f64::min)
}
