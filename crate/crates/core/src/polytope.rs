//! The polytope `{P ≥ 0, P1 ≤ 1, 1ᵀP ≤ 1}` of doubly-substochastic
//! matrices. Its constraint matrix is totally unimodular, so every vertex is
//! a partial permutation matrix and linear objectives are minimized exactly
//! by an assignment solver.

use crate::matching::MatchVector;

const FEAS_TOL: f64 = 1e-9;

/// A minimizing vertex of a linear objective over the polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentOracleResult {
    pub vertex: MatchVector,
    /// `gᵀq` at the vertex; never positive since `q = 0` is feasible.
    pub objective: f64,
    pub matched_pairs: Vec<(usize, usize)>,
}

pub fn is_feasible(p: &MatchVector) -> bool {
    p.as_slice()
        .iter()
        .all(|&v| v.is_finite() && v >= -FEAS_TOL)
        && p.row_sums().iter().all(|&s| s <= 1.0 + FEAS_TOL)
        && p.col_sums().iter().all(|&s| s <= 1.0 + FEAS_TOL)
}

/// `argmin gᵀq` over partial permutation matrices (`g` row-major, m x n).
///
/// Leaving a row or column unmatched costs nothing, so only entries with
/// `g_ij < 0` can appear in an optimal matching. The problem is reduced to
/// the rows and columns owning a negative entry, costs are clamped to
/// `min(g_ij, 0)`, and the smaller side is fully assigned with a shortest
/// augmenting path solver. Pairs with clamped cost zero are then dropped.
/// Equal-cost alternatives are resolved by the solver's row-major scan
/// order, so repeated calls are bit-identical.
pub fn lp_oracle(g: &[f64], rows: usize, cols: usize) -> AssignmentOracleResult {
    assert_eq!(g.len(), rows * cols, "cost vector does not match {rows}x{cols}");
    let active_rows: Vec<usize> = (0..rows)
        .filter(|&i| g[i * cols..(i + 1) * cols].iter().any(|&v| v < 0.0))
        .collect();
    let active_cols: Vec<usize> = (0..cols)
        .filter(|&j| active_rows.iter().any(|&i| g[i * cols + j] < 0.0))
        .collect();

    let mut pairs = Vec::new();
    if !active_rows.is_empty() {
        let (r, c) = (active_rows.len(), active_cols.len());
        let clamped = |i: usize, j: usize| g[active_rows[i] * cols + active_cols[j]].min(0.0);
        if r <= c {
            let cost: Vec<f64> = (0..r).flat_map(|i| (0..c).map(move |j| clamped(i, j))).collect();
            for (i, j) in assign_rows(&cost, r, c).into_iter().enumerate() {
                pairs.push((active_rows[i], active_cols[j]));
            }
        } else {
            let cost: Vec<f64> = (0..c).flat_map(|j| (0..r).map(move |i| clamped(i, j))).collect();
            for (j, i) in assign_rows(&cost, c, r).into_iter().enumerate() {
                pairs.push((active_rows[i], active_cols[j]));
            }
        }
    }
    pairs.retain(|&(i, j)| g[i * cols + j] < 0.0);
    pairs.sort_unstable();

    let objective = pairs.iter().map(|&(i, j)| g[i * cols + j]).sum();
    AssignmentOracleResult {
        vertex: MatchVector::from_pairs(rows, cols, &pairs),
        objective,
        matched_pairs: pairs,
    }
}

/// The vertex most correlated with `p`, i.e. `lp_oracle(−p)`.
pub fn round_to_vertex(p: &MatchVector) -> AssignmentOracleResult {
    let neg: Vec<f64> = p.as_slice().iter().map(|v| -v).collect();
    lp_oracle(&neg, p.rows(), p.cols())
}

/// Minimum-cost assignment of each of `rows` rows to a distinct column
/// (`rows <= cols`). Returns the column of every row.
///
/// Shortest augmenting paths with row and column potentials, one row
/// inserted per phase: O(rows² · cols).
fn assign_rows(cost: &[f64], rows: usize, cols: usize) -> Vec<usize> {
    debug_assert!(rows <= cols && cost.len() == rows * cols);
    // 1-based internally; column 0 is the virtual root of each search tree.
    let mut u = vec![0.0; rows + 1];
    let mut v = vec![0.0; cols + 1];
    let mut owner = vec![0usize; cols + 1];
    let mut way = vec![0usize; cols + 1];
    let mut minv = vec![0.0; cols + 1];
    let mut used = vec![false; cols + 1];

    for i in 1..=rows {
        owner[0] = i;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let ui = u[i0];
            let row = &cost[(i0 - 1) * cols..i0 * cols];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            let lanes = used[1..]
                .iter()
                .zip(&v[1..])
                .zip(minv[1..].iter_mut())
                .zip(way[1..].iter_mut())
                .zip(row);
            for (j, ((((&done, &vj), mj), wj), &c)) in lanes.enumerate() {
                if done {
                    continue;
                }
                let cur = c - ui - vj;
                if cur < *mj {
                    *mj = cur;
                    *wj = j0;
                }
                if *mj < delta {
                    delta = *mj;
                    j1 = j + 1;
                }
            }
            for j in 0..=cols {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut out = vec![0usize; rows];
    for j in 1..=cols {
        if owner[j] > 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    out
}
