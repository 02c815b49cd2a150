//! Lawson–Hanson active-set non-negative least squares.
//!
//! The solver only touches the design matrix through [`ColumnOracle`], so the
//! `4^n` selection pool never needs to be stored as a dense matrix.

use nalgebra::{DMatrix, DVector};

/// Read access to the columns of a design matrix.
pub trait ColumnOracle {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// Writes column `j` into `out` (length `nrows`).
    fn column(&self, j: usize, out: &mut [f64]);
    /// `Aᵀ r`.
    fn transpose_mul(&self, r: &[f64]) -> Vec<f64> {
        let mut col = vec![0.0; self.nrows()];
        (0..self.ncols())
            .map(|j| {
                self.column(j, &mut col);
                col.iter().zip(r).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

impl ColumnOracle for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn column(&self, j: usize, out: &mut [f64]) {
        out.copy_from_slice(self.column(j).as_slice());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    /// Nonzero coefficients as `(column, value)`, ascending by column.
    pub support: Vec<(usize, f64)>,
    /// `‖A x - b‖₂`.
    pub residual: f64,
    pub iterations: usize,
}

impl NnlsSolution {
    pub fn dense(&self, ncols: usize) -> Vec<f64> {
        let mut x = vec![0.0; ncols];
        for &(j, v) in &self.support {
            x[j] = v;
        }
        x
    }
}

/// Minimizes `‖A x - b‖` subject to `x >= 0`.
///
/// Ties in the dual vector go to the lowest column index, so the output is a
/// deterministic function of the column order.
pub fn nnls<A: ColumnOracle + ?Sized>(a: &A, b: &[f64]) -> NnlsSolution {
    let m = a.nrows();
    let ncols = a.ncols();
    assert_eq!(b.len(), m, "right-hand side length");
    let bnorm = norm(b);
    let dual_tol = 1e-12 * (1.0 + bnorm) * (m.max(1) as f64);
    let max_outer = 3 * ncols.max(m) + 10;

    // Passive set: column indices with their cached columns and current values.
    let mut passive: Vec<usize> = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut x: Vec<f64> = Vec::new();
    let mut in_passive = vec![false; ncols];
    let mut residual = b.to_vec();
    let mut iterations = 0;
    let mut col = vec![0.0; m];

    while iterations < max_outer && passive.len() < m.min(ncols) {
        if norm(&residual) <= 1e-14 * (1.0 + bnorm) {
            break;
        }
        let w = a.transpose_mul(&residual);
        let mut best: Option<(usize, f64)> = None;
        for (j, &wj) in w.iter().enumerate() {
            if !in_passive[j] && wj > dual_tol && best.is_none_or(|(_, bw)| wj > bw) {
                best = Some((j, wj));
            }
        }
        let Some((t, _)) = best else { break };
        iterations += 1;
        a.column(t, &mut col);
        passive.push(t);
        cols.push(col.clone());
        x.push(0.0);
        in_passive[t] = true;

        loop {
            let z = least_squares(&cols, b);
            if z.iter().all(|v| *v > 0.0) {
                x = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for (xi, zi) in x.iter().zip(&z) {
                if *zi <= 0.0 {
                    let denom = xi - zi;
                    let step = if denom > 0.0 { xi / denom } else { 0.0 };
                    alpha = alpha.min(step);
                }
            }
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi += alpha * (zi - *xi);
            }
            // Drop passive columns driven to zero.
            let mut k = 0;
            let mut removed = false;
            while k < passive.len() {
                if x[k] <= 1e-15 * (1.0 + x.iter().cloned().fold(0.0, f64::max)) {
                    in_passive[passive[k]] = false;
                    passive.remove(k);
                    cols.remove(k);
                    x.remove(k);
                    removed = true;
                } else {
                    k += 1;
                }
            }
            if passive.is_empty() || !removed {
                break;
            }
        }
        residual = compute_residual(&cols, &x, b);
    }

    let mut support: Vec<(usize, f64)> = passive
        .into_iter()
        .zip(x)
        .filter(|(_, v)| *v > 0.0)
        .collect();
    support.sort_by_key(|(j, _)| *j);
    let mut full_res = b.to_vec();
    for &(j, v) in &support {
        a.column(j, &mut col);
        for (r, c) in full_res.iter_mut().zip(&col) {
            *r -= v * c;
        }
    }
    NnlsSolution {
        support,
        residual: norm(&full_res),
        iterations,
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn compute_residual(cols: &[Vec<f64>], x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = b.to_vec();
    for (c, v) in cols.iter().zip(x) {
        for (ri, ci) in r.iter_mut().zip(c) {
            *ri -= v * ci;
        }
    }
    r
}

/// Unconstrained least squares on the given columns.
///
/// Normal equations with one refinement step; the passive columns are
/// linearly independent by construction. Falls back to SVD if the Gram
/// matrix is not numerically positive definite.
fn least_squares(cols: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let m = b.len();
    let k = cols.len();
    let a = DMatrix::from_fn(m, k, |r, c| cols[c][r]);
    let rhs = DVector::from_column_slice(b);
    let gram = a.tr_mul(&a);
    if let Some(chol) = gram.cholesky() {
        let mut z = chol.solve(&a.tr_mul(&rhs));
        let r = &rhs - &a * &z;
        z += chol.solve(&a.tr_mul(&r));
        return z.iter().copied().collect();
    }
    let svd = a.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(1.0);
    svd.solve(&rhs, eps)
        .expect("SVD was computed with both factors")
        .iter()
        .copied()
        .collect()
}
