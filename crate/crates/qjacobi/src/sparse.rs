//! Symmetric sparse systems and preconditioned conjugate gradients.

use crate::error::{Error, Result};
use sprs::{CsMat, TriMat};

#[derive(Clone, Debug)]
pub struct SymMatrix {
    mat: CsMat<f64>,
    diag: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Final ‖r‖ / ‖b‖.
    pub residual: f64,
    pub converged: bool,
}

impl SymMatrix {
    /// Duplicate entries are summed.
    pub fn from_triplets(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut tri = TriMat::with_capacity((n, n), entries.len());
        for &(i, j, v) in entries {
            tri.add_triplet(i, j, v);
        }
        let mat: CsMat<f64> = tri.to_csr();
        let mut diag = vec![0.0; n];
        for (i, row) in mat.outer_iterator().enumerate() {
            for (j, &v) in row.iter() {
                if i == j {
                    diag[i] += v;
                }
            }
        }
        Self { mat, diag }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let ptr = self.mat.indptr();
        let ptr = ptr.raw_storage();
        let (idx, val) = (self.mat.indices(), self.mat.data());
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in ptr[i]..ptr[i + 1] {
                s += val[k] * x[idx[k]];
            }
            *yi = s;
        }
    }

    pub fn quad(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        dot(x, &y)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves A x = b from the initial x. A non-positive curvature direction
/// means A is not positive definite and is reported as `NotStable`.
pub fn cg(a: &SymMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = a.dim();
    if b.len() != n || x.len() != n {
        return Err(Error::DimensionMismatch { what: "linear system size", left: b.len().max(x.len()), right: n });
    }
    let bnorm = dot(b, b).sqrt();
    if n == 0 {
        return Ok(CgOutcome { iterations: 0, residual: 0.0, converged: true });
    }
    let pre: Vec<f64> = a.diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut ax = vec![0.0; n];
    a.apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    let mut res = dot(&r, &r).sqrt() / scale;
    if res <= tol {
        return Ok(CgOutcome { iterations: 0, residual: res, converged: true });
    }
    let mut z: Vec<f64> = r.iter().zip(&pre).map(|(r, p)| r * p).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        let pp = dot(&p, &p);
        if pap <= 1e-14 * pp * a.diag.iter().cloned().fold(0.0, f64::max) {
            return Err(Error::NotStable { curvature: pap / pp });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / scale;
        if res <= tol {
            return Ok(CgOutcome { iterations: it, residual: res, converged: true });
        }
        for i in 0..n {
            z[i] = r[i] * pre[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(CgOutcome { iterations: max_iter, residual: res, converged: false })
}

/// Symmetric Gauss–Seidel sweeps: one forward and one backward pass each.
pub fn gauss_seidel(a: &SymMatrix, b: &[f64], x: &mut [f64], sweeps: usize) {
    let ptr = a.mat.indptr();
    let ptr = ptr.raw_storage();
    let (idx, val) = (a.mat.indices(), a.mat.data());
    let n = a.dim();
    let relax = |i: usize, x: &mut [f64]| {
        let d = a.diag[i];
        if d <= 0.0 {
            return;
        }
        let mut s = b[i];
        for k in ptr[i]..ptr[i + 1] {
            if idx[k] != i {
                s -= val[k] * x[idx[k]];
            }
        }
        x[i] = s / d;
    };
    for _ in 0..sweeps {
        for i in 0..n {
            relax(i, x);
        }
        for i in (0..n).rev() {
            relax(i, x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> SymMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SymMatrix::from_triplets(n, &t)
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SymMatrix::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0), (0, 1, 0.5), (1, 0, 0.5)]);
        assert_eq!(a.diagonal(), &[3.0, 1.0]);
        let mut y = [0.0; 2];
        a.apply(&[1.0, 2.0], &mut y);
        assert_eq!(y, [4.0, 2.5]);
    }

    #[test]
    fn cg_solves_tridiagonal() {
        let n = 50;
        let a = laplace_1d(n);
        // exact solution of the discrete Poisson problem with unit load
        let exact: Vec<f64> = (1..=n).map(|i| i as f64 * (n + 1 - i) as f64 / 2.0).collect();
        let mut x = vec![0.0; n];
        let out = cg(&a, &vec![1.0; n], &mut x, 1e-13, 500).unwrap();
        assert!(out.converged);
        for (a, b) in x.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let a = SymMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        let mut x = vec![0.0; 2];
        assert!(matches!(cg(&a, &[1.0, 1.0], &mut x, 1e-12, 10), Err(Error::NotStable { .. })));
    }

    #[test]
    fn gauss_seidel_converges() {
        let a = laplace_1d(8);
        let b = vec![1.0; 8];
        let mut x = vec![0.0; 8];
        gauss_seidel(&a, &b, &mut x, 200);
        let mut y = vec![0.0; 8];
        cg(&a, &b, &mut y, 1e-14, 100).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
