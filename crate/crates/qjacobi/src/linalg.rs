//! Small dense helpers for vectors in R^d and square matrices of size <= 3.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

/// Orthogonal projection of `v` onto span of an orthonormal `basis`.
pub fn project(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for b in basis {
        axpy(&mut out, dot(v, b), b);
    }
    out
}

/// Determinant of a row-major n×n matrix, n <= 3.
pub fn det(a: &[f64], n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => panic!("det: n = {n} not supported"),
    }
}

/// Inverse of a row-major n×n matrix, n <= 3. Returns None when singular.
pub fn inverse(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let dt = det(a, n);
    if dt == 0.0 || !dt.is_finite() {
        return None;
    }
    let r = 1.0 / dt;
    Some(match n {
        1 => vec![r],
        2 => vec![a[3] * r, -a[1] * r, -a[2] * r, a[0] * r],
        3 => {
            let c = |i: usize, j: usize| a[i * 3 + j];
            let mut inv = vec![0.0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    // cofactor of (j, i)
                    let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
                    let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
                    inv[i * 3 + j] = (c(r0, c0) * c(r1, c1) - c(r0, c1) * c(r1, c0)) * r;
                }
            }
            inv
        }
        _ => panic!("inverse: n = {n} not supported"),
    })
}

/// Gram–Schmidt on the candidates, keeping the `want` most independent
/// directions orthogonal to `against` (orthonormal) and to each other.
pub fn complete_basis(against: &[Vec<f64>], candidates: &[Vec<f64>], want: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = against.to_vec();
    let mut out = Vec::with_capacity(want);
    let mut pool: Vec<Vec<f64>> = candidates.to_vec();
    while out.len() < want && !pool.is_empty() {
        // pick the candidate with the largest residual
        let mut best = 0;
        let mut best_res = Vec::new();
        let mut best_n = -1.0;
        for (i, c) in pool.iter().enumerate() {
            let mut r = c.clone();
            for b in &basis {
                let k = dot(&r, b);
                axpy(&mut r, -k, b);
            }
            let n = norm(&r);
            if n > best_n {
                best_n = n;
                best = i;
                best_res = r;
            }
        }
        pool.remove(best);
        if best_n < 1e-12 {
            break;
        }
        let mut r = best_res;
        // second pass for accuracy
        for b in &basis {
            let k = dot(&r, b);
            axpy(&mut r, -k, b);
        }
        let n = norm(&r);
        r.iter_mut().for_each(|x| *x /= n);
        basis.push(r.clone());
        out.push(r);
    }
    out
}

/// Pairwise (tree) summation; the association order depends only on length.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const BASE: usize = 32;
    if v.len() <= BASE {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}
