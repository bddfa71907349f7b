//! Outer and inner first-variation identities evaluated on discrete fields.
//!
//! Both sides are assembled with the same per-cell matched gradients as the
//! energies, so for a discrete Jac-minimizer the outer residual is the
//! discrete Euler–Lagrange residual.

use crate::error::{Error, Result};
use crate::field::{column, DiscreteQField};
use crate::linalg::{axpy, dot, norm, pairwise_sum, project};
use rayon::prelude::*;

/// Test objects for the first-variation identities.
#[derive(Clone, Debug, PartialEq)]
pub enum VariationTest {
    /// ψ(x, u) = η(x)² u with η = (1 − s²)², s = dist(x, center)/radius.
    OuterCutoff { center: Vec<f64>, radius: f64 },
    /// X(x) = −η(x)² log_x(center): a radial deformation.
    InnerRadial { center: Vec<f64>, radius: f64 },
    /// X(x) = η(x)² e for a constant tangent direction e (flat scenes).
    InnerTranslation { center: Vec<f64>, radius: f64, direction: Vec<f64> },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResidualReport {
    pub lhs: f64,
    pub rhs: f64,
    /// lhs − rhs.
    pub residual: f64,
    /// Size of the terms entering the identity; the residual is measured against it.
    pub scale: f64,
    pub relative: f64,
    pub e_ov: f64,
    pub e_iv: [f64; 3],
}

fn cutoff(dist: f64, radius: f64) -> f64 {
    let s = dist / radius;
    if s >= 1.0 {
        0.0
    } else {
        (1.0 - s * s).powi(2)
    }
}

/// Σ_ij ⟨A(ξ_i,ξ_j), u⟩⟨A(ξ_i,ξ_j), v⟩.
fn a_pair(n: &DiscreteQField, x: &[f64], frame: &[Vec<f64>], u: &[f64], v: &[f64]) -> f64 {
    let scene = n.mesh().scene();
    let mut s = 0.0;
    for a in frame {
        for b in frame {
            let f = scene.second_form(x, a, b);
            s += dot(&f, u) * dot(&f, v);
        }
    }
    s
}

pub fn variation_residuals(n: &DiscreteQField, test: &VariationTest) -> Result<ResidualReport> {
    if n.is_stale() {
        return Err(Error::StaleMatchings);
    }
    if !n.is_normal() {
        return Err(Error::NotNormalSection { deviation: f64::NAN });
    }
    match test {
        VariationTest::OuterCutoff { center, radius } => outer(n, center, *radius),
        VariationTest::InnerRadial { center, radius } => {
            let scene = n.mesh().scene().clone();
            let c = center.clone();
            let r = *radius;
            inner(n, move |x| {
                let e = cutoff(scene.distance_sigma(&c, x), r);
                scene.log_sigma(x, &c).iter().map(|v| -e * e * v).collect()
            })
        }
        VariationTest::InnerTranslation { center, radius, direction } => {
            let scene = n.mesh().scene().clone();
            if !scene.is_flat() {
                return Err(Error::UnsupportedTest("translations are only tangent on flat scenes".into()));
            }
            if direction.len() != scene.d() || norm(&project(direction, &scene.tangent_frame(&scene.pole()))) < norm(direction) * (1.0 - 1e-12) {
                return Err(Error::UnsupportedTest("translation direction must be tangent to Σ".into()));
            }
            let (c, r, e) = (center.clone(), *radius, direction.clone());
            inner(n, move |x| {
                let w = cutoff(scene.distance_sigma(&c, x), r);
                e.iter().map(|v| w * w * v).collect()
            })
        }
    }
}

fn outer(n: &DiscreteQField, center: &[f64], radius: f64) -> Result<ResidualReport> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParam(format!("cutoff radius must be positive (got {radius})")));
    }
    let mesh = n.mesh().clone();
    let scene = mesh.scene();
    let (d, m, q) = (n.d(), mesh.m(), n.q());
    let eta2: Vec<f64> = (0..mesh.num_vertices())
        .map(|v| cutoff(scene.distance_sigma(center, mesh.point(v)), radius).powi(2))
        .collect();
    let mut psi = n.clone();
    for (v, e) in eta2.iter().enumerate() {
        let o = v * q * d;
        psi.values_mut()[o..o + q * d].iter_mut().for_each(|x| *x *= e);
    }
    // ψ keeps the matchings of N: scaling each vertex by η² ≥ 0 preserves them
    let parts: Vec<[f64; 4]> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let g = mesh.geom(c);
            if mesh.cell(c).iter().all(|&v| eta2[v] == 0.0) {
                return [0.0; 4];
            }
            let nf = scene.normal_frame(&g.center);
            let slots = n.cell_slots(c);
            let mut acc = [0.0; 4];
            for l in 0..q {
                let gn = n.sheet_gradient(c, &slots, l);
                let gp = psi.sheet_gradient(c, &slots, l);
                let nc = project(&n.sheet_center(c, &slots, l), &nf);
                let pc = project(&psi.sheet_center(c, &slots, l), &nf);
                let (mut cross, mut nn, mut pp) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let a = project(&column(&gn, d, m, i), &nf);
                    let b = project(&column(&gp, d, m, i), &nf);
                    cross += dot(&a, &b);
                    nn += dot(&a, &a);
                    pp += dot(&b, &b);
                }
                let e = a_pair(n, &g.center, &g.frame, &nc, &pc) + scene.partial_ricci_unchecked(&g.center, &nc, &pc);
                acc[0] += g.weight * cross;
                acc[1] += g.weight * e;
                acc[2] += g.weight * nn;
                acc[3] += g.weight * pp;
            }
            acc
        })
        .collect();
    let sum = |k: usize| pairwise_sum(&parts.iter().map(|p| p[k]).collect::<Vec<_>>());
    let (lhs, e_ov) = (sum(0), sum(1));
    let scale = (sum(2) * sum(3)).sqrt() + e_ov.abs();
    let residual = lhs - e_ov;
    Ok(ResidualReport {
        lhs,
        rhs: e_ov,
        residual,
        scale,
        relative: if scale > 0.0 { residual.abs() / scale } else { 0.0 },
        e_ov,
        e_iv: [0.0; 3],
    })
}

fn inner<F>(n: &DiscreteQField, field: F) -> Result<ResidualReport>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    let mesh = n.mesh().clone();
    let scene = mesh.scene();
    let (d, m, q) = (n.d(), mesh.m(), n.q());
    let xs: Vec<Vec<f64>> = (0..mesh.num_vertices()).map(|v| field(mesh.point(v))).collect();
    let parts: Vec<[f64; 7]> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let cell = mesh.cell(c);
            if cell.iter().all(|&v| xs[v].iter().all(|x| *x == 0.0)) {
                return [0.0; 7];
            }
            let g = mesh.geom(c);
            let nf = scene.normal_frame(&g.center);
            // X at the centre and its covariant derivative ∇_{ξ_i}X = Σ_a mat[a][i] ξ_a
            let mut xc = vec![0.0; d];
            let mut dx = vec![0.0; d * m];
            for (j, &v) in cell.iter().enumerate() {
                axpy(&mut xc, 1.0 / cell.len() as f64, &xs[v]);
                let gb = &g.grad_bary[j * m..(j + 1) * m];
                for a in 0..d {
                    for i in 0..m {
                        dx[a * m + i] += xs[v][a] * gb[i];
                    }
                }
            }
            let xc = project(&xc, &g.frame);
            let xa: Vec<f64> = g.frame.iter().map(|e| dot(e, &xc)).collect();
            let mut mat = vec![0.0; m * m];
            for i in 0..m {
                let col = column(&dx, d, m, i);
                for a in 0..m {
                    mat[a * m + i] = dot(&col, &g.frame[a]);
                }
            }
            let div: f64 = (0..m).map(|i| mat[i * m + i]).sum();
            let mat_norm = mat.iter().map(|x| x * x).sum::<f64>().sqrt();
            let slots = n.cell_slots(c);
            let mut acc = [0.0; 7];
            for l in 0..q {
                let gn = n.sheet_gradient(c, &slots, l);
                let cols: Vec<Vec<f64>> = (0..m).map(|i| project(&column(&gn, d, m, i), &nf)).collect();
                let nc = project(&n.sheet_center(c, &slots, l), &nf);
                let sq: f64 = cols.iter().map(|v| dot(v, v)).sum();
                let mut hs = 0.0;
                for i in 0..m {
                    for a in 0..m {
                        hs += mat[a * m + i] * dot(&cols[i], &cols[a]);
                    }
                }
                let mut nx = vec![0.0; d];
                for a in 0..m {
                    axpy(&mut nx, xa[a], &cols[a]);
                }
                let mut e1 = 0.0;
                for i in 0..m {
                    let xi = &g.frame[i];
                    e1 += dot(&scene.ambient_second_form(&g.center, xi, &nc), &scene.ambient_second_form(&g.center, &xc, &cols[i]));
                    e1 -= dot(&scene.ambient_second_form(&g.center, &xc, &nc), &scene.ambient_second_form(&g.center, xi, &cols[i]));
                }
                let e2 = a_pair(n, &g.center, &g.frame, &nc, &nx);
                let e3 = scene.partial_ricci_unchecked(&g.center, &nc, &nx);
                let w = g.weight;
                acc[0] += -w * sq * div;
                acc[1] += 2.0 * w * hs;
                acc[2] += 2.0 * w * e1;
                acc[3] += 2.0 * w * e2;
                acc[4] += 2.0 * w * e3;
                acc[5] += w * sq * (div.abs() + 2.0 * mat_norm);
                acc[6] += 2.0 * w * norm(&nc) * norm(&nx) * (1.0 + mat_norm);
            }
            acc
        })
        .collect();
    let sum = |k: usize| pairwise_sum(&parts.iter().map(|p| p[k]).collect::<Vec<_>>());
    let lhs = sum(0) + sum(1);
    let e_iv = [sum(2), sum(3), sum(4)];
    let rhs = e_iv.iter().sum::<f64>();
    let scale = sum(5) + rhs.abs();
    let residual = lhs - rhs;
    Ok(ResidualReport {
        lhs,
        rhs,
        residual,
        scale,
        relative: if scale > 0.0 { residual.abs() / scale } else { 0.0 },
        e_ov: 0.0,
        e_iv,
    })
}
