//! Interpolation between two Q-valued maps on the unit circle across the
//! product collar S¹ × [0, λ].
//!
//! Sheets are joined by straight segments along the optimal matching of
//! f1(θ) and f2(θ). A cell [θ_i, θ_{i+1}] × [0, λ] whose four edge
//! matchings do not commute is filled instead with the rolled harmonic
//! extension of its boundary loop, pulled back through a square-to-disk map.

use crate::aq::{self, QPoint};
use crate::error::{Error, Result};
use crate::harmonic::{decompose_irreducible, harmonic_extension, HarmonicExtension};
use crate::linalg::pairwise_sum;
use std::f64::consts::PI;

const PATCH_LOOP: usize = 256;
const PATCH_GRID: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub struct CollarReport {
    pub l2: f64,
    pub dirichlet: f64,
    pub f1_l2: f64,
    pub f2_l2: f64,
    pub f1_dirichlet: f64,
    pub f2_dirichlet: f64,
    /// ∫_{S¹} G(f1, f2)².
    pub gap_sq: f64,
    /// ∫|h|² / (λ(∫|f1|² + ∫|f2|²)).
    pub c_l2: f64,
    /// ∫|Dh|² / (λ(Dir f1 + Dir f2) + λ⁻¹∫G(f1,f2)²).
    pub c_dir: f64,
    pub obstructed_cells: Vec<usize>,
    /// Largest g-distance between h at t = 0, λ and the inputs.
    pub endpoint_error: f64,
}

#[derive(Clone, Debug)]
pub struct CollarField {
    pub lambda: f64,
    pub f1: Vec<QPoint>,
    pub f2: Vec<QPoint>,
    /// Matching f1(θ_i) → f2(θ_i).
    pub across: Vec<Vec<usize>>,
    patches: Vec<Option<HarmonicExtension>>,
}

impl CollarField {
    pub fn n(&self) -> usize {
        self.f1.len()
    }

    fn dtheta(&self) -> f64 {
        2.0 * PI / self.n() as f64
    }

    /// h at grid angle i and height t ∈ [0, λ].
    pub fn at_node(&self, i: usize, t: f64) -> QPoint {
        let s = t / self.lambda;
        let (a, b) = (&self.f1[i], &self.f2[i]);
        let sheets: Vec<Vec<f64>> = (0..a.q())
            .map(|l| a.sheet(l).iter().zip(b.sheet(self.across[i][l])).map(|(x, y)| (1.0 - s) * x + s * y).collect())
            .collect();
        QPoint::from_sheets(&sheets).expect("shape")
    }

    /// h at angle θ ∈ [0, 2π) and height t ∈ [0, λ].
    pub fn eval(&self, theta: f64, t: f64) -> QPoint {
        let n = self.n();
        let u = theta.rem_euclid(2.0 * PI) / self.dtheta();
        let i = (u.floor() as usize).min(n - 1);
        self.eval_cell(i, u - i as f64, t / self.lambda)
    }

    /// h inside cell i at local coordinates (a, s) ∈ [0,1]².
    fn eval_cell(&self, i: usize, a: f64, s: f64) -> QPoint {
        if let Some(p) = &self.patches[i] {
            let (u, v) = (2.0 * a - 1.0, 2.0 * s - 1.0);
            let (x, y) = square_to_disk(u, v);
            return p.eval(x, y);
        }
        self.edge_value(i, a, s)
    }

    /// Bilinear sheet interpolation through the matchings around cell i.
    fn edge_value(&self, i: usize, a: f64, s: f64) -> QPoint {
        let j = (i + 1) % self.n();
        let p1 = aq::optimal_matching(&self.f1[i], &self.f1[j]).expect("shape").0;
        let lo = self.at_node(i, s * self.lambda);
        let hi = self.at_node(j, s * self.lambda);
        // sheets of h(θ_i, t) are indexed by f1 slots; follow f1's edge matching
        let sheets: Vec<Vec<f64>> = (0..lo.q())
            .map(|l| lo.sheet(l).iter().zip(hi.sheet(p1[l])).map(|(x, y)| (1.0 - a) * x + a * y).collect())
            .collect();
        QPoint::from_sheets(&sheets).expect("shape")
    }

    /// Trace of h on the boundary of cell i, shared with the neighbours.
    fn loop_value(&self, i: usize, a: f64, s: f64) -> QPoint {
        let j = (i + 1) % self.n();
        if a == 0.0 {
            return self.at_node(i, s * self.lambda);
        }
        if a == 1.0 {
            return self.at_node(j, s * self.lambda);
        }
        let (x, y) = if s == 0.0 {
            (&self.f1[i], &self.f1[j])
        } else if s == 1.0 {
            (&self.f2[i], &self.f2[j])
        } else {
            return self.edge_value(i, a, s);
        };
        let p = aq::optimal_matching(x, y).expect("shape").0;
        let sheets: Vec<Vec<f64>> = (0..x.q())
            .map(|l| x.sheet(l).iter().zip(y.sheet(p[l])).map(|(u, v)| (1.0 - a) * u + a * v).collect())
            .collect();
        QPoint::from_sheets(&sheets).expect("shape")
    }
}

/// Maps the square [-1,1]² onto the closed unit disk, radially.
fn square_to_disk(u: f64, v: f64) -> (f64, f64) {
    let n2 = (u * u + v * v).sqrt();
    if n2 == 0.0 {
        return (0.0, 0.0);
    }
    let ninf = u.abs().max(v.abs());
    (u * ninf / n2, v * ninf / n2)
}

/// Circle Dirichlet energy and L² norm of a sampled map on the unit circle,
/// piecewise linear along optimal matchings.
pub fn circle_energies(f: &[QPoint]) -> Result<(f64, f64)> {
    let n = f.len();
    let h = 2.0 * PI / n as f64;
    let mut dir = Vec::with_capacity(n);
    let mut l2 = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (&f[i], &f[(i + 1) % n]);
        let (p, c) = aq::optimal_matching(a, b)?;
        dir.push(c / h);
        // exact integral of |(1-s)x + s y|² over the segment
        let mut s = 0.0;
        for l in 0..a.q() {
            let (x, y) = (a.sheet(l), b.sheet(p[l]));
            s += x.iter().zip(y).map(|(u, v)| (u * u + u * v + v * v) / 3.0).sum::<f64>();
        }
        l2.push(s * h);
    }
    Ok((pairwise_sum(&dir), pairwise_sum(&l2)))
}

pub fn collar_interpolation(f1: &[QPoint], f2: &[QPoint], lambda: f64) -> Result<(CollarField, CollarReport)> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParam(format!("collar thickness must lie in (0, 1) (got {lambda})")));
    }
    if f1.len() != f2.len() || f1.len() < 4 {
        return Err(Error::DimensionMismatch { what: "collar boundary samples", left: f1.len(), right: f2.len() });
    }
    let n = f1.len();
    let (q, d) = (f1[0].q(), f1[0].d());
    for p in f1.iter().chain(f2) {
        if p.q() != q || p.d() != d {
            return Err(Error::DimensionMismatch { what: "collar sample shape", left: p.q() * p.d(), right: q * d });
        }
    }
    let mut across = Vec::with_capacity(n);
    let mut gap = Vec::with_capacity(n);
    for i in 0..n {
        let (p, c) = aq::optimal_matching(&f1[i], &f2[i])?;
        across.push(p);
        gap.push(c);
    }
    let mut field = CollarField { lambda, f1: f1.to_vec(), f2: f2.to_vec(), across, patches: vec![None; n] };
    // cell i is consistent when going around its boundary returns every sheet to itself
    let mut obstructed = Vec::new();
    for i in 0..n {
        let j = (i + 1) % n;
        let p1 = aq::optimal_matching(&f1[i], &f1[j])?.0;
        let p2 = aq::optimal_matching(&f2[i], &f2[j])?.0;
        let consistent = (0..q).all(|l| {
            let via_bottom = field.across[j][p1[l]];
            let via_top = p2[field.across[i][l]];
            via_bottom == via_top || aq::dist_sq(f2[j].sheet(via_bottom), f2[j].sheet(via_top)).sqrt() <= aq::TAU_COIN
        });
        if !consistent {
            obstructed.push(i);
        }
    }
    for &i in &obstructed {
        let samples: Vec<QPoint> = (0..PATCH_LOOP)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / PATCH_LOOP as f64;
                let (c, s) = (th.cos(), th.sin());
                let m = c.abs().max(s.abs());
                let (u, v) = (c / m, s / m);
                field.loop_value(i, clamp_edge(0.5 * (u + 1.0)), clamp_edge(0.5 * (v + 1.0)))
            })
            .collect();
        let dec = decompose_irreducible(&samples, 1.0, PATCH_LOOP / 2 - 1, aq::TAU_COIN)?;
        field.patches[i] = Some(harmonic_extension(&dec, 1.0)?.0);
    }

    let dth = field.dtheta();
    let mut dir_parts = Vec::with_capacity(n);
    let mut l2_parts = Vec::with_capacity(n);
    for i in 0..n {
        let (dd, ll) = if field.patches[i].is_some() { patch_energy(&field, i) } else { bilinear_energy(&field, i)? };
        dir_parts.push(dd);
        l2_parts.push(ll);
    }
    let dirichlet = pairwise_sum(&dir_parts);
    let l2 = pairwise_sum(&l2_parts);
    let (f1_dirichlet, f1_l2) = circle_energies(f1)?;
    let (f2_dirichlet, f2_l2) = circle_energies(f2)?;
    let gap_sq = pairwise_sum(&gap) * dth;
    let mut endpoint_error: f64 = 0.0;
    for i in 0..n {
        endpoint_error = endpoint_error.max(aq::g_distance(&field.at_node(i, 0.0), &f1[i])?);
        endpoint_error = endpoint_error.max(aq::g_distance(&field.at_node(i, lambda), &f2[i])?);
    }
    let l2_den = lambda * (f1_l2 + f2_l2);
    let dir_den = lambda * (f1_dirichlet + f2_dirichlet) + gap_sq / lambda;
    let report = CollarReport {
        l2,
        dirichlet,
        f1_l2,
        f2_l2,
        f1_dirichlet,
        f2_dirichlet,
        gap_sq,
        c_l2: if l2_den > 0.0 { l2 / l2_den } else { 0.0 },
        c_dir: if dir_den > 0.0 { dirichlet / dir_den } else { 0.0 },
        obstructed_cells: obstructed,
        endpoint_error,
    };
    Ok((field, report))
}

fn clamp_edge(x: f64) -> f64 {
    if x < 1e-12 {
        0.0
    } else if x > 1.0 - 1e-12 {
        1.0
    } else {
        x
    }
}

/// Exact energies of the bilinear sheets in an unobstructed cell.
fn bilinear_energy(f: &CollarField, i: usize) -> Result<(f64, f64)> {
    let n = f.n();
    let j = (i + 1) % n;
    let (dth, lam) = (f.dtheta(), f.lambda);
    let p1 = aq::optimal_matching(&f.f1[i], &f.f1[j])?.0;
    let q = f.f1[i].q();
    let (mut dir, mut l2) = (0.0, 0.0);
    let (gx, gw) = crate::linalg::gauss_legendre(2);
    for l in 0..q {
        let c00 = f.f1[i].sheet(l);
        let c10 = f.f1[j].sheet(p1[l]);
        let c01 = f.f2[i].sheet(f.across[i][l]);
        let c11 = f.f2[j].sheet(f.across[j][p1[l]]);
        for (xa, wa) in gx.iter().zip(&gw) {
            for (xs, ws) in gx.iter().zip(&gw) {
                let (a, s) = (0.5 * (xa + 1.0), 0.5 * (xs + 1.0));
                let w = 0.25 * wa * ws * dth * lam;
                let mut da = 0.0;
                let mut ds = 0.0;
                let mut v2 = 0.0;
                for k in 0..c00.len() {
                    let ga = ((1.0 - s) * (c10[k] - c00[k]) + s * (c11[k] - c01[k])) / dth;
                    let gs = ((1.0 - a) * (c01[k] - c00[k]) + a * (c11[k] - c10[k])) / lam;
                    let v = (1.0 - a) * (1.0 - s) * c00[k] + a * (1.0 - s) * c10[k] + (1.0 - a) * s * c01[k] + a * s * c11[k];
                    da += ga * ga;
                    ds += gs * gs;
                    v2 += v * v;
                }
                dir += w * (da + ds);
                l2 += w * v2;
            }
        }
    }
    Ok((dir, l2))
}

/// Metric-derivative energy of a patched cell on a PATCH_GRID² subgrid.
fn patch_energy(f: &CollarField, i: usize) -> (f64, f64) {
    let g = PATCH_GRID;
    let (dth, lam) = (f.dtheta(), f.lambda);
    let (ha, hs) = (dth / g as f64, lam / g as f64);
    let vals: Vec<QPoint> = (0..=g)
        .flat_map(|b| (0..=g).map(move |a| (a, b)))
        .map(|(a, b)| f.eval_cell(i, a as f64 / g as f64, b as f64 / g as f64))
        .collect();
    let at = |a: usize, b: usize| &vals[b * (g + 1) + a];
    let gd = |x: &QPoint, y: &QPoint| aq::g_distance(x, y).expect("shape").powi(2);
    let (mut dir, mut l2) = (0.0, 0.0);
    for b in 0..g {
        for a in 0..g {
            let (v00, v10, v01, v11) = (at(a, b), at(a + 1, b), at(a, b + 1), at(a + 1, b + 1));
            let ea = 0.5 * (gd(v00, v10) + gd(v01, v11)) / (ha * ha);
            let es = 0.5 * (gd(v00, v01) + gd(v10, v11)) / (hs * hs);
            dir += (ea + es) * ha * hs;
            l2 += 0.25 * (v00.norm_sq() + v10.norm_sq() + v01.norm_sq() + v11.norm_sq()) * ha * hs;
        }
    }
    (dir, l2)
}
