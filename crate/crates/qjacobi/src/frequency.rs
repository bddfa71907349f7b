//! Radial energy profiles around a point, the frequency function and its
//! audits, blow-ups, tangent maps and multiplicity strata.

use crate::aq::{self, QPoint};
use crate::error::{Error, Result};
use crate::field::{dirichlet_energy, l2_norm_sq, DiscreteQField, Flavor, Region};
use crate::linalg::{axpy, dot, norm, pairwise_sum, project};
use crate::mesh::Mesh;
use crate::scene::Scene;
use crate::selection::{loop_holonomy, vertex_link};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

/// Spacing of the default radii grid.
pub const RADIUS_RATIO: f64 = 1.189_207_115_002_721; // 2^(1/4)

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyProfile {
    pub pole: Vec<f64>,
    pub m: usize,
    pub radii: Vec<f64>,
    /// Normal Dirichlet energy in B_r.
    pub d: Vec<f64>,
    /// ∫ |N|² over ∂B_r.
    pub h: Vec<f64>,
    /// ∫ Σ ⟨N^l, ∇⊥_r̂ N^l⟩ over ∂B_r.
    pub e: Vec<f64>,
    /// ∫ |∇⊥_r̂ N|² over ∂B_r.
    pub g: Vec<f64>,
    /// ∫ |N|² over B_r.
    pub f: Vec<f64>,
    /// r D / H where valid, NaN elsewhere.
    pub i: Vec<f64>,
    pub valid: Vec<bool>,
}

impl FrequencyProfile {
    pub fn valid_indices(&self) -> Vec<usize> {
        (0..self.radii.len()).filter(|&k| self.valid[k]).collect()
    }
}

/// Largest radius around p usable for profiles on this mesh.
pub fn max_radius(mesh: &Mesh, p: &[f64]) -> f64 {
    let s = mesh.scene();
    let inj = s.injectivity_bound();
    if mesh.is_closed() {
        inj
    } else {
        inj.min(mesh.inner_radius() - s.distance_sigma(&s.pole(), p))
    }
}

/// Geometric grid from 4h up to r_max with ratio 2^(1/4).
pub fn default_radii(mesh: &Mesh, p: &[f64], r_max: Option<f64>) -> Vec<f64> {
    let top = r_max.unwrap_or(f64::INFINITY).min(0.98 * max_radius(mesh, p));
    let mut out = Vec::new();
    let mut r = 4.0 * mesh.h();
    while r <= top {
        out.push(r);
        r *= RADIUS_RATIO;
    }
    out
}

/// Points of the geodesic sphere ∂B_r(p) with equal quadrature weights.
fn sphere_samples(scene: &Scene, p: &[f64], r: f64, h: f64) -> Vec<Vec<f64>> {
    let frame = scene.tangent_frame(p);
    let m = frame.len();
    let dirs: Vec<Vec<f64>> = match m {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let n = ((16.0 * PI * r / h).ceil() as usize).max(128);
            (0..n)
                .map(|j| {
                    let t = 2.0 * PI * (j as f64 + 0.5) / n as f64;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        }
        _ => {
            // Fibonacci lattice on S²
            let n = ((16.0 * 4.0 * PI * r * r / (h * h)).ceil() as usize).clamp(400, 40_000);
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|j| {
                    let z = 1.0 - (2.0 * j as f64 + 1.0) / n as f64;
                    let s = (1.0 - z * z).sqrt();
                    let t = golden * j as f64;
                    vec![s * t.cos(), s * t.sin(), z]
                })
                .collect()
        }
    };
    dirs.iter()
        .map(|u| {
            let mut v = vec![0.0; scene.d()];
            for (a, e) in u.iter().zip(&frame) {
                axpy(&mut v, r * a, e);
            }
            scene.exp_sigma(p, &v).expect("radius checked against injectivity")
        })
        .collect()
}

/// Gradients recovered at the nodes: the area-weighted average of the cell
/// gradients around each (vertex, slot), as d×d ambient maps. Interpolating
/// them is second-order accurate where the cellwise P1 gradient is only
/// first-order. Cells touching a vertex where sheets coincide, or with
/// inconsistent matchings, keep their P1 gradient.
struct Recovery {
    grads: Vec<f64>,
    p1: Vec<bool>,
    /// Normal (or full) energy of each whole cell.
    energy: Vec<f64>,
}

impl Recovery {
    fn new(n: &DiscreteQField) -> Self {
        let mesh = n.mesh();
        let (q, d, m) = (n.q(), n.d(), mesh.m());
        let dd = d * d;
        let nv = mesh.num_vertices();
        let tol = aq::TAU_COIN * (1.0 + n.max_sheet_norm());
        let support: Vec<usize> = (0..nv).map(|v| aq::spread_stats(&n.value(v), tol).support).collect();
        let p1: Vec<bool> = (0..mesh.num_cells())
            .map(|c| {
                let sup: Vec<usize> = mesh.cell(c).iter().map(|&v| support[v]).collect();
                sup.iter().min() != sup.iter().max() || !n.cell_consistent(c)
            })
            .collect();
        let mut acc = vec![0.0; nv * q * dd];
        let mut wsum = vec![0.0; nv];
        for c in 0..mesh.num_cells() {
            let slots = n.cell_slots(c);
            let g = mesh.geom(c);
            for l in 0..q {
                let jac = Self::cell_map(n, c, &slots, l);
                for (j, &v) in mesh.cell(c).iter().enumerate() {
                    let o = (v * q + slots[j][l]) * dd;
                    axpy(&mut acc[o..o + dd], g.weight, &jac);
                }
            }
            for &v in mesh.cell(c) {
                wsum[v] += g.weight;
            }
        }
        for (k, x) in acc.iter_mut().enumerate() {
            let w = wsum[k / (q * dd)];
            if w > 0.0 {
                *x /= w;
            }
        }
        let mut rec = Self { grads: acc, p1, energy: Vec::new() };
        let scene = mesh.scene();
        rec.energy = (0..mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let g = mesh.geom(c);
                let basis = if n.is_normal() { Some(scene.normal_frame(&g.center)) } else { None };
                let slots = n.cell_slots(c);
                let cell = mesh.cell(c);
                let k = cell.len();
                let mut s = 0.0;
                for l in 0..q {
                    if rec.p1[c] {
                        let jac = Self::cell_map(n, c, &slots, l);
                        for e in &g.frame {
                            let v = apply(&jac, e, d);
                            s += proj_sq(&v, basis.as_deref()) * g.weight;
                        }
                        continue;
                    }
                    // ∫ λ_i λ_j over a simplex: |c| (1 + δ_ij) / ((m+1)(m+2))
                    for e in &g.frame {
                        let vals: Vec<Vec<f64>> = (0..k)
                            .map(|j| {
                                let o = (cell[j] * q + slots[j][l]) * dd;
                                let v = apply(&rec.grads[o..o + dd], e, d);
                                match &basis {
                                    Some(b) => project(&v, b),
                                    None => v,
                                }
                            })
                            .collect();
                        let sum: Vec<f64> = (0..d).map(|a| vals.iter().map(|v| v[a]).sum()).collect();
                        let diag: f64 = vals.iter().map(|v| dot(v, v)).sum();
                        s += g.weight * (diag + dot(&sum, &sum)) / ((m + 1) * (m + 2)) as f64;
                    }
                }
                s
            })
            .collect();
        rec
    }

    /// Ambient d×d map of the P1 gradient of matched sheet l in cell c.
    fn cell_map(n: &DiscreteQField, c: usize, slots: &[Vec<usize>], l: usize) -> Vec<f64> {
        let (d, m) = (n.d(), n.mesh().m());
        let grad = n.sheet_gradient(c, slots, l);
        let mut jac = vec![0.0; d * d];
        for a in 0..d {
            for (i, e) in n.mesh().geom(c).frame.iter().enumerate() {
                axpy(&mut jac[a * d..(a + 1) * d], grad[a * m + i], e);
            }
        }
        jac
    }

    /// Derivative of matched sheet l along t at barycentric point lam of cell c.
    fn derivative(&self, n: &DiscreteQField, c: usize, slots: &[Vec<usize>], lam: &[f64], l: usize, t: &[f64]) -> Vec<f64> {
        let (q, d) = (n.q(), n.d());
        if self.p1[c] {
            return apply(&Self::cell_map(n, c, slots, l), t, d);
        }
        let mut out = vec![0.0; d];
        for (j, &v) in n.mesh().cell(c).iter().enumerate() {
            let o = (v * q + slots[j][l]) * d * d;
            axpy(&mut out, lam[j], &apply(&self.grads[o..o + d * d], t, d));
        }
        out
    }
}

fn apply(jac: &[f64], t: &[f64], d: usize) -> Vec<f64> {
    (0..d).map(|a| dot(&jac[a * d..(a + 1) * d], t)).collect()
}

fn proj_sq(v: &[f64], basis: Option<&[Vec<f64>]>) -> f64 {
    match basis {
        Some(b) => b.iter().map(|e| dot(v, e).powi(2)).sum(),
        None => dot(v, v),
    }
}

/// (|N|², ⟨N, ∇⊥_r̂ N⟩, |∇⊥_r̂ N|²) at a point at distance r from p.
fn shell_terms(n: &DiscreteQField, rec: &Recovery, p: &[f64], x: &[f64], r: f64) -> Result<[f64; 3]> {
    let mesh = n.mesh();
    let scene = mesh.scene();
    let (c, lam) = mesh.locate(x)?;
    let slots = n.cell_slots(c);
    let d = n.d();
    let nf = scene.normal_frame(x);
    let rhat: Vec<f64> = scene.log_sigma(x, p).iter().map(|v| -v / r).collect();
    let cell = mesh.cell(c);
    let mut out = [0.0; 3];
    for l in 0..n.q() {
        let mut val = vec![0.0; d];
        for (j, &v) in cell.iter().enumerate() {
            axpy(&mut val, lam[j], n.sheet(v, slots[j][l]));
        }
        let dr = rec.derivative(n, c, &slots, &lam, l, &rhat);
        let (val, dr) = if n.is_normal() { (project(&val, &nf), project(&dr, &nf)) } else { (val, dr) };
        out[0] += dot(&val, &val);
        out[1] += dot(&val, &dr);
        out[2] += dot(&dr, &dr);
    }
    Ok(out)
}

pub fn radial_profiles(n: &DiscreteQField, p: &[f64], radii: &[f64]) -> Result<FrequencyProfile> {
    if n.is_stale() {
        return Err(Error::StaleMatchings);
    }
    let mesh = n.mesh();
    let scene = mesh.scene();
    let max = max_radius(mesh, p);
    for &r in radii {
        if !(r > 0.0) || r >= max {
            return Err(Error::RadiusBeyondDomain { radius: r, max });
        }
    }
    let rec = Recovery::new(n);
    let rows: Vec<Result<[f64; 5]>> = radii
        .par_iter()
        .map(|&r| {
            let region = Region { cells: mesh.ball_fractions(p, r) };
            let dval = pairwise_sum(&region.cells.iter().map(|&(c, f)| f * rec.energy[c]).collect::<Vec<_>>());
            let fval = l2_norm_sq(n, &region)?;
            let pts = sphere_samples(scene, p, r, mesh.h());
            let w = scene.sphere_measure(r) / pts.len() as f64;
            let mut parts = [Vec::new(), Vec::new(), Vec::new()];
            for x in &pts {
                let t = shell_terms(n, &rec, p, x, r)?;
                for k in 0..3 {
                    parts[k].push(w * t[k]);
                }
            }
            let [h, e, g] = parts.map(|v| pairwise_sum(&v));
            Ok([dval, h, e, g, fval])
        })
        .collect();
    let mut prof = FrequencyProfile {
        pole: p.to_vec(),
        m: mesh.m(),
        radii: radii.to_vec(),
        d: Vec::new(),
        h: Vec::new(),
        e: Vec::new(),
        g: Vec::new(),
        f: Vec::new(),
        i: Vec::new(),
        valid: Vec::new(),
    };
    for (row, &r) in rows.into_iter().zip(radii) {
        let [dv, hv, ev, gv, fv] = row?;
        prof.d.push(dv);
        prof.h.push(hv);
        prof.e.push(ev);
        prof.g.push(gv);
        prof.f.push(fv);
        prof.valid.push(hv > 0.0);
        prof.i.push(if hv > 0.0 { r * dv / hv } else { f64::NAN });
    }
    Ok(prof)
}

/// Centered derivative on a non-uniform grid (one-sided at the ends).
pub fn grid_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|k| {
            if n < 2 {
                return 0.0;
            }
            if k == 0 {
                return (y[1] - y[0]) / (x[1] - x[0]);
            }
            if k == n - 1 {
                return (y[n - 1] - y[n - 2]) / (x[n - 1] - x[n - 2]);
            }
            let (h1, h2) = (x[k] - x[k - 1], x[k + 1] - x[k]);
            (h1 * h1 * y[k + 1] - h2 * h2 * y[k - 1] + (h2 * h2 - h1 * h1) * y[k]) / (h1 * h2 * (h1 + h2))
        })
        .collect()
}

/// y′ from centered differences of ln y against ln r, for positive y. Exact
/// for power laws.
pub fn log_derivative(r: &[f64], y: &[f64]) -> Vec<f64> {
    let lr: Vec<f64> = r.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|x| x.max(f64::MIN_POSITIVE).ln()).collect();
    grid_derivative(&lr, &ly).iter().zip(r.iter().zip(y)).map(|(s, (r, y))| s * y / r).collect()
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct MonotonicityAudit {
    /// Smallest λ ≥ 0 with e^{λr} I(r) non-decreasing up to the slack.
    pub lambda: f64,
    /// max over s < t of I(s) / (1 + I(t)).
    pub c0: f64,
    /// max |D − E| / F.
    pub d_minus_e: f64,
    /// max ‖N‖²_{B_r} / (r² D).
    pub poincare: f64,
    /// max r² D / ‖N‖²_{B_r}.
    pub reverse_poincare: f64,
    /// max D(r/2) r² / ‖N‖²_{B_r \ B_{r/2}}, over radii whose half is on the grid.
    pub caccioppoli: f64,
    /// max (F − (1/m + ε) r H) / (r² D) with ε = 0.05: the measured C_ε.
    pub boundary_poincare: f64,
    /// max |H′ − (m−1)H/r − 2E| / (r H).
    pub height_derivative: f64,
    /// max |F′ − H| / H.
    pub f_derivative: f64,
    /// max (E² − G H) / (G H); never positive up to rounding.
    pub cauchy_schwarz: f64,
    pub radii_used: usize,
}

pub const MONOTONE_SLACK: f64 = 1e-3;

pub fn monotonicity_audit(p: &FrequencyProfile) -> Result<MonotonicityAudit> {
    let idx = p.valid_indices();
    if idx.len() < 8 {
        return Err(Error::TooFewRadii { need: 8, got: idx.len() });
    }
    let r: Vec<f64> = idx.iter().map(|&k| p.radii[k]).collect();
    let at = |v: &Vec<f64>| -> Vec<f64> { idx.iter().map(|&k| v[k]).collect() };
    let (d, h, e, g, f, i) = (at(&p.d), at(&p.h), at(&p.e), at(&p.g), at(&p.f), at(&p.i));
    let n = r.len();
    let m = p.m as f64;
    let mut a = MonotonicityAudit { radii_used: n, ..Default::default() };
    for k in 0..n - 1 {
        let (lo, hi) = (i[k], i[k + 1]);
        let target = lo * (1.0 - MONOTONE_SLACK);
        if hi >= target {
            continue;
        }
        let need = if hi > 0.0 && target > 0.0 { (target / hi).ln() / (r[k + 1] - r[k]) } else { f64::INFINITY };
        a.lambda = a.lambda.max(need);
    }
    for s in 0..n {
        for t in s + 1..n {
            a.c0 = a.c0.max(i[s] / (1.0 + i[t]));
        }
    }
    let hp = log_derivative(&r, &h);
    let fp = log_derivative(&r, &f);
    for k in 0..n {
        if f[k] > 0.0 {
            a.d_minus_e = a.d_minus_e.max((d[k] - e[k]).abs() / f[k]);
            a.reverse_poincare = a.reverse_poincare.max(r[k] * r[k] * d[k] / f[k]);
        }
        if d[k] > 0.0 {
            a.poincare = a.poincare.max(f[k] / (r[k] * r[k] * d[k]));
            a.boundary_poincare = a.boundary_poincare.max((f[k] - (1.0 / m + 0.05) * r[k] * h[k]) / (r[k] * r[k] * d[k]));
        }
        a.height_derivative = a.height_derivative.max((hp[k] - (m - 1.0) * h[k] / r[k] - 2.0 * e[k]).abs() / (r[k] * h[k]));
        if k > 0 && k + 1 < n {
            a.f_derivative = a.f_derivative.max((fp[k] - h[k]).abs() / h[k]);
        }
        let gh = g[k] * h[k];
        if gh > 0.0 {
            a.cauchy_schwarz = a.cauchy_schwarz.max((e[k] * e[k] - gh) / gh);
        } else {
            a.cauchy_schwarz = a.cauchy_schwarz.max(if e[k] != 0.0 { f64::INFINITY } else { -1.0 });
        }
    }
    for k in 0..n {
        if let Some(j) = (0..k).find(|&j| (r[j] * 2.0 / r[k] - 1.0).abs() < 1e-9) {
            let ann = f[k] - f[j];
            if ann > 0.0 {
                a.caccioppoli = a.caccioppoli.max(d[j] * r[k] * r[k] / ann);
            }
        }
    }
    Ok(a)
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    pub i0: f64,
    pub h0: f64,
    pub d0: f64,
    /// None when every deviation vanishes (exactly homogeneous data).
    pub beta: Option<f64>,
    /// Half-width of the spread between the extrapolated and smallest-radius frequency.
    pub i0_interval: f64,
    /// Largest |I − I0|, |H/r^(2I0+m−1) − H0|, |D/r^(2I0+m−2) − D0| (relative for H, D).
    pub residuals: [f64; 3],
    /// |D0 − I0 H0| / |D0|.
    pub contract_gap: f64,
    /// The power-law decay is only backed for surfaces.
    pub heuristic: bool,
    pub exact_constant: bool,
    /// I0 ≤ 0 at a point where the field collapses (H/r^(m−1) decays towards
    /// the pole) but does not vanish nearby. At non-collapsed points I0 = 0 is
    /// the correct limit and is not flagged.
    pub inconsistent: bool,
}

/// Aitken extrapolation of three values on a geometric grid; falls back to
/// the first value when the differences are not geometric.
fn aitken(v: [f64; 3]) -> f64 {
    let (d1, d2) = (v[1] - v[0], v[2] - v[1]);
    let den = d2 - d1;
    let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
    if d1.abs() <= 1e-13 * scale || den.abs() <= 1e-13 * scale {
        return v[0];
    }
    let ratio = d2 / d1;
    if !(ratio > 0.0) || (ratio - 1.0).abs() < 1e-9 {
        return v[0];
    }
    v[0] - d1 * d1 / den
}

pub fn decay_fit(p: &FrequencyProfile) -> Result<DecayFit> {
    let idx = p.valid_indices();
    if idx.len() < 4 {
        return Err(Error::TooFewRadii { need: 4, got: idx.len() });
    }
    let r: Vec<f64> = idx.iter().map(|&k| p.radii[k]).collect();
    let i: Vec<f64> = idx.iter().map(|&k| p.i[k]).collect();
    let m = p.m as f64;
    let i0 = aitken([i[0], i[1], i[2]]);
    let hn: Vec<f64> = idx.iter().map(|&k| p.h[k] / p.radii[k].powf(2.0 * i0 + m - 1.0)).collect();
    let dn: Vec<f64> = idx.iter().map(|&k| p.d[k] / p.radii[k].powf(2.0 * i0 + m - 2.0)).collect();
    let h0 = aitken([hn[0], hn[1], hn[2]]);
    let d0 = aitken([dn[0], dn[1], dn[2]]);
    let dev: Vec<f64> = (0..r.len())
        .map(|k| (i[k] - i0).abs() + (hn[k] - h0).abs() / h0.abs().max(1e-300) + (dn[k] - d0).abs() / d0.abs().max(1e-300))
        .collect();
    let residuals = [
        i.iter().map(|x| (x - i0).abs()).fold(0.0, f64::max),
        hn.iter().map(|x| (x - h0).abs() / h0.abs().max(1e-300)).fold(0.0, f64::max),
        dn.iter().map(|x| (x - d0).abs() / d0.abs().max(1e-300)).fold(0.0, f64::max),
    ];
    let exact_constant = residuals.iter().all(|&x| x < 1e-9);
    let rmax = *r.last().unwrap();
    let pts: Vec<(f64, f64)> = (0..r.len())
        .filter(|&k| r[k] >= rmax / 10.0 && dev[k] > 0.0)
        .map(|k| (r[k].ln(), dev[k].ln()))
        .collect();
    let beta = if exact_constant || pts.len() < 2 { None } else { Some(crate::solver::slope(&pts)) };
    let mean_height = |k: usize| p.h[idx[k]] / r[k].powf(m - 1.0);
    let collapses = mean_height(0) < 0.5 * mean_height(r.len() - 1);
    Ok(DecayFit {
        i0,
        h0,
        d0,
        beta,
        i0_interval: (i0 - i[0]).abs(),
        residuals,
        contract_gap: (d0 - i0 * h0).abs() / d0.abs().max(1e-300),
        heuristic: p.m != 2,
        exact_constant,
        inconsistent: i0 <= 0.0 && p.h[idx[0]] > 0.0 && collapses,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BlowUpMode {
    /// Unit L² norm on B₁, weighted by the exponential-map Jacobian.
    L2,
    /// Unit Dirichlet energy on B₁, weighted the same way.
    Dirichlet,
}

/// Flat unit ball on which blow-ups of fields over `scene` are sampled.
pub fn blow_up_domain(scene: &Scene, h: f64) -> Result<Arc<Mesh>> {
    let k = scene.normal_frame(&scene.pole()).len();
    Ok(Arc::new(Mesh::ball(&Scene::flat_disk(scene.m(), k, 0), 1.0, h)?))
}

/// y ↦ N(exp_p(r y)), normalized on the target mesh.
pub fn blow_up_map(n: &DiscreteQField, p: &[f64], r: f64, mode: BlowUpMode, target: &Arc<Mesh>) -> Result<DiscreteQField> {
    let mesh = n.mesh();
    let scene = mesh.scene();
    let max = max_radius(mesh, p);
    if r >= max {
        return Err(Error::RadiusBeyondDomain { radius: r, max });
    }
    let ball = Region { cells: mesh.ball_fractions(p, r) };
    let area: f64 = ball.cells.iter().map(|&(c, f)| f * mesh.geom(c).weight).sum();
    let l2 = l2_norm_sq(n, &ball)?.sqrt();
    if l2 < 1e-14 * area {
        return Err(Error::VanishingNorm { norm: l2 });
    }
    let frame = scene.tangent_frame(p);
    let m = mesh.m();
    let q = n.q();
    let raw = DiscreteQField::from_normal_coefficients(target.clone(), q, |_, y| {
        let mut v = vec![0.0; scene.d()];
        for (a, e) in y[..m].iter().zip(&frame) {
            axpy(&mut v, r * a, e);
        }
        let x = scene.exp_sigma(p, &v).expect("inside the injectivity radius");
        let val = n.eval(&x).unwrap_or_else(|_| n.value(mesh.nearest_vertex(&x)));
        let nf = scene.normal_frame(&x);
        val.sheets().map(|s| nf.iter().map(|e| dot(s, e)).collect()).collect()
    })?;
    let jac: Vec<(usize, f64)> = (0..target.num_cells())
        .map(|c| (c, scene.exp_jacobian(r * norm(&target.geom(c).center[..m])) / scene.exp_jacobian(0.0)))
        .collect();
    let weighted = Region { cells: jac };
    let size = match mode {
        BlowUpMode::L2 => l2_norm_sq(&raw, &weighted)?,
        BlowUpMode::Dirichlet => dirichlet_energy(&raw, &weighted, Flavor::Normal)?,
    };
    if !(size > 0.0) {
        return Err(Error::VanishingNorm { norm: size.sqrt() });
    }
    Ok(raw.scaled(1.0 / size.sqrt()))
}

/// √∫ G(u, v)² over the common mesh, by the lumped vertex rule.
pub fn l2_distance(u: &DiscreteQField, v: &DiscreteQField) -> Result<f64> {
    let w = DiscreteQField::lumped_weights(u.mesh());
    let mut parts = Vec::with_capacity(w.len());
    for (k, wk) in w.iter().enumerate() {
        parts.push(wk * aq::g_distance(&u.value(k), &v.value(k))?.powi(2));
    }
    Ok(pairwise_sum(&parts).sqrt())
}

/// Blow-up differences below this are interpolation noise.
pub const NOISE_FLOOR: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct TangentMap {
    /// Blow-up at the smallest radius.
    pub limit: DiscreteQField,
    /// Exponent from ‖limit‖_{L²(∂B_ρ)} ∝ ρ^(μ+(m−1)/2).
    pub mu: f64,
    /// I0 of the profile at p.
    pub mu_frequency: f64,
    /// L² distances between consecutive blow-ups.
    pub cauchy: Vec<f64>,
    /// Cauchy differences failed to decrease.
    pub non_convergent: bool,
    /// sup |η ∘ limit|.
    pub eta_max: f64,
    /// G(limit(0), Q⟦0⟧).
    pub origin_value: f64,
}

/// `tau` bounds G(N(p), Q⟦0⟧) for p to count as collapsed; discrete
/// minimizers need a tolerance at the discretization scale.
pub fn tangent_map(n: &DiscreteQField, p: &[f64], radii: &[f64], target: &Arc<Mesh>, tau: f64) -> Result<TangentMap> {
    let mesh = n.mesh();
    let here = n.eval(p)?;
    let dist0 = aq::g_distance(&here, &QPoint::zero(here.q(), here.d()))?;
    if dist0 > tau {
        return Err(Error::NotCollapsed { distance: dist0 });
    }
    if radii.is_empty() {
        return Err(Error::TooFewRadii { need: 1, got: 0 });
    }
    let mut rs = radii.to_vec();
    rs.sort_by(|a, b| b.total_cmp(a));
    let maps: Vec<DiscreteQField> = rs.iter().map(|&r| blow_up_map(n, p, r, BlowUpMode::L2, target)).collect::<Result<_>>()?;
    let mut cauchy = Vec::new();
    for w in maps.windows(2) {
        cauchy.push(l2_distance(&w[0], &w[1])?);
    }
    let non_convergent = cauchy.len() >= 2 && cauchy[cauchy.len() - 1] > cauchy[0] && cauchy[cauchy.len() - 1] > NOISE_FLOOR;
    let limit = maps.last().unwrap().clone();
    let tm = limit.mesh().clone();
    let origin = vec![0.0; tm.d()];
    let m = tm.m() as f64;
    // shells of the last blow-up, sampled from N itself to avoid resampling twice
    let r_last = *rs.last().unwrap();
    let rec = Recovery::new(n);
    let mut shell = Vec::new();
    for k in 0..7 {
        let rho = 0.3 + 0.1 * k as f64;
        let pts = sphere_samples(mesh.scene(), p, rho * r_last, mesh.h());
        let mut s = Vec::with_capacity(pts.len());
        for x in &pts {
            s.push(shell_terms(n, &rec, p, x, rho * r_last)?[0]);
        }
        let hval = pairwise_sum(&s) * mesh.scene().sphere_measure(rho * r_last) / pts.len() as f64;
        shell.push((rho.ln(), 0.5 * hval.max(f64::MIN_POSITIVE).ln()));
    }
    let mu = crate::solver::slope(&shell) - (m - 1.0) / 2.0;
    let eta_max = (0..tm.num_vertices()).map(|v| norm(&aq::eta_mean(&limit.value(v)))).fold(0.0, f64::max);
    let at0 = limit.eval(&origin)?;
    let origin_value = aq::g_distance(&at0, &QPoint::zero(at0.q(), at0.d()))?;
    let radii_prof = default_radii(mesh, p, None);
    let mu_frequency = decay_fit(&radial_profiles(n, p, &radii_prof)?)?.i0;
    Ok(TangentMap { limit, mu, mu_frequency, cauchy, non_convergent, eta_max, origin_value })
}

#[derive(Clone, Debug, Serialize)]
pub struct Strata {
    /// Number of distinct sheets per vertex.
    pub sigma: Vec<usize>,
    /// Vertices where all Q sheets coincide.
    pub collapsed: Vec<usize>,
    pub singular: Vec<usize>,
    /// Connected components of the singular set.
    pub components: Vec<Vec<usize>>,
    /// Every component is a single vertex or a cluster within two mesh sizes.
    pub isolated: bool,
    /// Vertices whose σ exceeds that of every neighbour.
    pub lsc_violations: Vec<usize>,
}

/// Every matching along the closed loop beats all other permutations by a
/// relative margin, so its holonomy is not decided by rounding.
fn link_resolved(n: &DiscreteQField, lp: &[usize]) -> bool {
    let q = n.q();
    if q > 6 {
        return true;
    }
    let perms = all_perms(q);
    (0..lp.len()).all(|i| {
        let (a, b) = (n.value(lp[i]), n.value(lp[(i + 1) % lp.len()]));
        if aq::spread_stats(&a, aq::TAU_COIN).support < q || aq::spread_stats(&b, aq::TAU_COIN).support < q {
            return true;
        }
        let cost = aq::cost_matrix(&a, &b).expect("same shape");
        let mut costs: Vec<f64> = perms.iter().map(|p| p.iter().enumerate().map(|(k, &j)| cost[k * q + j]).sum()).collect();
        costs.sort_by(|x, y| x.total_cmp(y));
        costs[1] - costs[0] > 1e-6 * costs[1]
    })
}

fn all_perms(q: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for k in 0..q {
        out = out
            .into_iter()
            .flat_map(|p: Vec<usize>| {
                (0..=k).map(move |pos| {
                    let mut p = p.clone();
                    p.insert(pos, k);
                    p
                })
            })
            .collect();
    }
    out
}

/// A vertex is singular when σ drops there relative to a neighbour, or, for
/// surfaces with constant σ around it, when the sheets pick up a nontrivial
/// permutation around its link.
pub fn multiplicity_strata(n: &DiscreteQField, tau: f64) -> Result<Strata> {
    if n.is_stale() {
        return Err(Error::StaleMatchings);
    }
    let mesh = n.mesh();
    let q = n.q();
    let nv = mesh.num_vertices();
    let sigma: Vec<usize> = (0..nv).map(|v| aq::spread_stats(&n.value(v), tau).support).collect();
    let collapsed: Vec<usize> = (0..nv).filter(|&v| sigma[v] == 1).collect();
    let singular: Vec<usize> = (0..nv)
        .filter(|&v| {
            let nb = mesh.neighbors(v);
            if nb.iter().any(|&w| sigma[w] > sigma[v]) {
                return true;
            }
            if q < 2 || sigma[v] < 2 || nb.iter().any(|&w| sigma[w] < sigma[v]) {
                return false;
            }
            match vertex_link(mesh, v) {
                Some(link) if link_resolved(n, &link) => {
                    let hol = loop_holonomy(n, &link);
                    hol.iter().enumerate().any(|(i, &j)| i != j)
                }
                _ => false,
            }
        })
        .collect();
    let lsc_violations: Vec<usize> = (0..nv)
        .filter(|&v| {
            let nb = mesh.neighbors(v);
            !nb.is_empty() && nb.iter().all(|&w| sigma[v] > sigma[w])
        })
        .collect();
    let mut in_sing = vec![false; nv];
    singular.iter().for_each(|&v| in_sing[v] = true);
    let mut seen = vec![false; nv];
    let mut components = Vec::new();
    for &s in &singular {
        if seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut k = 0;
        while k < comp.len() {
            for &w in mesh.neighbors(comp[k]) {
                if in_sing[w] && !seen[w] {
                    seen[w] = true;
                    comp.push(w);
                }
            }
            k += 1;
        }
        comp.sort_unstable();
        components.push(comp);
    }
    let scene = mesh.scene();
    let isolated = components.iter().all(|c| {
        c.iter().all(|&a| c.iter().all(|&b| scene.distance_sigma(mesh.point(a), mesh.point(b)) <= 2.0 * mesh.h() + 1e-12))
    });
    Ok(Strata { sigma, collapsed, singular, components, isolated, lsc_violations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(k: usize, h: f64) -> Arc<Mesh> {
        Arc::new(Mesh::ball(&Scene::flat_disk(2, k, 0), 1.0, h).unwrap())
    }

    fn power(x: &[f64], a: f64, q: usize) -> Vec<Vec<f64>> {
        let (r, th) = ((x[0] * x[0] + x[1] * x[1]).sqrt(), x[1].atan2(x[0]));
        (0..q)
            .map(|l| {
                let t = (th + 2.0 * PI * l as f64) * a;
                vec![r.powf(a) * t.cos(), r.powf(a) * t.sin()]
            })
            .collect()
    }

    fn w3(mesh: Arc<Mesh>) -> DiscreteQField {
        DiscreteQField::from_normal_coefficients(mesh, 2, |_, x| power(x, 1.5, 2)).unwrap()
    }

    #[test]
    fn constant_field_has_zero_frequency() {
        let mesh = disk(1, 0.05);
        let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 2, |_, _| vec![vec![1.0], vec![-2.0]]).unwrap();
        let radii = default_radii(&mesh, &[0.0; 3], None);
        let p = radial_profiles(&n, &[0.0; 3], &radii).unwrap();
        assert!(p.d.iter().all(|&x| x.abs() < 1e-20));
        assert!(p.i.iter().all(|&x| x.abs() < 1e-18));
        // F for |N|² ≡ 5 is 5|B_r| exactly on the flat mesh
        for (f, r) in p.f.iter().zip(&radii) {
            assert!((f - 5.0 * PI * r * r).abs() < 1e-10);
        }
    }

    #[test]
    fn boundary_poincare_equality_for_constants() {
        // g ≡ 1: ∫_B g² = (1/m) r ∫_∂B g² exactly
        let mesh = disk(1, 0.05);
        let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 1, |_, _| vec![vec![1.0]]).unwrap();
        let radii = default_radii(&mesh, &[0.0; 3], None);
        let p = radial_profiles(&n, &[0.0; 3], &radii).unwrap();
        for k in 0..radii.len() {
            assert!((p.f[k] - 0.5 * radii[k] * p.h[k]).abs() < 1e-10 * p.f[k]);
        }
    }

    #[test]
    fn w3_frequency_is_three_halves() {
        let mesh = disk(2, 1.0 / 64.0);
        let n = w3(mesh.clone());
        let radii: Vec<f64> = default_radii(&mesh, &[0.0; 4], None).into_iter().filter(|&r| r >= 0.15 && r <= 0.5).collect();
        let p = radial_profiles(&n, &[0.0; 4], &radii).unwrap();
        for k in 0..radii.len() {
            // the interpolant's energy bias is (h/r)²; below 0.15 it exceeds 1e-2
            assert!((p.i[k] - 1.5).abs() < 1e-2, "r={} I={}", radii[k], p.i[k]);
            assert!((p.d[k] / radii[k].powi(3) / (6.0 * PI) - 1.0).abs() < 0.02);
            assert!(p.e[k] * p.e[k] <= p.g[k] * p.h[k] * (1.0 + 1e-12));
            assert!((p.e[k] / (6.0 * PI * radii[k].powi(3)) - 1.0).abs() < 1e-3);
            assert!((p.g[k] / (9.0 * PI * radii[k].powi(2)) - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn harmonic_polynomials_have_integer_frequency() {
        let mesh = disk(1, 1.0 / 48.0);
        for k in 1..=3 {
            let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 1, |_, x| {
                let (r, th) = ((x[0] * x[0] + x[1] * x[1]).sqrt(), x[1].atan2(x[0]));
                vec![vec![r.powi(k) * (k as f64 * th).cos()]]
            })
            .unwrap();
            let radii: Vec<f64> = default_radii(&mesh, &[0.0; 3], None).into_iter().filter(|&r| r >= 0.2).collect();
            let p = radial_profiles(&n, &[0.0; 3], &radii).unwrap();
            for i in &p.i {
                assert!((i - k as f64).abs() < 2e-2 * k as f64, "k={k} I={i}");
            }
        }
    }

    #[test]
    fn frequency_is_scale_invariant() {
        let mesh = disk(2, 0.05);
        let n = w3(mesh.clone());
        let radii = default_radii(&mesh, &[0.0; 4], None);
        let a = radial_profiles(&n, &[0.0; 4], &radii).unwrap();
        let b = radial_profiles(&n.scaled(-3.0), &[0.0; 4], &radii).unwrap();
        for (x, y) in a.i.iter().zip(&b.i) {
            assert!((x - y).abs() < 1e-12 * x.abs());
        }
    }

    #[test]
    fn radius_beyond_domain() {
        let mesh = disk(1, 0.1);
        let n = DiscreteQField::from_normal_coefficients(mesh, 1, |_, _| vec![vec![1.0]]).unwrap();
        assert!(matches!(radial_profiles(&n, &[0.0; 3], &[1.2]), Err(Error::RadiusBeyondDomain { .. })));
    }

    #[test]
    fn audit_of_homogeneous_field() {
        let mesh = disk(2, 1.0 / 64.0);
        let n = w3(mesh.clone());
        let radii: Vec<f64> = default_radii(&mesh, &[0.0; 4], None).into_iter().filter(|&r| r >= 0.1).collect();
        let p = radial_profiles(&n, &[0.0; 4], &radii).unwrap();
        let a = monotonicity_audit(&p).unwrap();
        // I decreases toward 1.5 through the discretization bias only
        assert!(a.lambda < 0.2);
        assert!(a.c0 < 1.0 && a.cauchy_schwarz <= 1e-12);
        assert!(a.f_derivative < 0.02 && a.height_derivative < 1.0, "{a:?}");
        let fit = decay_fit(&p).unwrap();
        assert!((fit.i0 - 1.5).abs() < 1e-2, "{fit:?}");
        let short = FrequencyProfile { valid: vec![false; p.radii.len()], ..p };
        assert!(matches!(monotonicity_audit(&short), Err(Error::TooFewRadii { .. })));
    }

    #[test]
    fn exactly_homogeneous_profile_fits_exactly() {
        let radii: Vec<f64> = (0..10).map(|k| 0.05 * RADIUS_RATIO.powi(k)).collect();
        let p = FrequencyProfile {
            pole: vec![0.0; 4],
            m: 2,
            d: radii.iter().map(|r| 6.0 * PI * r.powi(3)).collect(),
            h: radii.iter().map(|r| 4.0 * PI * r.powi(4)).collect(),
            e: radii.iter().map(|r| 6.0 * PI * r.powi(3)).collect(),
            g: radii.iter().map(|r| 9.0 * PI * r.powi(2)).collect(),
            f: radii.iter().map(|r| 4.0 * PI * r.powi(5) / 5.0).collect(),
            i: vec![1.5; 10],
            valid: vec![true; 10],
            radii,
        };
        let fit = decay_fit(&p).unwrap();
        assert!(fit.exact_constant && fit.beta.is_none());
        assert!((fit.i0 - 1.5).abs() < 1e-12 && (fit.d0 - 6.0 * PI).abs() < 1e-9 && (fit.h0 - 4.0 * PI).abs() < 1e-9);
        assert!(fit.contract_gap < 1e-12);
        let a = monotonicity_audit(&p).unwrap();
        assert_eq!(a.lambda, 0.0);
        assert!(a.d_minus_e < 1e-12);
    }

    #[test]
    fn inconsistency_only_at_collapsed_points() {
        let radii: Vec<f64> = (0..10).map(|k| 0.05 * RADIUS_RATIO.powi(k)).collect();
        let profile = |hs: &dyn Fn(f64) -> f64, i: f64| FrequencyProfile {
            pole: vec![0.0; 4],
            m: 2,
            d: radii.iter().map(|r| i * hs(*r)).collect(),
            h: radii.iter().map(|r| r * hs(*r)).collect(),
            e: vec![0.0; 10],
            g: vec![0.0; 10],
            f: vec![0.0; 10],
            i: vec![i; 10],
            valid: vec![true; 10],
            radii: radii.clone(),
        };
        // N(p) ≠ 0: H/r stays put and I0 = 0 is the right answer
        assert!(!decay_fit(&profile(&|_| 2.0, 0.0)).unwrap().inconsistent);
        // H/r decays towards the pole, yet the fitted frequency is not positive
        assert!(decay_fit(&profile(&|r| r * r, -0.1)).unwrap().inconsistent);
    }

    #[test]
    fn aitken_recovers_power_law_limit() {
        let q = RADIUS_RATIO;
        let v = [1.5 + 0.3 * 0.1f64.powi(2), 1.5 + 0.3 * (0.1 * q).powi(2), 1.5 + 0.3 * (0.1 * q * q).powi(2)];
        assert!((aitken(v) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn blow_ups_of_homogeneous_field() {
        let mesh = disk(2, 1.0 / 64.0);
        let n = w3(mesh.clone());
        let target = blow_up_domain(mesh.scene(), 1.0 / 32.0).unwrap();
        let a = blow_up_map(&n, &[0.0; 4], 0.4, BlowUpMode::L2, &target).unwrap();
        let b = blow_up_map(&n, &[0.0; 4], 0.2, BlowUpMode::L2, &target).unwrap();
        let all = Region::all(&target);
        assert!((l2_norm_sq(&a, &all).unwrap() - 1.0).abs() < 1e-10);
        assert!(l2_distance(&a, &b).unwrap() < 1e-2);
        let t = tangent_map(&n, &[0.0; 4], &[0.8, 0.4], &target, aq::TAU_COIN).unwrap();
        assert!((t.mu - 1.5).abs() < 1e-2, "{}", t.mu);
        assert!(t.eta_max < 1e-12 && t.origin_value < 1e-12);
        assert!(!t.non_convergent && t.cauchy[0] < 1e-2);
        let dn = blow_up_map(&n, &[0.0; 4], 0.4, BlowUpMode::Dirichlet, &target).unwrap();
        assert!((dirichlet_energy(&dn, &all, Flavor::Normal).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn blow_up_on_sphere_tends_to_unit_norm() {
        let sc = Scene::equatorial_sphere(2);
        let mesh = Arc::new(Mesh::ball(&sc, 1.0, 0.04).unwrap());
        let n = DiscreteQField::from_normal_coefficients(mesh, 1, |_, x| vec![vec![x[1]]]).unwrap();
        let target = blow_up_domain(&sc, 0.05).unwrap();
        let all = Region::all(&target);
        let errs: Vec<f64> = [0.4, 0.2]
            .iter()
            .map(|&r| (l2_norm_sq(&blow_up_map(&n, &sc.pole(), r, BlowUpMode::L2, &target).unwrap(), &all).unwrap() - 1.0).abs())
            .collect();
        assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
    }

    #[test]
    fn regular_point_has_linear_tangent() {
        let mesh = disk(1, 1.0 / 48.0);
        let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 2, |_, x| vec![vec![x[0] + 0.5 * x[1]]; 2]).unwrap();
        let target = blow_up_domain(mesh.scene(), 0.05).unwrap();
        let t = tangent_map(&n, &[0.0; 3], &[0.4, 0.2], &target, aq::TAU_COIN).unwrap();
        assert!((t.mu - 1.0).abs() < 1e-2, "{}", t.mu);
        let off = DiscreteQField::from_normal_coefficients(mesh, 1, |_, x| vec![vec![1.0 + x[0]]]).unwrap();
        assert!(matches!(tangent_map(&off, &[0.0; 3], &[0.4], &target, aq::TAU_COIN), Err(Error::NotCollapsed { .. })));
    }

    #[test]
    fn vanishing_field_is_refused() {
        let mesh = disk(1, 0.1);
        let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 1, |_, _| vec![vec![0.0]]).unwrap();
        let target = blow_up_domain(mesh.scene(), 0.1).unwrap();
        assert!(matches!(blow_up_map(&n, &[0.0; 3], 0.5, BlowUpMode::L2, &target), Err(Error::VanishingNorm { .. })));
    }

    #[test]
    fn strata_of_w3_and_simple_fields() {
        let mesh = disk(2, 1.0 / 32.0);
        let s = multiplicity_strata(&w3(mesh.clone()), aq::TAU_COIN).unwrap();
        let o = mesh.pole_vertex();
        assert_eq!(s.collapsed, vec![o]);
        assert_eq!(s.singular, vec![o]);
        assert!(s.isolated && s.lsc_violations.is_empty());
        let smooth = DiscreteQField::from_normal_coefficients(mesh.clone(), 3, |_, x| vec![vec![x[0], x[1] * x[1]]; 3]).unwrap();
        let s = multiplicity_strata(&smooth, aq::TAU_COIN).unwrap();
        assert!(s.sigma.iter().all(|&x| x == 1) && s.singular.is_empty());
        assert_eq!(s.collapsed.len(), mesh.num_vertices());
        let two = DiscreteQField::from_normal_coefficients(mesh, 2, |_, _| vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = multiplicity_strata(&two, aq::TAU_COIN).unwrap();
        assert!(s.sigma.iter().all(|&x| x == 2) && s.collapsed.is_empty() && s.singular.is_empty());
    }

    #[test]
    fn derivative_on_geometric_grid() {
        let x: Vec<f64> = (0..8).map(|k| 0.1 * RADIUS_RATIO.powi(k)).collect();
        let y: Vec<f64> = x.iter().map(|r| r * r).collect();
        let d = grid_derivative(&x, &y);
        for k in 1..7 {
            assert!((d[k] - 2.0 * x[k]).abs() < 1e-12);
        }
    }
}
