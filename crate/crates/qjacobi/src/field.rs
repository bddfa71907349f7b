//! Q-valued fields sampled at mesh vertices.
//!
//! Each edge stores an optimal matching between the Q-points at its ends.
//! Inside a cell the sheets are followed from vertex 0 along the cell edges
//! (anchored matching) and differentiated as affine maps.

use crate::aq::{self, QPoint};
use crate::error::{Error, Result};
use crate::linalg::{dot, pairwise_sum, project};
use crate::mesh::Mesh;
use rayon::prelude::*;
use std::sync::Arc;

const NORMAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct DiscreteQField {
    mesh: Arc<Mesh>,
    q: usize,
    d: usize,
    values: Vec<f64>,
    normal: bool,
    /// perm[e*q + l]: slot at edge end 1 matched to slot l at edge end 0.
    perms: Vec<u16>,
    stale: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Full,
    TangentM,
    Normal,
}

/// Cells of the mesh with a fraction in [0, 1] each.
#[derive(Clone, Debug)]
pub struct Region {
    pub cells: Vec<(usize, f64)>,
}

impl Region {
    pub fn all(mesh: &Mesh) -> Self {
        Self { cells: (0..mesh.num_cells()).map(|c| (c, 1.0)).collect() }
    }

    /// Cells whose centre lies within geodesic distance r of `center`.
    pub fn ball(mesh: &Mesh, center: &[f64], r: f64) -> Self {
        let s = mesh.scene();
        Self {
            cells: (0..mesh.num_cells())
                .filter(|&c| s.distance_sigma(center, &mesh.geom(c).center) < r)
                .map(|c| (c, 1.0))
                .collect(),
        }
    }
}

impl DiscreteQField {
    /// Values are `nv × Q × d`, row-major. Normal sections must have d equal to
    /// the scene dimension and every sheet in the normal fiber of its vertex.
    pub fn new(mesh: Arc<Mesh>, q: usize, d: usize, values: Vec<f64>, normal: bool) -> Result<Self> {
        let nv = mesh.num_vertices();
        if q == 0 || q > u16::MAX as usize {
            return Err(Error::InvalidPoint(format!("unsupported Q = {q}")));
        }
        if values.len() != nv * q * d {
            return Err(Error::DimensionMismatch { what: "field values vs nv*Q*d", left: values.len(), right: nv * q * d });
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPoint("non-finite field value".into()));
        }
        if normal {
            if d != mesh.d() {
                return Err(Error::DimensionMismatch { what: "normal section value dimension", left: d, right: mesh.d() });
            }
        }
        let mut f = Self { mesh, q, d, values, normal, perms: Vec::new(), stale: true };
        if normal {
            let dev = f.max_fiber_deviation();
            if dev > NORMAL_TOL {
                return Err(Error::NotNormalSection { deviation: dev });
            }
        }
        f.rematch();
        Ok(f)
    }

    pub fn from_fn<F>(mesh: Arc<Mesh>, q: usize, d: usize, normal: bool, f: F) -> Result<Self>
    where
        F: Fn(usize, &[f64]) -> QPoint,
    {
        let mut values = Vec::with_capacity(mesh.num_vertices() * q * d);
        for v in 0..mesh.num_vertices() {
            let p = f(v, mesh.point(v));
            if p.q() != q || p.d() != d {
                return Err(Error::DimensionMismatch { what: "Q-point shape from generator", left: p.q() * p.d(), right: q * d });
            }
            values.extend_from_slice(p.as_flat());
        }
        Self::new(mesh, q, d, values, normal)
    }

    /// Normal section built from coefficients in the scene normal frame.
    pub fn from_normal_coefficients<F>(mesh: Arc<Mesh>, q: usize, f: F) -> Result<Self>
    where
        F: Fn(usize, &[f64]) -> Vec<Vec<f64>>,
    {
        let d = mesh.d();
        let scene = mesh.scene().clone();
        let mut values = Vec::with_capacity(mesh.num_vertices() * q * d);
        for v in 0..mesh.num_vertices() {
            let x = mesh.point(v);
            let frame = scene.normal_frame(x);
            let coeffs = f(v, x);
            if coeffs.len() != q {
                return Err(Error::DimensionMismatch { what: "sheet count", left: coeffs.len(), right: q });
            }
            for c in coeffs {
                let mut s = vec![0.0; d];
                for (a, e) in c.iter().zip(&frame) {
                    crate::linalg::axpy(&mut s, *a, e);
                }
                values.extend(s);
            }
        }
        Self::new(mesh, q, d, values, true)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_normal(&self) -> bool {
        self.normal
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access to raw values; matchings become stale.
    pub fn values_mut(&mut self) -> &mut [f64] {
        self.stale = true;
        &mut self.values
    }

    pub fn is_stale(&self) -> bool {
        self.stale
    }

    pub fn sheet(&self, v: usize, l: usize) -> &[f64] {
        let o = (v * self.q + l) * self.d;
        &self.values[o..o + self.d]
    }

    pub fn value(&self, v: usize) -> QPoint {
        let o = v * self.q * self.d;
        QPoint::new(self.q, self.d, self.values[o..o + self.q * self.d].to_vec()).expect("valid shape")
    }

    pub fn set_value(&mut self, v: usize, p: &QPoint) -> Result<()> {
        if p.q() != self.q || p.d() != self.d {
            return Err(Error::DimensionMismatch { what: "Q-point shape", left: p.q() * p.d(), right: self.q * self.d });
        }
        let o = v * self.q * self.d;
        self.values[o..o + self.q * self.d].copy_from_slice(p.as_flat());
        self.stale = true;
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut f = self.clone();
        f.values.iter_mut().for_each(|x| *x *= s);
        f
    }

    pub fn max_fiber_deviation(&self) -> f64 {
        let scene = self.mesh.scene();
        (0..self.mesh.num_vertices())
            .map(|v| {
                let x = self.mesh.point(v);
                (0..self.q).map(|l| scene.fiber_deviation(x, self.sheet(v, l))).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn max_sheet_norm(&self) -> f64 {
        self.values.chunks_exact(self.d).map(crate::linalg::norm).fold(0.0, f64::max)
    }

    /// Recomputes every edge matching.
    pub fn rematch(&mut self) {
        let q = self.q;
        let edges = self.mesh.edges();
        if q == 1 {
            self.perms = vec![0; edges.len()];
        } else {
            let perms: Vec<Vec<u16>> = edges
                .par_iter()
                .map(|e| {
                    let (p, _) = aq::optimal_matching(&self.value(e[0]), &self.value(e[1])).expect("same shape");
                    p.into_iter().map(|x| x as u16).collect()
                })
                .collect();
            self.perms = perms.concat();
        }
        self.stale = false;
    }

    /// Replaces the matching on edge e by l ↦ perm[tau[l]], relabelling the
    /// sheets that continue across it.
    pub(crate) fn twist_edge(&mut self, e: usize, tau: &[usize]) {
        let q = self.q;
        let old: Vec<u16> = self.perms[e * q..(e + 1) * q].to_vec();
        for l in 0..q {
            self.perms[e * q + l] = old[tau[l]];
        }
    }

    /// Re-verifies that each stored matching realizes the matching distance.
    pub fn check_matchings(&self) -> Result<f64> {
        if self.stale {
            return Err(Error::StaleMatchings);
        }
        let mut worst: f64 = 0.0;
        for (e, ends) in self.mesh.edges().iter().enumerate() {
            let a = self.value(ends[0]);
            let b = self.value(ends[1]);
            let opt = aq::g_distance(&a, &b)?.powi(2);
            let used: f64 = (0..self.q).map(|l| aq::dist_sq(a.sheet(l), b.sheet(self.perms[e * self.q + l] as usize))).sum();
            worst = worst.max(used - opt);
        }
        Ok(worst)
    }

    /// Matching from `a` to neighbour `b`: slot l at a ↔ slot perm[l] at b.
    pub fn edge_perm(&self, a: usize, b: usize) -> Vec<usize> {
        let e = self.mesh.edge_id(a, b).expect("vertices are adjacent");
        let p: Vec<usize> = self.perms[e * self.q..(e + 1) * self.q].iter().map(|x| *x as usize).collect();
        if self.mesh.edges()[e][0] == a {
            p
        } else {
            invert(&p)
        }
    }

    /// Slots of the matched sheets at each cell vertex: `slots[j][l]`.
    pub fn cell_slots(&self, c: usize) -> Vec<Vec<usize>> {
        let cell = self.mesh.cell(c);
        let mut slots = vec![(0..self.q).collect::<Vec<_>>()];
        for &v in &cell[1..] {
            slots.push(self.edge_perm(cell[0], v));
        }
        slots
    }

    /// Whether the edge matchings around a cell compose consistently.
    pub fn cell_consistent(&self, c: usize) -> bool {
        if self.q == 1 {
            return true;
        }
        let cell = self.mesh.cell(c);
        let slots = self.cell_slots(c);
        for j in 1..cell.len() {
            for k in j + 1..cell.len() {
                let p = self.edge_perm(cell[j], cell[k]);
                for l in 0..self.q {
                    if p[slots[j][l]] != slots[k][l] {
                        // ties between coincident sheets are harmless
                        let a = self.sheet(cell[k], p[slots[j][l]]);
                        let b = self.sheet(cell[k], slots[k][l]);
                        if aq::dist_sq(a, b).sqrt() > aq::TAU_COIN {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    pub fn inconsistent_cells(&self) -> Vec<usize> {
        (0..self.mesh.num_cells()).filter(|&c| !self.cell_consistent(c)).collect()
    }

    /// Gradient of matched sheet l in cell c: d×m row-major, column i is D_{ξ_i}.
    pub fn sheet_gradient(&self, c: usize, slots: &[Vec<usize>], l: usize) -> Vec<f64> {
        let m = self.mesh.m();
        let g = self.mesh.geom(c);
        let cell = self.mesh.cell(c);
        let mut grad = vec![0.0; self.d * m];
        for (j, &v) in cell.iter().enumerate() {
            let s = self.sheet(v, slots[j][l]);
            let gb = &g.grad_bary[j * m..(j + 1) * m];
            for a in 0..self.d {
                for i in 0..m {
                    grad[a * m + i] += s[a] * gb[i];
                }
            }
        }
        grad
    }

    /// Centroid value of matched sheet l.
    pub fn sheet_center(&self, c: usize, slots: &[Vec<usize>], l: usize) -> Vec<f64> {
        let cell = self.mesh.cell(c);
        let mut out = vec![0.0; self.d];
        let w = 1.0 / cell.len() as f64;
        for (j, &v) in cell.iter().enumerate() {
            crate::linalg::axpy(&mut out, w, self.sheet(v, slots[j][l]));
        }
        out
    }

    /// Sheets interpolated at barycentric coordinates inside cell c.
    pub fn interpolate(&self, c: usize, lam: &[f64]) -> QPoint {
        let slots = self.cell_slots(c);
        let cell = self.mesh.cell(c);
        let mut out = QPoint::zero(self.q, self.d);
        for l in 0..self.q {
            let o = out.sheet_mut(l);
            for (j, &v) in cell.iter().enumerate() {
                crate::linalg::axpy(o, lam[j], self.sheet(v, slots[j][l]));
            }
        }
        out
    }

    /// Value at an ambient point of Σ.
    pub fn eval(&self, x: &[f64]) -> Result<QPoint> {
        let (c, lam) = self.mesh.locate(x)?;
        Ok(self.interpolate(c, &lam))
    }

    fn ensure_fresh(&self) -> Result<()> {
        if self.stale {
            Err(Error::StaleMatchings)
        } else {
            Ok(())
        }
    }

    fn ensure_normal(&self) -> Result<()> {
        if !self.normal {
            return Err(Error::NotNormalSection { deviation: f64::NAN });
        }
        Ok(())
    }

    /// Vertex weights of the lumped mass: each cell shares its volume equally.
    pub fn lumped_weights(mesh: &Mesh) -> Vec<f64> {
        let mut w = vec![0.0; mesh.num_vertices()];
        for c in 0..mesh.num_cells() {
            let share = mesh.geom(c).weight / (mesh.m() + 1) as f64;
            for &v in mesh.cell(c) {
                w[v] += share;
            }
        }
        w
    }
}

pub(crate) fn invert(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &j) in p.iter().enumerate() {
        inv[j] = i;
    }
    inv
}

/// Frobenius norm squared of the columns of a d×m gradient after projecting
/// each column onto span(basis).
fn projected_norm_sq(grad: &[f64], d: usize, m: usize, basis: Option<&[Vec<f64>]>) -> f64 {
    match basis {
        None => grad.iter().map(|x| x * x).sum(),
        Some(b) => {
            let mut s = 0.0;
            for i in 0..m {
                let col: Vec<f64> = (0..d).map(|a| grad[a * m + i]).collect();
                let p = project(&col, b);
                s += dot(&p, &p);
            }
            s
        }
    }
}

pub(crate) fn column(grad: &[f64], d: usize, m: usize, i: usize) -> Vec<f64> {
    (0..d).map(|a| grad[a * m + i]).collect()
}

pub fn dirichlet_energy(u: &DiscreteQField, region: &Region, flavor: Flavor) -> Result<f64> {
    u.ensure_fresh()?;
    if flavor != Flavor::Full {
        u.ensure_normal()?;
    }
    let mesh = &u.mesh;
    let scene = mesh.scene();
    let (d, m) = (u.d, mesh.m());
    let parts: Vec<f64> = region
        .cells
        .par_iter()
        .map(|&(c, frac)| {
            let g = mesh.geom(c);
            let basis = match flavor {
                Flavor::Full => None,
                Flavor::TangentM => Some(scene.tangent_m_frame(&g.center)),
                Flavor::Normal => Some(scene.normal_frame(&g.center)),
            };
            let slots = u.cell_slots(c);
            let s: f64 = (0..u.q)
                .map(|l| projected_norm_sq(&u.sheet_gradient(c, &slots, l), d, m, basis.as_deref()))
                .sum();
            s * g.weight * frac
        })
        .collect();
    Ok(pairwise_sum(&parts))
}

/// Both evaluations of the Jacobi functional and their ingredients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct JacReport {
    /// Dir^⊥ − ∫|A·N|² − ∫Ri(N,N).
    pub jac: f64,
    /// Dir − B.
    pub jac_perturbative: f64,
    pub dir_normal: f64,
    pub dir_full: f64,
    pub a_term: f64,
    pub ricci_term: f64,
    pub abar_term: f64,
    pub b_value: f64,
    pub l2_sq: f64,
    /// |B| / ‖N‖², the measured perturbation constant.
    pub c0: f64,
    /// |jac − jac_perturbative| / max(1, |jac|).
    pub identity_gap: f64,
}

pub fn jac_energy(n: &DiscreteQField, region: &Region) -> Result<JacReport> {
    n.ensure_fresh()?;
    n.ensure_normal()?;
    let mesh = &n.mesh;
    let scene = mesh.scene();
    let (d, m) = (n.d, mesh.m());
    let parts: Vec<[f64; 6]> = region
        .cells
        .par_iter()
        .map(|&(c, frac)| {
            let g = mesh.geom(c);
            let w = g.weight * frac;
            let nf = scene.normal_frame(&g.center);
            let slots = n.cell_slots(c);
            let mut acc = [0.0; 6];
            for l in 0..n.q {
                let grad = n.sheet_gradient(c, &slots, l);
                let nc = project(&n.sheet_center(c, &slots, l), &nf);
                let (a, row) = scene.second_form_contract_unchecked(&g.center, &nc);
                acc[0] += w * projected_norm_sq(&grad, d, m, Some(&nf));
                acc[1] += w * projected_norm_sq(&grad, d, m, None);
                acc[2] += w * a;
                acc[3] += w * scene.partial_ricci_unchecked(&g.center, &nc, &nc);
                acc[4] += w * row.iter().sum::<f64>();
                acc[5] += w * dot(&nc, &nc);
            }
            acc
        })
        .collect();
    let sum = |k: usize| pairwise_sum(&parts.iter().map(|p| p[k]).collect::<Vec<_>>());
    let (dir_normal, dir_full, a_term, ricci_term, abar_term, l2_sq) = (sum(0), sum(1), sum(2), sum(3), sum(4), sum(5));
    let b_value = abar_term + 2.0 * a_term + ricci_term;
    let jac = dir_normal - a_term - ricci_term;
    let jac_perturbative = dir_full - b_value;
    Ok(JacReport {
        jac,
        jac_perturbative,
        dir_normal,
        dir_full,
        a_term,
        ricci_term,
        abar_term,
        b_value,
        l2_sq,
        c0: if l2_sq > 0.0 { b_value.abs() / l2_sq } else { 0.0 },
        identity_gap: (jac - jac_perturbative).abs() / jac.abs().max(1.0),
    })
}

/// ‖N‖²_{L²} by the same centroid rule as the energies.
pub fn l2_norm_sq(n: &DiscreteQField, region: &Region) -> Result<f64> {
    n.ensure_fresh()?;
    let parts: Vec<f64> = region
        .cells
        .par_iter()
        .map(|&(c, frac)| {
            let slots = n.cell_slots(c);
            let s: f64 = (0..n.q).map(|l| {
                let v = n.sheet_center(c, &slots, l);
                dot(&v, &v)
            }).sum();
            s * n.mesh.geom(c).weight * frac
        })
        .collect();
    Ok(pairwise_sum(&parts))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MassReport {
    pub mass: f64,
    /// Cells where some sheet map reverses orientation, ⟨DF ξ, ξ⟩ frame determinant <= 0.
    pub reversed_cells: usize,
}

/// Mass of the push-forward of the region under x ↦ exp_x(t N^l(x)).
pub fn pushforward_mass(n: &DiscreteQField, t: f64) -> Result<f64> {
    Ok(pushforward_mass_report(n, &Region::all(&n.mesh), t)?.mass)
}

pub fn pushforward_mass_report(n: &DiscreteQField, region: &Region, t: f64) -> Result<MassReport> {
    n.ensure_fresh()?;
    n.ensure_normal()?;
    let mesh = &n.mesh;
    let scene = mesh.scene();
    let reach = t.abs() * n.max_sheet_norm();
    if reach > scene.injectivity_bound() {
        return Err(Error::InjectivityExceeded { radius: reach, bound: scene.injectivity_bound() });
    }
    let (d, m) = (n.d, mesh.m());
    let parts: Vec<(f64, bool)> = region
        .cells
        .par_iter()
        .map(|&(c, frac)| {
            let g = mesh.geom(c);
            let nf = scene.normal_frame(&g.center);
            let slots = n.cell_slots(c);
            let mut jsum = 0.0;
            let mut reversed = false;
            for l in 0..n.q {
                let grad = n.sheet_gradient(c, &slots, l);
                let w: Vec<f64> = project(&n.sheet_center(c, &slots, l), &nf).iter().map(|x| x * t).collect();
                let cols: Vec<Vec<f64>> = (0..m)
                    .map(|i| {
                        let dw: Vec<f64> = column(&grad, d, m, i).iter().map(|x| x * t).collect();
                        scene.exp_m_differential(&g.center, &w, &g.frame[i], &dw)
                    })
                    .collect();
                let mut gram = vec![0.0; m * m];
                let mut orient = vec![0.0; m * m];
                for a in 0..m {
                    for b in 0..m {
                        gram[a * m + b] = dot(&cols[a], &cols[b]);
                        orient[a * m + b] = dot(&g.frame[a], &cols[b]);
                    }
                }
                jsum += crate::linalg::det(&gram, m).max(0.0).sqrt();
                if crate::linalg::det(&orient, m) <= 0.0 {
                    reversed = true;
                }
            }
            (jsum * g.weight * frac, reversed)
        })
        .collect();
    let mass = pairwise_sum(&parts.iter().map(|p| p.0).collect::<Vec<_>>());
    Ok(MassReport { mass, reversed_cells: parts.iter().filter(|p| p.1).count() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub delta1: f64,
    pub delta2: f64,
    pub t_step: f64,
    /// Five-point estimates at t_step, before extrapolation.
    pub delta1_raw: f64,
    pub delta2_raw: f64,
}

/// Finite-difference first and second variations of the push-forward mass at 0.
pub fn fd_variations(n: &DiscreteQField, t_step: Option<f64>) -> Result<FdReport> {
    let maxn = n.max_sheet_norm();
    let t = match t_step {
        Some(t) => t,
        None if maxn > 0.0 => 1e-2 / maxn,
        None => 1e-2,
    };
    if !(t > 0.0) {
        return Err(Error::InvalidParam(format!("t_step must be positive (got {t})")));
    }
    let bound = n.mesh.scene().injectivity_bound();
    if 2.0 * t * maxn > bound {
        return Err(Error::InjectivityExceeded { radius: 2.0 * t * maxn, bound });
    }
    let region = Region::all(&n.mesh);
    let mu = |s: f64| -> Result<f64> { Ok(pushforward_mass_report(n, &region, s)?.mass) };
    let m0 = mu(0.0)?;
    let stencil = |h: f64| -> Result<(f64, f64)> {
        let (p1, m1, p2, m2) = (mu(h)?, mu(-h)?, mu(2.0 * h)?, mu(-2.0 * h)?);
        let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
        let d2 = (-p2 + 16.0 * p1 - 30.0 * m0 + 16.0 * m1 - m2) / (12.0 * h * h);
        Ok((d1, d2))
    };
    let (a1, a2) = stencil(t)?;
    let (b1, b2) = stencil(t / 2.0)?;
    Ok(FdReport {
        delta1: (16.0 * b1 - a1) / 15.0,
        delta2: (16.0 * b2 - a2) / 15.0,
        t_step: t,
        delta1_raw: a1,
        delta2_raw: a2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Scene;
    use std::f64::consts::PI;

    fn flat(h: f64) -> Arc<Mesh> {
        Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, h).unwrap())
    }

    /// Σ_{w²=z} ⟦w³⟧ with values in the normal plane e_2, e_3.
    pub(crate) fn w3(mesh: Arc<Mesh>) -> DiscreteQField {
        DiscreteQField::from_normal_coefficients(mesh, 2, |_, x| {
            let (r, th) = ((x[0] * x[0] + x[1] * x[1]).sqrt(), x[1].atan2(x[0]));
            let a = r.powf(1.5);
            let (c, s) = ((1.5 * th).cos(), (1.5 * th).sin());
            vec![vec![a * c, a * s], vec![-a * c, -a * s]]
        })
        .unwrap()
    }

    #[test]
    fn constant_field_has_no_energy() {
        let mesh = flat(0.1);
        let f = DiscreteQField::from_normal_coefficients(mesh.clone(), 3, |_, _| vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        for fl in [Flavor::Full, Flavor::TangentM, Flavor::Normal] {
            assert!(dirichlet_energy(&f, &Region::all(&mesh), fl).unwrap().abs() < 1e-20);
        }
    }

    #[test]
    fn affine_map_on_square_energy() {
        // the unit square as two triangles inside the flat chart
        let mesh = flat(0.05);
        let f = DiscreteQField::from_fn(mesh.clone(), 1, 4, false, |_, x| {
            QPoint::new(1, 4, vec![x[0], 2.0 * x[1], 0.0, 0.0]).unwrap()
        })
        .unwrap();
        let e = dirichlet_energy(&f, &Region::all(&mesh), Flavor::Full).unwrap();
        // |L|² = 5 times the mesh area, exact for affine data
        assert!((e - 5.0 * mesh.total_volume()).abs() < 1e-10);
    }

    #[test]
    fn w3_energy_is_six_pi() {
        let mut errs = Vec::new();
        for &h in &[1.0 / 16.0, 1.0 / 32.0] {
            let f = w3(flat(h));
            let e = dirichlet_energy(&f, &Region::all(f.mesh()), Flavor::Full).unwrap();
            errs.push((e - 6.0 * PI).abs());
        }
        assert!(errs[1] < 0.01 * 6.0 * PI, "{errs:?}");
        assert!(errs[1] < errs[0]);
    }

    #[test]
    fn energy_ignores_storage_order() {
        let f = w3(flat(0.1));
        let mut g = f.clone();
        for v in 0..f.mesh().num_vertices() {
            let p = f.value(v).permuted(&[1, 0]);
            g.set_value(v, &p).unwrap();
        }
        assert!(dirichlet_energy(&g, &Region::all(f.mesh()), Flavor::Full).is_err());
        g.rematch();
        let a = dirichlet_energy(&f, &Region::all(f.mesh()), Flavor::Full).unwrap();
        let b = dirichlet_energy(&g, &Region::all(f.mesh()), Flavor::Full).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn matchings_are_optimal() {
        let f = w3(flat(0.1));
        assert!(f.check_matchings().unwrap() <= 1e-12);
    }

    #[test]
    fn jac_of_unit_normal_on_sphere() {
        let s = Scene::equatorial_sphere(2);
        let mesh = Arc::new(Mesh::closed(&s, 0.1).unwrap());
        let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 1, |_, _| vec![vec![1.0]]).unwrap();
        let r = jac_energy(&n, &Region::all(&mesh)).unwrap();
        assert!((r.jac + 8.0 * PI).abs() < 1e-8, "{r:?}");
        assert!(r.identity_gap < 1e-10);
        assert!((r.c0 - 2.0).abs() < 1e-10);
    }

    #[test]
    fn flat_jac_equals_dirichlet() {
        let f = w3(flat(0.1));
        let r = jac_energy(&f, &Region::all(f.mesh())).unwrap();
        let e = dirichlet_energy(&f, &Region::all(f.mesh()), Flavor::Full).unwrap();
        assert_eq!(r.jac, e);
        assert_eq!(r.b_value, 0.0);
    }

    #[test]
    fn pushforward_mass_on_sphere() {
        let s = Scene::equatorial_sphere(2);
        let mesh = Arc::new(Mesh::closed(&s, 0.1).unwrap());
        let one = DiscreteQField::from_normal_coefficients(mesh.clone(), 1, |_, _| vec![vec![1.0]]).unwrap();
        let two = DiscreteQField::from_normal_coefficients(mesh.clone(), 2, |_, _| vec![vec![1.0], vec![-1.0]]).unwrap();
        for &t in &[0.0, 0.1, -0.2, 0.3] {
            let a = pushforward_mass(&one, t).unwrap();
            assert!((a - t.cos().powi(2) * 4.0 * PI).abs() < 1e-9);
            let b = pushforward_mass(&two, t).unwrap();
            assert!((b - 2.0 * t.cos().powi(2) * 4.0 * PI).abs() < 1e-9);
        }
        assert!(pushforward_mass(&one, 4.0).is_err());
        let fd = fd_variations(&two, None).unwrap();
        assert!(fd.delta1.abs() < 1e-8);
        assert!((fd.delta2 + 16.0 * PI).abs() < 1e-6 * 16.0 * PI, "{fd:?}");
    }

    #[test]
    fn mass_at_zero_is_area() {
        let s = Scene::equatorial_sphere(2);
        let mesh = Arc::new(Mesh::ball(&s, 1.0, 0.1).unwrap());
        let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 2, |_, x| vec![vec![x[1]], vec![x[2] * x[0]]]).unwrap();
        let a = pushforward_mass(&n, 0.0).unwrap();
        assert!((a - 2.0 * mesh.total_volume()).abs() < 1e-12);
    }

    #[test]
    fn second_variation_matches_jac_for_smooth_field() {
        let s = Scene::equatorial_sphere(2);
        let mesh = Arc::new(Mesh::closed(&s, 0.1).unwrap());
        let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 1, |_, x| vec![vec![x[0] * x[1] + 0.3 * x[2]]]).unwrap();
        let fd = fd_variations(&n, None).unwrap();
        let j = jac_energy(&n, &Region::all(&mesh)).unwrap().jac;
        assert!((fd.delta2 - j).abs() < 1e-6 * j.abs().max(1.0), "{} {}", fd.delta2, j);
    }

    #[test]
    fn non_normal_rejected() {
        let s = Scene::equatorial_sphere(2);
        let mesh = Arc::new(Mesh::ball(&s, 1.0, 0.2).unwrap());
        let r = DiscreteQField::from_fn(mesh, 1, 4, true, |_, x| QPoint::new(1, 4, x.to_vec()).unwrap());
        assert!(matches!(r, Err(Error::NotNormalSection { .. })));
    }
}
