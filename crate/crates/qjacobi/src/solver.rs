//! Minimization of the discrete Dirichlet and Jacobi energies with a
//! prescribed boundary trace.
//!
//! For fixed matchings the energy is a quadratic form in the sheet values at
//! the storage slots, so each step solves one sparse SPD system. Steps
//! alternate with re-matching; annealed relabelling across random cuts lets
//! the monodromy change. Restarts differ in their initial interior values.

use crate::aq::{self, QPoint};
use crate::error::{Error, Result};
use crate::field::{dirichlet_energy, jac_energy, l2_norm_sq, DiscreteQField, Flavor, Region};
use crate::harmonic;
use crate::linalg::{dot, pairwise_sum};
use crate::mesh::Mesh;
use crate::sparse::{cg, gauss_seidel, SymMatrix};
use crate::variation::{variation_residuals, VariationTest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepPolicy {
    /// One conjugate-gradient solve of the whole fixed-matching system.
    Global,
    /// Symmetric Gauss–Seidel: exact single-value updates, vertex by vertex.
    VertexSweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealSchedule {
    /// Relabelling proposals per restart.
    pub proposals: usize,
    /// Initial temperature as a fraction of the energy.
    pub t0: f64,
    /// Geometric cooling factor per proposal.
    pub cooling: f64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { proposals: 12, t0: 0.05, cooling: 0.7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Solve/re-match alternations per descent.
    pub max_iters: usize,
    /// Relative energy decrease below which a descent stops.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub anneal: AnnealSchedule,
    pub step: StepPolicy,
    /// Gauss–Seidel sweeps per step under `VertexSweep`.
    pub sweeps: usize,
    /// Start restart 0 from the rolled harmonic extension when the boundary allows it.
    pub warm_start: bool,
    pub linear_tol: f64,
    pub linear_max_iter: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            max_iters: 25,
            tol: 1e-7,
            restarts: 8,
            seed: 0,
            anneal: AnnealSchedule::default(),
            step: StepPolicy::Global,
            sweeps: 200,
            warm_start: true,
            linear_tol: 1e-11,
            linear_max_iter: 20_000,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParam(what.to_string()));
        if !(self.tol > 0.0) || !(self.linear_tol > 0.0) {
            return bad("solver tolerances must be positive");
        }
        if self.max_iters == 0 || self.linear_max_iter == 0 {
            return bad("iteration budgets must be positive");
        }
        if self.restarts == 0 {
            return bad("at least one restart is needed");
        }
        if !(self.anneal.t0 >= 0.0) || !(self.anneal.cooling > 0.0 && self.anneal.cooling <= 1.0) {
            return bad("annealing needs t0 >= 0 and cooling in (0, 1]");
        }
        if self.step == StepPolicy::VertexSweep && self.sweeps == 0 {
            return bad("vertex sweeps need sweeps > 0");
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub field: DiscreteQField,
    pub energy: f64,
    /// Best energy after each accepted step of the winning restart.
    pub trace: Vec<f64>,
    pub restart_energies: Vec<f64>,
    pub best_restart: usize,
    pub accepted_swaps: usize,
    pub converged: bool,
    pub warning: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Dirichlet,
    Jacobi,
}

/// Boundary values at `mesh.boundary_vertices()`, in that order.
pub fn boundary_trace<F>(mesh: &Mesh, f: F) -> Vec<QPoint>
where
    F: Fn(&[f64]) -> QPoint,
{
    mesh.boundary_vertices().iter().map(|&v| f(mesh.point(v))).collect()
}

/// Unknowns are coefficients of each (vertex, slot) value in a per-vertex
/// basis: the standard basis of R^d for Dirichlet problems, the normal frame
/// for Jacobi problems. Dirichlet problems decouple by coordinate, so their
/// matrix acts on one coefficient and is reused for every coordinate.
struct Problem {
    kind: Kind,
    mesh: Arc<Mesh>,
    q: usize,
    d: usize,
    /// Coefficients per node: block × columns.
    block: usize,
    cols: usize,
    basis: Vec<Vec<Vec<f64>>>,
    fixed: Vec<bool>,
    free_pos: Vec<usize>,
    n_free: usize,
}

const NOT_FREE: usize = usize::MAX;

impl Problem {
    fn new(kind: Kind, mesh: Arc<Mesh>, q: usize, d: usize, fixed: Vec<bool>) -> Self {
        let nv = mesh.num_vertices();
        let scene = mesh.scene().clone();
        let (block, cols, basis) = match kind {
            Kind::Dirichlet => (1, d, Vec::new()),
            Kind::Jacobi => {
                let basis: Vec<Vec<Vec<f64>>> = (0..nv).map(|v| scene.normal_frame(mesh.point(v))).collect();
                (basis[0].len(), 1, basis)
            }
        };
        let mut free_pos = vec![NOT_FREE; nv * q];
        let mut n_free = 0;
        for v in 0..nv {
            if !fixed[v] {
                for s in 0..q {
                    free_pos[v * q + s] = n_free;
                    n_free += 1;
                }
            }
        }
        Self { kind, mesh, q, d, block, cols, basis, fixed, free_pos, n_free }
    }

    fn p(&self) -> usize {
        self.block * self.cols
    }

    fn coefficients(&self, f: &DiscreteQField) -> Vec<f64> {
        let nv = self.mesh.num_vertices();
        let mut c = Vec::with_capacity(nv * self.q * self.p());
        for v in 0..nv {
            for s in 0..self.q {
                let x = f.sheet(v, s);
                match self.kind {
                    Kind::Dirichlet => c.extend_from_slice(x),
                    Kind::Jacobi => c.extend(self.basis[v].iter().map(|e| dot(x, e))),
                }
            }
        }
        c
    }

    fn values(&self, c: &[f64]) -> Vec<f64> {
        match self.kind {
            Kind::Dirichlet => c.to_vec(),
            Kind::Jacobi => {
                let (q, d, p) = (self.q, self.d, self.p());
                let mut out = vec![0.0; self.mesh.num_vertices() * q * d];
                for v in 0..self.mesh.num_vertices() {
                    for s in 0..q {
                        let o = &mut out[(v * q + s) * d..(v * q + s + 1) * d];
                        for (b, e) in self.basis[v].iter().enumerate() {
                            crate::linalg::axpy(o, c[(v * q + s) * p + b], e);
                        }
                    }
                }
                out
            }
        }
    }

    /// Local matrices per cell over (vertex j, block index β), row-major.
    /// `mass` selects the centroid mass form instead of the energy.
    fn local_matrix(&self, c: usize, mass: bool) -> Vec<f64> {
        let mesh = &self.mesh;
        let scene = mesh.scene();
        let m = mesh.m();
        let g = mesh.geom(c);
        let cell = mesh.cell(c);
        let nl = m + 1;
        let bk = self.block;
        let n = nl * bk;
        let mut gg = vec![0.0; nl * nl];
        for j in 0..nl {
            for jj in 0..nl {
                gg[j * nl + jj] = (0..m).map(|i| g.grad_bary[j * m + i] * g.grad_bary[jj * m + i]).sum();
            }
        }
        let cen = 1.0 / (nl * nl) as f64;
        let mut out = vec![0.0; n * n];
        match self.kind {
            Kind::Dirichlet => {
                for j in 0..nl {
                    for jj in 0..nl {
                        out[j * n + jj] = g.weight * if mass { cen } else { gg[j * nl + jj] };
                    }
                }
            }
            Kind::Jacobi => {
                let nf = scene.normal_frame(&g.center);
                let k = nf.len();
                // α[j][β]: basis vector β at vertex j in the centre normal frame
                let alpha: Vec<Vec<Vec<f64>>> = cell
                    .iter()
                    .map(|&v| self.basis[v].iter().map(|e| nf.iter().map(|f| dot(e, f)).collect()).collect())
                    .collect();
                let mut curv = vec![0.0; k * k];
                if !mass {
                    let a = |u: &[f64]| scene.second_form_contract_unchecked(&g.center, u).0;
                    for x in 0..k {
                        for y in 0..k {
                            let sum: Vec<f64> = nf[x].iter().zip(&nf[y]).map(|(p, q)| p + q).collect();
                            let apair = if x == y { a(&nf[x]) } else { 0.5 * (a(&sum) - a(&nf[x]) - a(&nf[y])) };
                            curv[x * k + y] = apair + scene.partial_ricci_unchecked(&g.center, &nf[x], &nf[y]);
                        }
                    }
                }
                for j in 0..nl {
                    for b in 0..bk {
                        for jj in 0..nl {
                            for bb in 0..bk {
                                let (u, w) = (&alpha[j][b], &alpha[jj][bb]);
                                let ip = dot(u, w);
                                let val = if mass {
                                    cen * ip
                                } else {
                                    let mut bq = 0.0;
                                    for x in 0..k {
                                        for y in 0..k {
                                            bq += u[x] * curv[x * k + y] * w[y];
                                        }
                                    }
                                    gg[j * nl + jj] * ip - cen * bq
                                };
                                out[(j * bk + b) * n + jj * bk + bb] = g.weight * val;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Matrix on the free coefficients for the field's current matchings,
    /// plus `shift` times the mass form, and the right-hand side per column.
    fn assemble(&self, f: &DiscreteQField, coeffs: &[f64], shift: f64) -> (SymMatrix, Vec<Vec<f64>>) {
        let mesh = &self.mesh;
        let (q, bk, cols, p) = (self.q, self.block, self.cols, self.p());
        let nl = mesh.m() + 1;
        let n = nl * bk;
        let locals: Vec<(Vec<f64>, Vec<Vec<usize>>)> = (0..mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let mut l = self.local_matrix(c, false);
                if shift != 0.0 {
                    let mm = self.local_matrix(c, true);
                    l.iter_mut().zip(&mm).for_each(|(a, b)| *a += shift * b);
                }
                (l, f.cell_slots(c))
            })
            .collect();
        let size = self.n_free * bk;
        let mut trip = Vec::with_capacity(mesh.num_cells() * q * n * n);
        let mut rhs = vec![vec![0.0; size]; cols];
        for (c, (l, slots)) in locals.iter().enumerate() {
            let cell = mesh.cell(c);
            for sheet in 0..q {
                let nodes: Vec<usize> = (0..nl).map(|j| cell[j] * q + slots[j][sheet]).collect();
                for j in 0..nl {
                    let fj = self.free_pos[nodes[j]];
                    if fj == NOT_FREE {
                        continue;
                    }
                    for b in 0..bk {
                        let row = fj * bk + b;
                        for jj in 0..nl {
                            let fjj = self.free_pos[nodes[jj]];
                            for bb in 0..bk {
                                let v = l[(j * bk + b) * n + jj * bk + bb];
                                if v == 0.0 {
                                    continue;
                                }
                                if fjj != NOT_FREE {
                                    trip.push((row, fjj * bk + bb, v));
                                } else {
                                    for (col, r) in rhs.iter_mut().enumerate() {
                                        r[row] -= v * coeffs[nodes[jj] * p + bb * cols + col];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        (SymMatrix::from_triplets(size, &trip), rhs)
    }

    fn free_column(&self, coeffs: &[f64], col: usize) -> Vec<f64> {
        let (bk, cols, p) = (self.block, self.cols, self.p());
        let mut x = vec![0.0; self.n_free * bk];
        for (node, &fp) in self.free_pos.iter().enumerate() {
            if fp != NOT_FREE {
                for b in 0..bk {
                    x[fp * bk + b] = coeffs[node * p + b * cols + col];
                }
            }
        }
        x
    }

    fn scatter_column(&self, coeffs: &mut [f64], x: &[f64], col: usize) {
        let (bk, cols, p) = (self.block, self.cols, self.p());
        for (node, &fp) in self.free_pos.iter().enumerate() {
            if fp != NOT_FREE {
                for b in 0..bk {
                    coeffs[node * p + b * cols + col] = x[fp * bk + b];
                }
            }
        }
    }

    /// Exact minimizer for the field's current matchings.
    fn step(&self, f: &DiscreteQField, cfg: &SolveConfig) -> Result<Vec<f64>> {
        let mut coeffs = self.coefficients(f);
        let (mat, rhs) = self.assemble(f, &coeffs, 0.0);
        for (col, b) in rhs.iter().enumerate() {
            let mut x = self.free_column(&coeffs, col);
            if b.iter().all(|v| *v == 0.0) && x.iter().all(|v| *v == 0.0) {
                continue;
            }
            match cfg.step {
                StepPolicy::Global => {
                    cg(&mat, b, &mut x, cfg.linear_tol, cfg.linear_max_iter)?;
                }
                StepPolicy::VertexSweep => gauss_seidel(&mat, b, &mut x, cfg.sweeps),
            }
            self.scatter_column(&mut coeffs, &x, col);
        }
        Ok(self.values(&coeffs))
    }

    fn energy(&self, f: &DiscreteQField) -> Result<f64> {
        let all = Region::all(&self.mesh);
        match self.kind {
            Kind::Dirichlet => dirichlet_energy(f, &all, Flavor::Full),
            Kind::Jacobi => Ok(jac_energy(f, &all)?.jac),
        }
    }

    fn with_values(&self, f: &DiscreteQField, values: Vec<f64>) -> DiscreteQField {
        let mut g = f.clone();
        g.values_mut().copy_from_slice(&values);
        g.rematch();
        g
    }
}

const BACKTRACK: usize = 6;
/// Descent budget after a relabelling proposal.
const ANNEAL_ITERS: usize = 8;

struct Descent {
    field: DiscreteQField,
    energy: f64,
    trace: Vec<f64>,
    converged: bool,
}

/// Solve / re-match until the energy stops decreasing.
fn descend(pb: &Problem, start: DiscreteQField, cfg: &SolveConfig, max_iters: usize) -> Result<Descent> {
    let mut field = start;
    let mut energy = pb.energy(&field)?;
    let mut trace = vec![energy];
    let mut converged = false;
    for _ in 0..max_iters {
        let vals = pb.step(&field, cfg)?;
        // re-matching can raise the energy of the full step; back off toward
        // the current field until it does not
        let mut t = 1.0;
        let mut found = None;
        for _ in 0..BACKTRACK {
            let mix: Vec<f64> = field.values().iter().zip(&vals).map(|(a, b)| a + t * (b - a)).collect();
            let cand = pb.with_values(&field, mix);
            let e = pb.energy(&cand)?;
            if e <= energy {
                found = Some((cand, e));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, e)) = found else {
            converged = true;
            break;
        };
        let gain = energy - e;
        field = cand;
        energy = e;
        trace.push(e);
        if gain <= cfg.tol * energy.abs().max(1e-300) {
            converged = true;
            break;
        }
    }
    Ok(Descent { field, energy, trace, converged })
}

/// Edges of a surface mesh crossed by the chart ray o + s·dir, s ≥ 0.
fn ray_edges(mesh: &Mesh, o: &[f64], dir: [f64; 2]) -> Vec<usize> {
    let cross = |a: [f64; 2], b: [f64; 2]| a[0] * b[1] - a[1] * b[0];
    let mut out = Vec::new();
    for (e, ends) in mesh.edges().iter().enumerate() {
        let (ya, yb) = (mesh.chart_coords(ends[0]), mesh.chart_coords(ends[1]));
        let ed = [yb[0] - ya[0], yb[1] - ya[1]];
        let den = cross(dir, ed);
        if den.abs() < 1e-14 {
            continue;
        }
        let w = [ya[0] - o[0], ya[1] - o[1]];
        let t = cross(w, ed) / den;
        let u = cross(w, dir) / den;
        if t >= 0.0 && (0.0..1.0).contains(&u) {
            out.push(e);
        }
    }
    out
}

fn run_restart(pb: &Problem, init: DiscreteQField, cfg: &SolveConfig, seed: u64) -> Result<(Descent, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = descend(pb, init, cfg, cfg.max_iters)?;
    let mut trace = first.trace.clone();
    let mut converged = first.converged;
    let (mut cur_field, mut cur_e) = (first.field.clone(), first.energy);
    let mut best = first;
    let mut swaps = 0;
    let mesh = &pb.mesh;
    if pb.q >= 2 && mesh.m() == 2 && cfg.anneal.proposals > 0 {
        let interior: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| !pb.fixed[v]).collect();
        let e_ref = cur_e.abs().max(1e-12);
        let mut temp = cfg.anneal.t0 * e_ref;
        for _ in 0..cfg.anneal.proposals {
            let o = mesh.chart_coords(interior[rng.gen_range(0..interior.len().max(1))]).to_vec();
            let ang = rng.gen_range(0.0..2.0 * PI);
            let a = rng.gen_range(0..pb.q);
            let b = (a + rng.gen_range(1..pb.q)) % pb.q;
            let mut tau: Vec<usize> = (0..pb.q).collect();
            tau.swap(a, b);
            let mut twisted = cur_field.clone();
            for e in ray_edges(mesh, &o, [ang.cos(), ang.sin()]) {
                twisted.twist_edge(e, &tau);
            }
            let vals = pb.step(&twisted, cfg)?;
            let cand = descend(pb, pb.with_values(&cur_field, vals), cfg, ANNEAL_ITERS.min(cfg.max_iters))?;
            let delta = cand.energy - cur_e;
            let accept = delta < 0.0 || (temp > 0.0 && rng.gen::<f64>() < (-delta / temp).exp());
            if accept {
                swaps += 1;
                cur_field = cand.field.clone();
                cur_e = cand.energy;
                if cand.energy < best.energy {
                    converged = cand.converged;
                    best = cand;
                    trace.push(best.energy);
                }
            }
            temp *= cfg.anneal.cooling;
        }
    }
    best.trace = trace;
    best.converged = converged;
    Ok((best, swaps))
}

/// The rolled harmonic extension of a boundary trace sampled on a ring of
/// uniformly spaced vertices, as a field on the mesh. None when the mesh is
/// not a surface ball with such a boundary or the trace does not decompose.
pub fn rolled_extension_field(mesh: &Arc<Mesh>, boundary: &[QPoint], normal: bool) -> Result<Option<DiscreteQField>> {
    if mesh.m() != 2 || mesh.is_closed() || boundary.is_empty() {
        return Ok(None);
    }
    let bv = mesh.boundary_vertices();
    let n = bv.len();
    let mut order: Vec<(f64, usize)> = bv
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let y = mesh.chart_coords(v);
            (y[1].atan2(y[0]).rem_euclid(2.0 * PI), i)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let uniform = order.iter().enumerate().all(|(i, (a, _))| {
        let t = 2.0 * PI * i as f64 / n as f64;
        (a - t).abs() < 1e-9 || (i == 0 && (a - 2.0 * PI).abs() < 1e-9)
    });
    if !uniform {
        return Ok(None);
    }
    let radius = crate::linalg::norm(mesh.chart_coords(bv[0]));
    let samples: Vec<QPoint> = order.iter().map(|&(_, i)| boundary[i].clone()).collect();
    let n_max = harmonic::DEFAULT_N_MAX.min(n / 2 - 1);
    let dec = match harmonic::decompose_irreducible(&samples, radius, n_max, aq::TAU_COIN) {
        Ok(d) => d,
        Err(Error::AmbiguousMatching { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let (ext, _) = harmonic::harmonic_extension(&dec, radius)?;
    let (q, d) = (boundary[0].q(), boundary[0].d());
    let scene = mesh.scene();
    let mut slot = vec![usize::MAX; mesh.num_vertices()];
    for (i, &v) in bv.iter().enumerate() {
        slot[v] = i;
    }
    let mut values = Vec::with_capacity(mesh.num_vertices() * q * d);
    for v in 0..mesh.num_vertices() {
        if slot[v] != usize::MAX {
            values.extend_from_slice(boundary[slot[v]].as_flat());
        } else {
            let y = mesh.chart_coords(v);
            let p = ext.eval(y[0], y[1]);
            for l in 0..q {
                if normal {
                    values.extend(scene.normal_project(mesh.point(v), p.sheet(l)));
                } else {
                    values.extend_from_slice(p.sheet(l));
                }
            }
        }
    }
    Ok(Some(DiscreteQField::new(mesh.clone(), q, d, values, normal)?))
}

fn check_boundary(mesh: &Mesh, boundary: &[QPoint], normal: bool) -> Result<(usize, usize)> {
    let bv = mesh.boundary_vertices();
    if bv.is_empty() {
        return Err(Error::InvalidParam("the mesh has no boundary to prescribe".into()));
    }
    if boundary.len() != bv.len() {
        return Err(Error::DimensionMismatch { what: "boundary values vs boundary vertices", left: boundary.len(), right: bv.len() });
    }
    let (q, d) = (boundary[0].q(), boundary[0].d());
    for (p, &v) in boundary.iter().zip(&bv) {
        if p.q() != q || p.d() != d {
            return Err(Error::DimensionMismatch { what: "boundary Q-point shape", left: p.q() * p.d(), right: q * d });
        }
        if p.as_flat().iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite boundary value at vertex {v}")));
        }
        if normal {
            let dev = p.sheets().map(|s| mesh.scene().fiber_deviation(mesh.point(v), s)).fold(0.0, f64::max);
            if dev > 1e-8 {
                return Err(Error::NotNormalSection { deviation: dev });
            }
        }
    }
    if normal && d != mesh.d() {
        return Err(Error::DimensionMismatch { what: "normal section value dimension", left: d, right: mesh.d() });
    }
    Ok((q, d))
}

fn initial_fields(pb: &Problem, boundary: &[QPoint], normal: bool, cfg: &SolveConfig) -> Result<Vec<DiscreteQField>> {
    let mesh = &pb.mesh;
    let (q, d) = (pb.q, pb.d);
    let bv = mesh.boundary_vertices();
    let scale = boundary.iter().map(|p| p.max_sheet_norm()).fold(0.0, f64::max).max(1e-3);
    let base = |fill: &mut dyn FnMut(usize) -> Vec<f64>| -> Result<DiscreteQField> {
        let mut slot = vec![usize::MAX; mesh.num_vertices()];
        for (i, &v) in bv.iter().enumerate() {
            slot[v] = i;
        }
        let mut values = Vec::with_capacity(mesh.num_vertices() * q * d);
        for v in 0..mesh.num_vertices() {
            if slot[v] != usize::MAX {
                values.extend_from_slice(boundary[slot[v]].as_flat());
            } else {
                values.extend(fill(v));
            }
        }
        DiscreteQField::new(mesh.clone(), q, d, values, normal)
    };
    let warm = if cfg.warm_start { rolled_extension_field(mesh, boundary, normal)? } else { None };
    let mut out = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        if r == 0 {
            if let Some(w) = &warm {
                out.push(w.clone());
                continue;
            }
        }
        if out.len() == r && (r == 0 || (r == 1 && warm.is_some())) {
            out.push(base(&mut |_| vec![0.0; q * d])?);
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(r as u64));
        out.push(base(&mut |v| {
            let mut vals = Vec::with_capacity(q * d);
            for _ in 0..q {
                if normal {
                    let mut s = vec![0.0; d];
                    for e in &mesh.scene().normal_frame(mesh.point(v)) {
                        crate::linalg::axpy(&mut s, scale * rng.gen_range(-1.0..1.0), e);
                    }
                    vals.extend(s);
                } else {
                    vals.extend((0..d).map(|_| scale * rng.gen_range(-1.0..1.0)));
                }
            }
            vals
        })?);
    }
    Ok(out)
}

fn solve(kind: Kind, mesh: Arc<Mesh>, boundary: &[QPoint], cfg: &SolveConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let normal_wanted = kind == Kind::Jacobi;
    let (q, d) = check_boundary(&mesh, boundary, normal_wanted)?;
    // Dirichlet data lying in the normal fibers stays there
    let normal = normal_wanted
        || (d == mesh.d()
            && boundary
                .iter()
                .zip(mesh.boundary_vertices())
                .all(|(p, v)| p.sheets().all(|s| mesh.scene().fiber_deviation(mesh.point(v), s) <= 1e-8))
            && mesh.scene().is_flat());
    let fixed: Vec<bool> = (0..mesh.num_vertices()).map(|v| mesh.is_boundary(v)).collect();
    let pb = Problem::new(kind, mesh, q, d, fixed);
    let inits = initial_fields(&pb, boundary, normal, cfg)?;
    let runs: Vec<Result<(Descent, usize)>> = inits
        .into_par_iter()
        .enumerate()
        .map(|(r, f)| run_restart(&pb, f, cfg, cfg.seed.wrapping_add(0x5151).wrapping_add(r as u64)))
        .collect();
    let mut done = Vec::with_capacity(runs.len());
    for r in runs {
        done.push(r?);
    }
    let restart_energies: Vec<f64> = done.iter().map(|(d, _)| d.energy).collect();
    let best_restart = (0..done.len()).min_by(|&a, &b| restart_energies[a].total_cmp(&restart_energies[b]).then(a.cmp(&b))).unwrap();
    let (best, swaps) = done.swap_remove(best_restart);
    let warning = if best.converged {
        None
    } else {
        Some(format!("energy still decreasing after {} iterations; returning the best field found", cfg.max_iters))
    };
    Ok(SolveResult {
        field: best.field,
        energy: best.energy,
        trace: best.trace,
        restart_energies,
        best_restart,
        accepted_swaps: swaps,
        converged: best.converged,
        warning,
    })
}

/// Minimizes the discrete Dirichlet energy with the given values on
/// `mesh.boundary_vertices()`.
pub fn minimize_dirichlet(mesh: Arc<Mesh>, boundary: &[QPoint], cfg: &SolveConfig) -> Result<SolveResult> {
    solve(Kind::Dirichlet, mesh, boundary, cfg)
}

/// Minimizes the discrete Jacobi energy over normal sections. Curved scenes
/// are checked for strict stability first.
pub fn minimize_jacobi(mesh: Arc<Mesh>, boundary: &[QPoint], cfg: &SolveConfig) -> Result<SolveResult> {
    if !mesh.scene().is_flat() {
        let st = stability_constant(&mesh)?;
        if st.constant <= 0.0 {
            return Err(Error::NotStable { curvature: st.constant });
        }
    }
    solve(Kind::Jacobi, mesh, boundary, cfg)
}

#[derive(Clone, Debug)]
pub struct StabilityReport {
    /// min Jac(u) / ‖u‖² over single-valued normal sections with zero trace.
    pub constant: f64,
    pub iterations: usize,
    /// Relative change of the Rayleigh quotient in the last iteration.
    pub change: f64,
    /// The minimizing mode, normalized in L².
    pub mode: DiscreteQField,
}

/// Inverse iteration on the Jacobi form shifted below its spectrum. On a
/// closed mesh no trace is imposed.
pub fn stability_constant(mesh: &Arc<Mesh>) -> Result<StabilityReport> {
    let nv = mesh.num_vertices();
    let d = mesh.d();
    let fixed: Vec<bool> = (0..nv).map(|v| mesh.is_boundary(v)).collect();
    if fixed.iter().all(|&f| f) {
        return Err(Error::InvalidParam("no interior vertices".into()));
    }
    let zero = DiscreteQField::new(mesh.clone(), 1, d, vec![0.0; nv * d], true)?;
    let pb = Problem::new(Kind::Jacobi, mesh.clone(), 1, d, fixed);
    let coeffs = vec![0.0; nv * pb.p()];
    let shift = mesh.scene().b_bound() + 1.0;
    let (shifted, _) = pb.assemble(&zero, &coeffs, shift);
    let mass = mass_matrix(&pb, &zero);
    let n = pb.n_free * pb.block;
    let mut x = vec![1.0; n];
    let mut mx = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut lambda = f64::NAN;
    let mut change = f64::INFINITY;
    let mut it = 0;
    while it < 500 {
        it += 1;
        mass.apply(&x, &mut mx);
        cg(&shifted, &mx, &mut y, 1e-13, 50_000)?;
        let ym = mass.quad(&y);
        let yk = shifted.quad(&y);
        let next = yk / ym - shift;
        let s = 1.0 / ym.sqrt();
        x.iter_mut().zip(&y).for_each(|(a, b)| *a = b * s);
        change = if lambda.is_nan() { f64::INFINITY } else { (next - lambda).abs() / next.abs().max(1.0) };
        lambda = next;
        if change < 1e-12 {
            break;
        }
    }
    let mut c = vec![0.0; nv * pb.p()];
    pb.scatter_column(&mut c, &x, 0);
    let mode = DiscreteQField::new(mesh.clone(), 1, d, pb.values(&c), true)?;
    Ok(StabilityReport { constant: lambda, iterations: it, change, mode })
}

fn mass_matrix(pb: &Problem, f: &DiscreteQField) -> SymMatrix {
    let mesh = &pb.mesh;
    let bk = pb.block;
    let nl = mesh.m() + 1;
    let n = nl * bk;
    let mut trip = Vec::new();
    for c in 0..mesh.num_cells() {
        let l = pb.local_matrix(c, true);
        let cell = mesh.cell(c);
        let slots = f.cell_slots(c);
        let nodes: Vec<usize> = (0..nl).map(|j| cell[j] * pb.q + slots[j][0]).collect();
        for j in 0..nl {
            for jj in 0..nl {
                let (a, b) = (pb.free_pos[nodes[j]], pb.free_pos[nodes[jj]]);
                if a == NOT_FREE || b == NOT_FREE {
                    continue;
                }
                for x in 0..bk {
                    for y in 0..bk {
                        trip.push((a * bk + x, b * bk + y, l[(j * bk + x) * n + jj * bk + y]));
                    }
                }
            }
        }
    }
    SymMatrix::from_triplets(pb.n_free * bk, &trip)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CertificationReport {
    /// Largest relative outer-variation residual over the test family.
    pub outer_residual: f64,
    /// Largest relative inner-variation residual over the test family.
    pub inner_residual: f64,
    pub tests: usize,
    /// r² Dir(B_r) / ‖N‖²_{L²(B_2r)} at r = R/4.
    pub caccioppoli: f64,
    /// Slope of log Dir(B_r) against log r over r ∈ [0.1R, 0.5R].
    pub decay_exponent: f64,
    /// (decay − (m − 2)) / 2.
    pub holder_alpha: f64,
    /// sup G(N(x), N(y)) / |x − y|^α over sampled pairs in B_{R/2}.
    pub holder_seminorm: f64,
    /// √Dir(B_R) / R^{α + (m−2)/2}: the scale the seminorm is compared with.
    pub holder_bound_scale: f64,
}

/// Energy of the field in the geodesic ball B_r(center), with partial cells.
pub fn ball_energy(n: &DiscreteQField, center: &[f64], r: f64) -> Result<f64> {
    let region = Region { cells: n.mesh().ball_fractions(center, r) };
    dirichlet_energy(n, &region, if n.is_normal() { Flavor::Normal } else { Flavor::Full })
}

pub fn certify_minimizer(n: &DiscreteQField) -> Result<CertificationReport> {
    let mesh = n.mesh();
    let scene = mesh.scene();
    let m = mesh.m();
    let pole = scene.pole();
    let big = mesh.inner_radius();
    let mut rep = CertificationReport::default();
    if n.is_normal() {
        let mut tests = Vec::new();
        for frac in [0.5, 0.75, 0.95] {
            tests.push(VariationTest::OuterCutoff { center: pole.clone(), radius: frac * big });
            tests.push(VariationTest::InnerRadial { center: pole.clone(), radius: frac * big });
        }
        if scene.is_flat() {
            for i in 0..m {
                let mut e = vec![0.0; mesh.d()];
                e[i] = 1.0;
                tests.push(VariationTest::InnerTranslation { center: pole.clone(), radius: 0.75 * big, direction: e });
            }
        }
        for t in &tests {
            let r = variation_residuals(n, t)?;
            match t {
                VariationTest::OuterCutoff { .. } => rep.outer_residual = rep.outer_residual.max(r.relative),
                _ => rep.inner_residual = rep.inner_residual.max(r.relative),
            }
        }
        rep.tests = tests.len();
    }
    let r4 = big / 4.0;
    let l2 = l2_norm_sq(n, &Region { cells: mesh.ball_fractions(&pole, 2.0 * r4) })?;
    rep.caccioppoli = if l2 > 0.0 { r4 * r4 * ball_energy(n, &pole, r4)? / l2 } else { 0.0 };
    let radii: Vec<f64> = (0..9).map(|i| big * 0.1 * 5f64.powf(i as f64 / 8.0)).collect();
    let logs: Vec<(f64, f64)> = radii
        .iter()
        .filter_map(|&r| ball_energy(n, &pole, r).ok().filter(|e| *e > 0.0).map(|e| (r.ln(), e.ln())))
        .collect();
    if logs.len() >= 2 {
        rep.decay_exponent = slope(&logs);
        rep.holder_alpha = (rep.decay_exponent - (m as f64 - 2.0)) / 2.0;
    }
    let alpha = rep.holder_alpha.clamp(1e-3, 1.0);
    let inner: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| scene.distance_sigma(&pole, mesh.point(v)) < big / 2.0).collect();
    let stride = (inner.len() / 300).max(1);
    let picks: Vec<usize> = inner.iter().step_by(stride).copied().collect();
    let vals: Vec<QPoint> = picks.iter().map(|&v| n.value(v)).collect();
    let mut semi: f64 = 0.0;
    for i in 0..picks.len() {
        for j in i + 1..picks.len() {
            let dist = scene.distance_sigma(mesh.point(picks[i]), mesh.point(picks[j]));
            if dist > 0.0 {
                semi = semi.max(aq::g_distance(&vals[i], &vals[j])? / dist.powf(alpha));
            }
        }
    }
    rep.holder_seminorm = semi;
    let dir = ball_energy(n, &pole, big)?;
    rep.holder_bound_scale = dir.sqrt() / big.powf(alpha + (m as f64 - 2.0) / 2.0);
    Ok(rep)
}

/// Least-squares slope of y against x.
/// Relative residual of the discrete Euler–Lagrange system for the mean
/// η∘N, boundary values held fixed. Summing the node equations over the slots
/// at a vertex gives exactly this system, so it vanishes for minimizers up to
/// the linear tolerance.
pub fn mean_jacobi_residual(n: &DiscreteQField) -> Result<f64> {
    let mesh = n.mesh().clone();
    let nv = mesh.num_vertices();
    let d = n.d();
    let values: Vec<f64> = (0..nv).flat_map(|v| aq::eta_mean(&n.value(v))).collect();
    let mean = DiscreteQField::new(mesh.clone(), 1, d, values, n.is_normal())?;
    let fixed: Vec<bool> = (0..nv).map(|v| mesh.is_boundary(v)).collect();
    let kind = if n.is_normal() && !mesh.scene().is_flat() { Kind::Jacobi } else { Kind::Dirichlet };
    let pb = Problem::new(kind, mesh, 1, d, fixed);
    let coeffs = pb.coefficients(&mean);
    let (mat, rhs) = pb.assemble(&mean, &coeffs, 0.0);
    let (mut num, mut den) = (0.0, 0.0);
    for (col, b) in rhs.iter().enumerate() {
        let x = pb.free_column(&coeffs, col);
        let mut ax = vec![0.0; x.len()];
        mat.apply(&x, &mut ax);
        num += ax.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        den += dot(&ax, &ax) + dot(b, b);
    }
    Ok(if den > 0.0 { (num / den).sqrt() } else { 0.0 })
}

pub(crate) fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pairwise_sum(&pts.iter().map(|p| p.0).collect::<Vec<_>>()) / n;
    let my = pairwise_sum(&pts.iter().map(|p| p.1).collect::<Vec<_>>()) / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Scene;

    fn w3(x: &[f64]) -> Vec<Vec<f64>> {
        let (r, th) = ((x[0] * x[0] + x[1] * x[1]).sqrt(), x[1].atan2(x[0]));
        let (c, s) = (r.powf(1.5) * (1.5 * th).cos(), r.powf(1.5) * (1.5 * th).sin());
        vec![vec![c, s], vec![-c, -s]]
    }

    fn w3_boundary(mesh: &Mesh) -> Vec<QPoint> {
        boundary_trace(mesh, |x| {
            let mut sheets = Vec::new();
            for c in w3(x) {
                sheets.push(vec![0.0, 0.0, c[0], c[1]]);
            }
            QPoint::from_sheets(&sheets).unwrap()
        })
    }

    fn quick() -> SolveConfig {
        SolveConfig { restarts: 2, anneal: AnnealSchedule { proposals: 2, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn constant_boundary_gives_constant_field() {
        let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 1, 0), 1.0, 0.1).unwrap());
        let p = QPoint::repeated(3, &[0.0, 0.0, 0.7]).unwrap();
        let bd = vec![p.clone(); mesh.boundary_vertices().len()];
        let out = minimize_dirichlet(mesh.clone(), &bd, &quick()).unwrap();
        assert!(out.energy.abs() < 1e-18, "{}", out.energy);
        for v in 0..mesh.num_vertices() {
            assert!(aq::g_distance(&out.field.value(v), &p).unwrap() < 1e-9);
        }
    }

    #[test]
    fn single_valued_boundary_matches_dense_laplace() {
        let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 1, 0), 1.0, 0.15).unwrap());
        let g = |x: &[f64]| vec![x[0] * x[0] - 0.3 * x[1], (2.0 * x[0]).sin() + x[1] * x[1] * x[1]];
        let bd = boundary_trace(&mesh, |x| QPoint::from_sheets(&[g(x)]).unwrap());
        let cfg = SolveConfig { restarts: 1, linear_tol: 1e-14, ..Default::default() };
        let out = minimize_dirichlet(mesh.clone(), &bd, &cfg).unwrap();
        // independent dense P1 assembly in global chart coordinates
        let nv = mesh.num_vertices();
        let interior: Vec<usize> = (0..nv).filter(|&v| !mesh.is_boundary(v)).collect();
        let mut idx = vec![usize::MAX; nv];
        for (i, &v) in interior.iter().enumerate() {
            idx[v] = i;
        }
        let ni = interior.len();
        for coord in 0..2 {
            let mut a = vec![0.0; ni * ni];
            let mut b = vec![0.0; ni];
            for c in 0..mesh.num_cells() {
                let cell = mesh.cell(c);
                let p: Vec<&[f64]> = cell.iter().map(|&v| mesh.chart_coords(v)).collect();
                let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
                let grads: Vec<[f64; 2]> = (0..3)
                    .map(|j| {
                        let (u, w) = (p[(j + 1) % 3], p[(j + 2) % 3]);
                        [(u[1] - w[1]) / area2, (w[0] - u[0]) / area2]
                    })
                    .collect();
                for j in 0..3 {
                    if idx[cell[j]] == usize::MAX {
                        continue;
                    }
                    for k in 0..3 {
                        let kij = 0.5 * area2.abs() * (grads[j][0] * grads[k][0] + grads[j][1] * grads[k][1]);
                        if idx[cell[k]] == usize::MAX {
                            b[idx[cell[j]]] -= kij * g(mesh.point(cell[k]))[coord];
                        } else {
                            a[idx[cell[j]] * ni + idx[cell[k]]] += kij;
                        }
                    }
                }
            }
            // Gaussian elimination
            for col in 0..ni {
                let piv = a[col * ni + col];
                for row in col + 1..ni {
                    let f = a[row * ni + col] / piv;
                    if f != 0.0 {
                        for k in col..ni {
                            a[row * ni + k] -= f * a[col * ni + k];
                        }
                        b[row] -= f * b[col];
                    }
                }
            }
            let mut x = vec![0.0; ni];
            for row in (0..ni).rev() {
                let s: f64 = (row + 1..ni).map(|k| a[row * ni + k] * x[k]).sum();
                x[row] = (b[row] - s) / a[row * ni + row];
            }
            for (i, &v) in interior.iter().enumerate() {
                assert!((out.field.sheet(v, 0)[coord] - x[i]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn w3_boundary_energy_near_six_pi() {
        let mut last = f64::INFINITY;
        for h in [0.1, 0.05] {
            let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, h).unwrap());
            let bd = w3_boundary(&mesh);
            let out = minimize_dirichlet(mesh.clone(), &bd, &quick()).unwrap();
            let err = (out.energy - 6.0 * PI).abs() / (6.0 * PI);
            assert!(err < 0.02 && err < last, "h={h}: {} ({err})", out.energy);
            last = err;
            assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
            let ext = rolled_extension_field(&mesh, &bd, true).unwrap().unwrap();
            let e_ext = dirichlet_energy(&ext, &Region::all(&mesh), Flavor::Full).unwrap();
            assert!(out.energy <= e_ext + 1e-9);
        }
    }

    #[test]
    fn cold_start_finds_branched_minimizer() {
        let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, 0.1).unwrap());
        let bd = w3_boundary(&mesh);
        let cfg = SolveConfig { warm_start: false, restarts: 2, ..Default::default() };
        let out = minimize_dirichlet(mesh, &bd, &cfg).unwrap();
        assert!(out.energy < 6.0 * PI * 1.05, "{}", out.energy);
    }

    #[test]
    fn deterministic_and_scale_equivariant() {
        let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, 0.12).unwrap());
        let bd = w3_boundary(&mesh);
        let cfg = SolveConfig { warm_start: false, seed: 7, ..quick() };
        let a = minimize_dirichlet(mesh.clone(), &bd, &cfg).unwrap();
        let b = minimize_dirichlet(mesh.clone(), &bd, &cfg).unwrap();
        assert_eq!(a.field.values(), b.field.values());
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
        let scaled: Vec<QPoint> = bd.iter().map(|p| p.scaled(2.0)).collect();
        let c = minimize_dirichlet(mesh.clone(), &scaled, &cfg).unwrap();
        assert!((c.energy - 4.0 * a.energy).abs() < 1e-8 * a.energy);
    }

    #[test]
    fn flat_jacobi_equals_dirichlet() {
        let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, 0.1).unwrap());
        let bd = w3_boundary(&mesh);
        let cfg = quick();
        let a = minimize_dirichlet(mesh.clone(), &bd, &cfg).unwrap();
        let b = minimize_jacobi(mesh.clone(), &bd, &cfg).unwrap();
        assert!((a.energy - b.energy).abs() < 1e-9);
        for v in 0..mesh.num_vertices() {
            assert!(aq::g_distance(&a.field.value(v), &b.field.value(v)).unwrap() < 1e-8);
        }
    }

    #[test]
    fn stability_constants() {
        let disk = Arc::new(Mesh::ball(&Scene::flat_disk(2, 1, 0), 1.0, 0.04).unwrap());
        let s = stability_constant(&disk).unwrap();
        assert!((s.constant - 5.7832).abs() < 0.01 * 5.7832, "{}", s.constant);
        let sphere = Arc::new(Mesh::closed(&Scene::equatorial_sphere(2), 0.15).unwrap());
        let s = stability_constant(&sphere).unwrap();
        assert!((s.constant + 2.0).abs() < 0.02, "{}", s.constant);
    }

    #[test]
    fn small_cap_with_zero_trace_is_zero() {
        let sc = Scene::equatorial_sphere(2);
        let mesh = Arc::new(Mesh::ball(&sc, 0.5, 0.08).unwrap());
        let bd = vec![QPoint::zero(1, 4); mesh.boundary_vertices().len()];
        let out = minimize_jacobi(mesh, &bd, &quick()).unwrap();
        assert!(out.field.max_sheet_norm() < 1e-12);
    }

    #[test]
    fn large_cap_is_rejected() {
        // the hemisphere's first Dirichlet eigenvalue is 2 = m; past it Jac is indefinite
        let sc = Scene::equatorial_sphere(2);
        let mesh = Arc::new(Mesh::ball(&sc, 2.0, 0.15).unwrap());
        let bd = vec![QPoint::zero(1, 4); mesh.boundary_vertices().len()];
        assert!(matches!(minimize_jacobi(mesh, &bd, &quick()), Err(Error::NotStable { .. })));
    }

    #[test]
    fn cap_solution_residual_shrinks() {
        let sc = Scene::equatorial_sphere(2);
        let mut prev = f64::INFINITY;
        for h in [0.1, 0.05] {
            let mesh = Arc::new(Mesh::ball(&sc, 0.8, h).unwrap());
            let bd = boundary_trace(&mesh, |x| QPoint::from_sheets(&[vec![0.0, 0.0, 0.0, 1.0 + x[1]]]).unwrap());
            let out = minimize_jacobi(mesh, &bd, &quick()).unwrap();
            let rep = certify_minimizer(&out.field).unwrap();
            assert!(rep.outer_residual < 1e-6, "{rep:?}");
            assert!(rep.inner_residual < prev, "{rep:?}");

            prev = rep.inner_residual;
        }
    }

    #[test]
    fn mean_of_two_sheet_cap_minimizer_is_jacobi() {
        let sc = Scene::equatorial_sphere(2);
        let mesh = Arc::new(Mesh::ball(&sc, 0.8, 0.08).unwrap());
        let bd = boundary_trace(&mesh, |x| {
            QPoint::from_sheets(&[vec![0.0, 0.0, 0.0, 1.0 + x[1]], vec![0.0, 0.0, 0.0, x[0] - 0.5]]).unwrap()
        });
        let out = minimize_jacobi(mesh, &bd, &quick()).unwrap();
        let r = mean_jacobi_residual(&out.field).unwrap();
        assert!(r < 1e-8, "{r}");
    }

    #[test]
    fn certification_of_exact_w3() {
        let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, 1.0 / 64.0).unwrap());
        let f = DiscreteQField::from_normal_coefficients(mesh, 2, |_, x| w3(x)).unwrap();
        let rep = certify_minimizer(&f).unwrap();
        assert!((rep.decay_exponent - 3.0).abs() < 0.05, "{rep:?}");
        assert!((rep.holder_alpha - 1.5).abs() < 0.03);
        assert!(rep.holder_seminorm.is_finite() && rep.caccioppoli > 0.0);
        let zero = f.scaled(0.0);
        let z = certify_minimizer(&zero).unwrap();
        assert_eq!((z.outer_residual, z.inner_residual, z.caccioppoli), (0.0, 0.0, 0.0));
    }
}
