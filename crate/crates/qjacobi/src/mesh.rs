//! Simplicial meshes of domains in Σ.
//!
//! Every cell carries its own normal-coordinate chart centred at the cell
//! centre c: local vertex coordinates y_j = ξ(c)ᵀ log_c(x_j). Gradients of
//! piecewise affine data are taken in that chart, where the metric is the
//! identity at c, so |Du|² at the centre is the plain Frobenius norm.

use crate::error::{Error, Result};
use crate::linalg::{det, dot, inverse, norm, sub};
use crate::scene::{Scene, SceneKind};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;

/// How a mesh was generated; enough to rebuild it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeshSpec {
    /// Geodesic ball of radius `radius` around the scene pole, ring spacing ≈ h.
    Ball { radius: f64, h: f64 },
    /// The whole closed Σ (equatorial spheres only), cell diameter ≈ h.
    Closed { h: f64 },
}

#[derive(Clone, Debug)]
pub struct CellGeom {
    pub weight: f64,
    pub center: Vec<f64>,
    /// Tangent frame ξ_1..ξ_m at the centre.
    pub frame: Vec<Vec<f64>>,
    pub y0: Vec<f64>,
    /// Inverse of [y_1 − y_0, …, y_m − y_0], row-major m×m.
    pub dyinv: Vec<f64>,
    /// Gradients of the barycentric functions in the local frame, (m+1)×m.
    pub grad_bary: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    scene: Scene,
    spec: MeshSpec,
    m: usize,
    points: Vec<f64>,
    chart: Vec<f64>,
    cells: Vec<usize>,
    boundary: Vec<bool>,
    closed: bool,
    edges: Vec<[usize; 2]>,
    edge_index: HashMap<(usize, usize), usize>,
    neighbors: Vec<Vec<usize>>,
    vertex_cells: Vec<Vec<usize>>,
    geom: Vec<CellGeom>,
    radius: Vec<f64>,
    h: f64,
    locator: Locator,
}

#[derive(Clone, Debug)]
struct Locator {
    dims: usize,
    size: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl Locator {
    fn key(&self, x: &[f64]) -> Vec<i64> {
        x[..self.dims].iter().map(|v| (v / self.size).floor() as i64).collect()
    }
}

impl Mesh {
    pub fn build(scene: &Scene, spec: &MeshSpec) -> Result<Mesh> {
        match *spec {
            MeshSpec::Ball { radius, h } => Mesh::ball(scene, radius, h),
            MeshSpec::Closed { h } => Mesh::closed(scene, h),
        }
    }

    /// Geodesic ball around the scene pole.
    pub fn ball(scene: &Scene, radius: f64, h: f64) -> Result<Mesh> {
        if !(radius > 0.0 && h > 0.0) {
            return Err(Error::Mesh(format!("radius and h must be positive (got {radius}, {h})")));
        }
        if radius >= scene.injectivity_bound() {
            return Err(Error::InjectivityExceeded { radius, bound: scene.injectivity_bound() });
        }
        let m = scene.m();
        let (chart, cells) = match m {
            1 => interval_chart(radius, h),
            2 => disk_chart(radius, h),
            3 => ball3_chart(radius, h),
            _ => return Err(Error::Mesh(format!("no ball mesher for m = {m}"))),
        };
        let points = chart.chunks_exact(m).flat_map(|y| scene.chart(y)).collect();
        Mesh::assemble(scene.clone(), MeshSpec::Ball { radius, h }, m, points, chart, cells, false)
    }

    /// Mesh of the whole closed sphere Σ = S^m (m = 1, 2).
    pub fn closed(scene: &Scene, h: f64) -> Result<Mesh> {
        let m = match scene.kind() {
            SceneKind::EquatorialSphere { m } => m,
            SceneKind::FlatDisk { .. } => return Err(Error::Mesh("flat scenes are not closed".into())),
        };
        let d = scene.d();
        let (points, cells) = match m {
            1 => {
                let n = ((2.0 * PI / h).ceil() as usize).max(8);
                let mut pts = Vec::with_capacity(n * d);
                for i in 0..n {
                    let a = 2.0 * PI * i as f64 / n as f64;
                    let mut x = vec![0.0; d];
                    x[0] = a.cos();
                    x[1] = a.sin();
                    pts.extend(x);
                }
                let cells = (0..n).flat_map(|i| [i, (i + 1) % n]).collect();
                (pts, cells)
            }
            2 => icosphere(d, h),
            _ => return Err(Error::Mesh(format!("no closed mesher for m = {m}"))),
        };
        let chart = points.chunks_exact(d).flat_map(|x| scene.chart_inverse(x)).collect();
        Mesh::assemble(scene.clone(), MeshSpec::Closed { h }, m, points, chart, cells, true)
    }

    fn assemble(
        scene: Scene,
        spec: MeshSpec,
        m: usize,
        points: Vec<f64>,
        chart: Vec<f64>,
        cells: Vec<usize>,
        closed: bool,
    ) -> Result<Mesh> {
        let d = scene.d();
        let nv = points.len() / d;
        let nc = cells.len() / (m + 1);
        let mut edge_index = HashMap::new();
        let mut edges = Vec::new();
        let mut vertex_cells = vec![Vec::new(); nv];
        for c in 0..nc {
            let cv = &cells[c * (m + 1)..(c + 1) * (m + 1)];
            for (a, &va) in cv.iter().enumerate() {
                vertex_cells[va].push(c);
                for &vb in &cv[a + 1..] {
                    let key = (va.min(vb), va.max(vb));
                    edge_index.entry(key).or_insert_with(|| {
                        edges.push([key.0, key.1]);
                        edges.len() - 1
                    });
                }
            }
        }
        let mut neighbors = vec![Vec::new(); nv];
        for e in &edges {
            neighbors[e[0]].push(e[1]);
            neighbors[e[1]].push(e[0]);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        // boundary: facets owned by a single cell
        let mut boundary = vec![false; nv];
        if !closed {
            let mut facets: HashMap<Vec<usize>, usize> = HashMap::new();
            for c in 0..nc {
                let cv = &cells[c * (m + 1)..(c + 1) * (m + 1)];
                for skip in 0..=m {
                    let mut f: Vec<usize> = cv.iter().enumerate().filter(|(i, _)| *i != skip).map(|(_, v)| *v).collect();
                    f.sort_unstable();
                    *facets.entry(f).or_insert(0) += 1;
                }
            }
            for (f, count) in facets {
                if count == 1 {
                    for v in f {
                        boundary[v] = true;
                    }
                }
            }
        }
        let pole = scene.pole();
        let radius: Vec<f64> = points.chunks_exact(d).map(|x| scene.distance_sigma(&pole, x)).collect();
        let mut geom = Vec::with_capacity(nc);
        let mut h: f64 = 0.0;
        for c in 0..nc {
            let cv = &cells[c * (m + 1)..(c + 1) * (m + 1)];
            let xs: Vec<&[f64]> = cv.iter().map(|&v| &points[v * d..(v + 1) * d]).collect();
            for a in 0..xs.len() {
                for b in a + 1..xs.len() {
                    h = h.max(scene.distance_sigma(xs[a], xs[b]));
                }
            }
            geom.push(cell_geometry(&scene, &xs).ok_or_else(|| Error::Mesh(format!("degenerate cell {c}")))?);
        }
        let dims = match scene.kind() {
            SceneKind::FlatDisk { m, .. } => m,
            SceneKind::EquatorialSphere { m } => m + 1,
        };
        let mut locator = Locator { dims, size: h.max(1e-12), buckets: HashMap::new() };
        for (c, g) in geom.iter().enumerate() {
            let key = locator.key(&g.center);
            locator.buckets.entry(key).or_default().push(c);
        }
        Ok(Mesh {
            scene,
            spec,
            m,
            points,
            chart,
            cells,
            boundary,
            closed,
            edges,
            edge_index,
            neighbors,
            vertex_cells,
            geom,
            radius,
            h,
            locator,
        })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn spec(&self) -> &MeshSpec {
        &self.spec
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.scene.d()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn num_vertices(&self) -> usize {
        self.boundary.len()
    }

    pub fn num_cells(&self) -> usize {
        self.geom.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn point(&self, v: usize) -> &[f64] {
        let d = self.d();
        &self.points[v * d..(v + 1) * d]
    }

    /// Normal coordinates of a vertex around the scene pole.
    pub fn chart_coords(&self, v: usize) -> &[f64] {
        &self.chart[v * self.m..(v + 1) * self.m]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c * (self.m + 1)..(c + 1) * (self.m + 1)]
    }

    pub fn geom(&self, c: usize) -> &CellGeom {
        &self.geom[c]
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.num_vertices()).filter(|&v| self.boundary[v]).collect()
    }

    /// Geodesic distance of a vertex from the scene pole.
    pub fn radius(&self, v: usize) -> f64 {
        self.radius[v]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn vertex_cells(&self, v: usize) -> &[usize] {
        &self.vertex_cells[v]
    }

    pub fn total_volume(&self) -> f64 {
        crate::linalg::pairwise_sum(&self.geom.iter().map(|g| g.weight).collect::<Vec<_>>())
    }

    /// The vertex closest to the pole.
    pub fn pole_vertex(&self) -> usize {
        (0..self.num_vertices())
            .min_by(|&a, &b| self.radius[a].total_cmp(&self.radius[b]))
            .unwrap_or(0)
    }

    /// Vertex nearest to an ambient point.
    pub fn nearest_vertex(&self, x: &[f64]) -> usize {
        match self.locate(x) {
            Ok((c, _)) => *self
                .cell(c)
                .iter()
                .min_by(|&&a, &&b| self.scene.distance_sigma(self.point(a), x).total_cmp(&self.scene.distance_sigma(self.point(b), x)))
                .unwrap(),
            Err(_) => (0..self.num_vertices())
                .min_by(|&a, &b| self.scene.distance_sigma(self.point(a), x).total_cmp(&self.scene.distance_sigma(self.point(b), x)))
                .unwrap_or(0),
        }
    }

    /// Barycentric coordinates of an ambient point in a cell.
    pub fn barycentric(&self, c: usize, x: &[f64]) -> Vec<f64> {
        let g = &self.geom[c];
        let m = self.m;
        let w = self.scene.log_sigma(&g.center, x);
        let y: Vec<f64> = g.frame.iter().map(|e| dot(&w, e)).collect();
        let dy = sub(&y, &g.y0);
        let mut lam = vec![0.0; m + 1];
        let mut s = 0.0;
        for i in 0..m {
            let v: f64 = (0..m).map(|j| g.dyinv[i * m + j] * dy[j]).sum();
            lam[i + 1] = v;
            s += v;
        }
        lam[0] = 1.0 - s;
        lam
    }

    /// Cell containing x and the barycentric coordinates there.
    pub fn locate(&self, x: &[f64]) -> Result<(usize, Vec<f64>)> {
        let key = self.locator.key(x);
        let dims = self.locator.dims;
        let mut best: Option<(usize, Vec<f64>, f64)> = None;
        let mut offs = vec![-1i64; dims];
        loop {
            let k: Vec<i64> = key.iter().zip(&offs).map(|(a, b)| a + b).collect();
            if let Some(list) = self.locator.buckets.get(&k) {
                for &c in list {
                    let lam = self.barycentric(c, x);
                    let minl = lam.iter().cloned().fold(f64::INFINITY, f64::min);
                    if best.as_ref().map_or(true, |b| minl > b.2) {
                        best = Some((c, lam, minl));
                    }
                }
            }
            let mut i = 0;
            while i < dims {
                offs[i] += 1;
                if offs[i] <= 1 {
                    break;
                }
                offs[i] = -1;
                i += 1;
            }
            if i == dims {
                break;
            }
        }
        // neighbouring cells flatten through different charts, so on curved
        // scenes their shared edges disagree at the 1e-4 level
        let slack = if self.scene.is_flat() { 1e-9 } else { 1e-3 };
        match best {
            Some((c, lam, minl)) if minl > -slack => Ok((c, lam)),
            _ => Err(Error::OutsideMesh),
        }
    }

    /// Largest ball radius around the pole contained in the mesh.
    pub fn inner_radius(&self) -> f64 {
        if self.closed {
            return self.scene.injectivity_bound();
        }
        // the boundary ring is inscribed in the ball
        self.boundary_vertices().iter().map(|&v| self.radius[v]).fold(f64::INFINITY, f64::min)
            * match self.m {
                2 => (PI / self.boundary_vertices().len() as f64).cos(),
                _ => 1.0,
            }
    }

    /// Fraction of each cell inside the closed geodesic ball B_r(center).
    /// Cells are flattened through log_center; surfaces and curves are cut
    /// exactly in that chart, tetrahedra by a barycentric subsample.
    pub fn ball_fractions(&self, center: &[f64], r: f64) -> Vec<(usize, f64)> {
        let frame = self.scene.tangent_frame(center);
        let flat = |v: usize| -> Vec<f64> {
            let w = self.scene.log_sigma(center, self.point(v));
            frame.iter().map(|e| dot(&w, e)).collect()
        };
        let mut out = Vec::new();
        for c in 0..self.num_cells() {
            let ys: Vec<Vec<f64>> = self.cell(c).iter().map(|&v| flat(v)).collect();
            let dists: Vec<f64> = ys.iter().map(|y| norm(y)).collect();
            if dists.iter().all(|&x| x <= r) {
                out.push((c, 1.0));
                continue;
            }
            let f = match self.m {
                1 => segment_fraction(ys[0][0], ys[1][0], r),
                2 => {
                    let whole = 0.5 * ((ys[1][0] - ys[0][0]) * (ys[2][1] - ys[0][1]) - (ys[1][1] - ys[0][1]) * (ys[2][0] - ys[0][0]));
                    let cut: f64 = (0..3).map(|i| disk_wedge_area(&ys[i], &ys[(i + 1) % 3], r)).sum();
                    (cut / whole).clamp(0.0, 1.0)
                }
                _ => subsample_fraction(&ys, r),
            };
            if f > 0.0 {
                out.push((c, f));
            }
        }
        out
    }
}

fn cell_geometry(scene: &Scene, xs: &[&[f64]]) -> Option<CellGeom> {
    let m = xs.len() - 1;
    let d = scene.d();
    let mut center = vec![0.0; d];
    for x in xs {
        for (c, v) in center.iter_mut().zip(x.iter()) {
            *c += v / xs.len() as f64;
        }
    }
    if !scene.is_flat() {
        let n = norm(&center);
        center.iter_mut().for_each(|v| *v /= n);
    }
    let frame = scene.tangent_frame(&center);
    let ys: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| {
            let w = scene.log_sigma(&center, x);
            frame.iter().map(|e| dot(&w, e)).collect()
        })
        .collect();
    let mut dy = vec![0.0; m * m];
    for j in 0..m {
        for i in 0..m {
            dy[i * m + j] = ys[j + 1][i] - ys[0][i];
        }
    }
    let dyinv = inverse(&dy, m)?;
    let mut grad_bary = vec![0.0; (m + 1) * m];
    for j in 1..=m {
        for i in 0..m {
            grad_bary[j * m + i] = dyinv[(j - 1) * m + i];
            grad_bary[i] -= dyinv[(j - 1) * m + i];
        }
    }
    let fact = (1..=m).product::<usize>() as f64;
    let weight = match (scene.kind(), m) {
        (SceneKind::EquatorialSphere { .. }, 1) => scene.distance_sigma(xs[0], xs[1]),
        (SceneKind::EquatorialSphere { .. }, 2) => spherical_triangle_area(xs[0], xs[1], xs[2]),
        _ => det(&dy, m).abs() / fact,
    };
    Some(CellGeom { weight, center, frame, y0: ys[0].clone(), dyinv, grad_bary })
}

fn segment_fraction(a: f64, b: f64, r: f64) -> f64 {
    let (lo, hi) = (a.min(b), a.max(b));
    if hi - lo <= 0.0 {
        return 0.0;
    }
    ((hi.min(r) - lo.max(-r)).max(0.0)) / (hi - lo)
}

/// Signed area of disk(0, r) ∩ triangle(0, p, q).
fn disk_wedge_area(p: &[f64], q: &[f64], r: f64) -> f64 {
    let dx = [q[0] - p[0], q[1] - p[1]];
    let a = dx[0] * dx[0] + dx[1] * dx[1];
    let b = 2.0 * (p[0] * dx[0] + p[1] * dx[1]);
    let c = p[0] * p[0] + p[1] * p[1] - r * r;
    let mut ts = vec![0.0];
    let disc = b * b - 4.0 * a * c;
    if a > 0.0 && disc > 0.0 {
        let sq = disc.sqrt();
        for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.push(1.0);
    let at = |t: f64| [p[0] + t * dx[0], p[1] + t * dx[1]];
    let mut area = 0.0;
    for w in ts.windows(2) {
        let (s0, s1) = (at(w[0]), at(w[1]));
        let mid = at(0.5 * (w[0] + w[1]));
        let cross = s0[0] * s1[1] - s0[1] * s1[0];
        if mid[0] * mid[0] + mid[1] * mid[1] <= r * r {
            area += 0.5 * cross;
        } else {
            area += 0.5 * r * r * cross.atan2(s0[0] * s1[0] + s0[1] * s1[1]);
        }
    }
    area
}

fn subsample_fraction(ys: &[Vec<f64>], r: f64) -> f64 {
    const N: usize = 8;
    let (mut inside, mut total) = (0usize, 0usize);
    for i in 0..N {
        for j in 0..N - i {
            for k in 0..N - i - j {
                let l = [i as f64 + 0.25, j as f64 + 0.25, k as f64 + 0.25];
                let l3 = N as f64 - l[0] - l[1] - l[2];
                let p: Vec<f64> = (0..ys[0].len())
                    .map(|a| (l[0] * ys[0][a] + l[1] * ys[1][a] + l[2] * ys[2][a] + l3 * ys[3][a]) / N as f64)
                    .collect();
                total += 1;
                if norm(&p) <= r {
                    inside += 1;
                }
            }
        }
    }
    inside as f64 / total as f64
}

/// Area of a geodesic triangle on the unit sphere (any ambient dimension).
pub fn spherical_triangle_area(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    // tan(E/2) = |det[a b c]| / (1 + a·b + b·c + c·a) with the determinant
    // taken as the volume of the parallelepiped
    let (ab, bc, ca) = (dot(a, b), dot(b, c), dot(c, a));
    let gram = [1.0, ab, ca, ab, 1.0, bc, ca, bc, 1.0];
    let vol = det(&gram, 3).max(0.0).sqrt();
    2.0 * vol.atan2(1.0 + ab + bc + ca)
}

fn interval_chart(radius: f64, h: f64) -> (Vec<f64>, Vec<usize>) {
    let n = ((2.0 * radius / h).ceil() as usize).max(2);
    let n = n + n % 2;
    let chart = (0..=n).map(|i| -radius + 2.0 * radius * i as f64 / n as f64).collect();
    let cells = (0..n).flat_map(|i| [i, i + 1]).collect();
    (chart, cells)
}

/// Concentric rings: ring i at radius i·R/n carries 6i vertices.
fn disk_chart(radius: f64, h: f64) -> (Vec<f64>, Vec<usize>) {
    let nr = ((radius / h).ceil() as usize).max(1);
    let rings: Vec<(f64, usize)> = (1..=nr).map(|i| (radius * i as f64 / nr as f64, 6 * i)).collect();
    rings_chart(&rings)
}

/// Pole plus concentric rings (radius, vertex count) with vertices at
/// uniform angles from 0, zipped ring to ring.
fn rings_chart(rings: &[(f64, usize)]) -> (Vec<f64>, Vec<usize>) {
    let mut chart = vec![0.0, 0.0];
    let mut start = vec![0usize];
    let mut count = vec![1usize];
    for &(r, n) in rings {
        start.push(chart.len() / 2);
        count.push(n);
        for j in 0..n {
            let a = 2.0 * PI * j as f64 / n as f64;
            chart.push(r * a.cos());
            chart.push(r * a.sin());
        }
    }
    let mut cells = Vec::new();
    let n1 = count[1];
    for j in 0..n1 {
        cells.extend([0, 1 + j, 1 + (j + 1) % n1]);
    }
    for i in 1..rings.len() {
        let (sa, na) = (start[i], count[i]);
        let (sb, nb) = (start[i + 1], count[i + 1]);
        let (mut ia, mut ib) = (0usize, 0usize);
        while ia < na || ib < nb {
            let next_a = (ia + 1) as f64 / na as f64;
            let next_b = (ib + 1) as f64 / nb as f64;
            let va = sa + ia % na;
            let vb = sb + ib % nb;
            if ib >= nb || (ia < na && next_a < next_b) {
                cells.extend([va, sa + (ia + 1) % na, vb]);
                ia += 1;
            } else {
                cells.extend([va, sb + (ib + 1) % nb, vb]);
                ib += 1;
            }
        }
    }
    (chart, cells)
}

/// Kuhn subdivision of a cube grid, keeping tetrahedra whose centroid lies
/// in the ball; boundary vertices are then pushed radially onto the sphere.
fn ball3_chart(radius: f64, h: f64) -> (Vec<f64>, Vec<usize>) {
    let n = ((radius / h).ceil() as i64).max(1);
    let step = radius / n as f64;
    let kuhn: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut used: HashMap<[i64; 3], usize> = HashMap::new();
    let mut coords: Vec<[i64; 3]> = Vec::new();
    let mut cells = Vec::new();
    for i in -n - 1..=n {
        for j in -n - 1..=n {
            for k in -n - 1..=n {
                for perm in &kuhn {
                    let mut p = [i, j, k];
                    let mut tet = vec![p];
                    for &ax in perm {
                        p[ax] += 1;
                        tet.push(p);
                    }
                    let c: Vec<f64> = (0..3).map(|a| tet.iter().map(|t| t[a] as f64).sum::<f64>() / 4.0 * step).collect();
                    if norm(&c) >= radius {
                        continue;
                    }
                    for t in &tet {
                        let id = *used.entry(*t).or_insert_with(|| {
                            coords.push(*t);
                            coords.len() - 1
                        });
                        cells.push(id);
                    }
                }
            }
        }
    }
    let mut chart: Vec<f64> = coords.iter().flat_map(|t| t.iter().map(|v| *v as f64 * step)).collect();
    let mut faces: HashMap<[usize; 3], usize> = HashMap::new();
    for tet in cells.chunks_exact(4) {
        for skip in 0..4 {
            let mut f = [0usize; 3];
            let mut a = 0;
            for (i, v) in tet.iter().enumerate() {
                if i != skip {
                    f[a] = *v;
                    a += 1;
                }
            }
            f.sort_unstable();
            *faces.entry(f).or_insert(0) += 1;
        }
    }
    let mut on_boundary = vec![false; coords.len()];
    for (f, c) in faces {
        if c == 1 {
            f.iter().for_each(|&v| on_boundary[v] = true);
        }
    }
    for (v, b) in on_boundary.iter().enumerate() {
        if *b {
            let y = &mut chart[v * 3..v * 3 + 3];
            let r = norm(y);
            y.iter_mut().for_each(|t| *t *= radius / r);
        }
    }
    (chart, cells)
}

fn icosphere(d: usize, h: f64) -> (Vec<f64>, Vec<usize>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    for p in &mut v {
        let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        p.iter_mut().for_each(|x| *x /= n);
    }
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    // icosahedron edge on the unit sphere ≈ 1.107; each level halves it
    let mut edge = 1.1071;
    while edge > h {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut nf = Vec::with_capacity(f.len() * 4);
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<[f64; 3]>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let p = [v[a][0] + v[b][0], v[a][1] + v[b][1], v[a][2] + v[b][2]];
                let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                v.push([p[0] / n, p[1] / n, p[2] / n]);
                v.len() - 1
            })
        };
        for tri in &f {
            let ab = midpoint(tri[0], tri[1], &mut v);
            let bc = midpoint(tri[1], tri[2], &mut v);
            let ca = midpoint(tri[2], tri[0], &mut v);
            nf.push([tri[0], ab, ca]);
            nf.push([tri[1], bc, ab]);
            nf.push([tri[2], ca, bc]);
            nf.push([ab, bc, ca]);
        }
        f = nf;
        edge /= 2.0;
    }
    let mut pts = Vec::with_capacity(v.len() * d);
    for p in &v {
        let mut x = vec![0.0; d];
        x[..3].copy_from_slice(p);
        pts.extend(x);
    }
    (pts, f.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_area_converges_quadratically() {
        let s = Scene::flat_disk(2, 1, 0);
        let mut errs = Vec::new();
        for &h in &[0.1, 0.05, 0.025] {
            let mesh = Mesh::ball(&s, 1.0, h).unwrap();
            errs.push((mesh.total_volume() - PI).abs());
            assert!(errs.last().unwrap() < &(2.0 * h * h));
        }
        assert!(errs[0] / errs[2] > 12.0);
    }

    #[test]
    fn cap_area_matches_closed_form() {
        let s = Scene::equatorial_sphere(2);
        for &h in &[0.1, 0.05] {
            let mesh = Mesh::ball(&s, 1.0, h).unwrap();
            let err = (mesh.total_volume() - s.ball_volume(1.0)).abs();
            assert!(err < 2.0 * h * h, "{err}");
        }
    }

    #[test]
    fn closed_sphere_is_exact() {
        let s = Scene::equatorial_sphere(2);
        let mesh = Mesh::closed(&s, 0.2).unwrap();
        assert!((mesh.total_volume() - 4.0 * PI).abs() < 1e-9);
        assert!(mesh.boundary_vertices().is_empty());
        let circle = Mesh::closed(&Scene::equatorial_sphere(1), 0.01).unwrap();
        assert!((circle.total_volume() - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn boundary_is_a_loop() {
        let s = Scene::flat_disk(2, 1, 0);
        let mesh = Mesh::ball(&s, 1.0, 0.1).unwrap();
        let b = mesh.boundary_vertices();
        assert_eq!(b.len(), 60);
        for &v in &b {
            assert!((mesh.radius(v) - 1.0).abs() < 1e-12);
            let nb = mesh.neighbors(v).iter().filter(|&&w| mesh.is_boundary(w)).count();
            assert_eq!(nb, 2);
        }
        let seg = Mesh::ball(&Scene::flat_disk(1, 1, 0), 1.0, 0.1).unwrap();
        assert_eq!(seg.boundary_vertices().len(), 2);
    }

    #[test]
    fn ball3_volume() {
        let s = Scene::flat_disk(3, 1, 0);
        let mesh = Mesh::ball(&s, 1.0, 0.1).unwrap();
        let err = (mesh.total_volume() - 4.0 * PI / 3.0).abs() / (4.0 * PI / 3.0);
        assert!(err < 0.02, "{err}");
    }

    #[test]
    fn locate_and_barycentric() {
        for s in [Scene::flat_disk(2, 1, 0), Scene::equatorial_sphere(2)] {
            let mesh = Mesh::ball(&s, 0.9, 0.05).unwrap();
            for y in [[0.0, 0.0], [0.31, -0.2], [-0.6, 0.55], [0.0, 0.8]] {
                let x = s.chart(&y);
                let (c, lam) = mesh.locate(&x).unwrap();
                assert!((lam.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(lam.iter().all(|l| *l > -1e-9));
                // barycentric combination of the chart coordinates is close to y
                let mut yy = [0.0, 0.0];
                for (j, &v) in mesh.cell(c).iter().enumerate() {
                    for i in 0..2 {
                        yy[i] += lam[j] * mesh.chart_coords(v)[i];
                    }
                }
                assert!(((yy[0] - y[0]).powi(2) + (yy[1] - y[1]).powi(2)).sqrt() < 1e-3);
            }
            assert!(mesh.locate(&s.chart(&[0.95, 0.0])).is_err());
        }
    }

    #[test]
    fn spherical_triangle_octant() {
        let a = [1.0, 0.0, 0.0, 0.0];
        let b = [0.0, 1.0, 0.0, 0.0];
        let c = [0.0, 0.0, 1.0, 0.0];
        assert!((spherical_triangle_area(&a, &b, &c) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn ball_fractions_cut_exact_disks() {
        let s = Scene::flat_disk(2, 1, 0);
        let mesh = Mesh::ball(&s, 1.0, 0.1).unwrap();
        for (c, r) in [([0.0, 0.0, 0.0], 0.37), ([0.2, -0.1, 0.0], 0.5)] {
            let area: f64 = mesh.ball_fractions(&c, r).iter().map(|&(k, f)| f * mesh.geom(k).weight).sum();
            assert!((area - PI * r * r).abs() < 1e-12, "{area}");
        }
        let sph = Scene::equatorial_sphere(2);
        let cap = Mesh::ball(&sph, 1.0, 0.05).unwrap();
        let area: f64 = cap.ball_fractions(&sph.pole(), 0.6).iter().map(|&(k, f)| f * cap.geom(k).weight).sum();
        assert!((area - sph.ball_volume(0.6)).abs() < 2e-3, "{area}");
        let line = Mesh::ball(&Scene::flat_disk(1, 1, 0), 1.0, 0.1).unwrap();
        let len: f64 = line.ball_fractions(&[0.0, 0.0], 0.33).iter().map(|&(k, f)| f * line.geom(k).weight).sum();
        assert!((len - 0.66).abs() < 1e-12);
    }
}
