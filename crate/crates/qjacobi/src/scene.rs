//! Built-in analytic scenes: a minimal submanifold Σ^m inside M ⊂ R^d.
//!
//! * `flat_disk`: Σ = R^m × {0} inside M = R^{m+k}, embedded in R^{m+k+K}.
//! * `equatorial_sphere`: Σ = S^m = {x_{m+1} = 0} inside M = S^{m+1} ⊂ R^{m+2}.
//!
//! Points are ambient vectors. Charts are geodesic normal coordinates around
//! the scene pole (the origin, resp. e_0) in the frame e_1..e_m (resp. e_1..e_m).

use crate::error::{Error, Result};
use crate::linalg::{axpy, complete_basis, dot, norm, project, unit};
use std::collections::BTreeMap;
use std::f64::consts::PI;

const FIBER_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SceneKind {
    FlatDisk { m: usize, k: usize, trailing: usize },
    EquatorialSphere { m: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    kind: SceneKind,
}

/// Sup norms of A, Ā and R over Σ (operator norms on unit vectors).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupNorms {
    pub a: f64,
    pub abar: f64,
    pub r: f64,
}

pub const SCENE_NAMES: [&str; 2] = ["flat_disk", "equatorial_sphere"];

fn param(params: &BTreeMap<String, i64>, key: &str, default: Option<i64>) -> Result<i64> {
    match params.get(key) {
        Some(v) => Ok(*v),
        None => default.ok_or_else(|| Error::InvalidParam(format!("missing scene parameter `{key}`"))),
    }
}

pub fn builtin_scene(name: &str, params: &BTreeMap<String, i64>) -> Result<Scene> {
    for key in params.keys() {
        let ok = match name {
            "flat_disk" => ["m", "k", "trailing"].contains(&key.as_str()),
            "equatorial_sphere" => key == "m",
            _ => true,
        };
        if !ok {
            return Err(Error::InvalidParam(format!("unknown parameter `{key}` for scene {name}")));
        }
    }
    match name {
        "flat_disk" => {
            let m = param(params, "m", Some(2))?;
            let k = param(params, "k", Some(1))?;
            let t = param(params, "trailing", Some(0))?;
            if !(1..=3).contains(&m) || k < 1 || t < 0 {
                return Err(Error::InvalidParam(format!(
                    "flat_disk needs m in 1..=3, k >= 1, trailing >= 0 (got m={m}, k={k}, trailing={t})"
                )));
            }
            Ok(Scene::flat_disk(m as usize, k as usize, t as usize))
        }
        "equatorial_sphere" => {
            let m = param(params, "m", Some(2))?;
            if m < 1 {
                return Err(Error::InvalidParam(format!("equatorial_sphere needs m >= 1 (got {m})")));
            }
            Ok(Scene::equatorial_sphere(m as usize))
        }
        other => Err(Error::UnknownScene(other.to_string())),
    }
}

impl Scene {
    pub fn flat_disk(m: usize, k: usize, trailing: usize) -> Self {
        Self { kind: SceneKind::FlatDisk { m, k, trailing } }
    }

    pub fn equatorial_sphere(m: usize) -> Self {
        Self { kind: SceneKind::EquatorialSphere { m } }
    }

    pub fn kind(&self) -> SceneKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            SceneKind::FlatDisk { .. } => "flat_disk",
            SceneKind::EquatorialSphere { .. } => "equatorial_sphere",
        }
    }

    /// Parameters as written in config files.
    pub fn params(&self) -> BTreeMap<String, i64> {
        let mut p = BTreeMap::new();
        match self.kind {
            SceneKind::FlatDisk { m, k, trailing } => {
                p.insert("m".into(), m as i64);
                p.insert("k".into(), k as i64);
                p.insert("trailing".into(), trailing as i64);
            }
            SceneKind::EquatorialSphere { m } => {
                p.insert("m".into(), m as i64);
            }
        }
        p
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.kind, SceneKind::FlatDisk { .. })
    }

    /// dim Σ.
    pub fn m(&self) -> usize {
        match self.kind {
            SceneKind::FlatDisk { m, .. } | SceneKind::EquatorialSphere { m } => m,
        }
    }

    /// Codimension of Σ in M.
    pub fn k(&self) -> usize {
        match self.kind {
            SceneKind::FlatDisk { k, .. } => k,
            SceneKind::EquatorialSphere { .. } => 1,
        }
    }

    /// Ambient dimension d.
    pub fn d(&self) -> usize {
        match self.kind {
            SceneKind::FlatDisk { m, k, trailing } => m + k + trailing,
            SceneKind::EquatorialSphere { m } => m + 2,
        }
    }

    pub fn injectivity_bound(&self) -> f64 {
        match self.kind {
            SceneKind::FlatDisk { .. } => f64::INFINITY,
            SceneKind::EquatorialSphere { .. } => PI,
        }
    }

    pub fn pole(&self) -> Vec<f64> {
        match self.kind {
            SceneKind::FlatDisk { .. } => vec![0.0; self.d()],
            SceneKind::EquatorialSphere { .. } => unit(self.d(), 0),
        }
    }

    /// Orthonormal frame of T_pΣ at the pole defining the chart.
    pub fn pole_frame(&self) -> Vec<Vec<f64>> {
        let d = self.d();
        match self.kind {
            SceneKind::FlatDisk { m, .. } => (0..m).map(|i| unit(d, i)).collect(),
            SceneKind::EquatorialSphere { m } => (1..=m).map(|i| unit(d, i)).collect(),
        }
    }

    /// Normal coordinates around the pole: y ↦ exp_pole(Σ y_i e_i).
    pub fn chart(&self, y: &[f64]) -> Vec<f64> {
        let frame = self.pole_frame();
        let mut v = vec![0.0; self.d()];
        for (yi, e) in y.iter().zip(&frame) {
            axpy(&mut v, *yi, e);
        }
        self.exp_sigma_unchecked(&self.pole(), &v)
    }

    pub fn chart_inverse(&self, x: &[f64]) -> Vec<f64> {
        let v = self.log_sigma(&self.pole(), x);
        self.pole_frame().iter().map(|e| dot(&v, e)).collect()
    }

    /// Orthonormal frame ξ_1..ξ_m of T_xΣ.
    pub fn tangent_frame(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let d = self.d();
        match self.kind {
            SceneKind::FlatDisk { m, .. } => (0..m).map(|i| unit(d, i)).collect(),
            SceneKind::EquatorialSphere { m } => {
                let xn = x.to_vec();
                let cands: Vec<Vec<f64>> = (0..=m).map(|i| unit(d, i)).collect();
                complete_basis(&[xn], &cands, m)
            }
        }
    }

    /// Orthonormal frame ν_1..ν_k of the normal fiber of Σ in M at x.
    pub fn normal_frame(&self, _x: &[f64]) -> Vec<Vec<f64>> {
        let d = self.d();
        match self.kind {
            SceneKind::FlatDisk { m, k, .. } => (m..m + k).map(|i| unit(d, i)).collect(),
            SceneKind::EquatorialSphere { m } => vec![unit(d, m + 1)],
        }
    }

    /// Orthonormal frame of T_xM.
    pub fn tangent_m_frame(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut f = self.tangent_frame(x);
        f.extend(self.normal_frame(x));
        f
    }

    pub fn normal_project(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        project(v, &self.normal_frame(x))
    }

    pub fn tangent_m_project(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        project(v, &self.tangent_m_frame(x))
    }

    /// Distance of `v` from the normal fiber at x.
    pub fn fiber_deviation(&self, x: &[f64], v: &[f64]) -> f64 {
        let p = self.normal_project(x, v);
        norm(&crate::linalg::sub(v, &p))
    }

    fn check_fiber(&self, x: &[f64], v: &[f64]) -> Result<()> {
        let dev = self.fiber_deviation(x, v);
        if dev > FIBER_TOL * norm(v).max(1.0) {
            return Err(Error::OffFiber { deviation: dev });
        }
        Ok(())
    }

    /// Distance of x from Σ (0 for points of Σ).
    pub fn sigma_deviation(&self, x: &[f64]) -> f64 {
        match self.kind {
            SceneKind::FlatDisk { m, .. } => norm(&x[m..]),
            SceneKind::EquatorialSphere { m } => {
                let r = norm(&x[..=m]);
                ((r - 1.0).powi(2) + x[m + 1].powi(2)).sqrt()
            }
        }
    }

    /// Second fundamental form A(X, Y) of Σ in M; both built-in Σ are totally geodesic.
    pub fn second_form(&self, _x: &[f64], _u: &[f64], _v: &[f64]) -> Vec<f64> {
        vec![0.0; self.d()]
    }

    /// Second fundamental form Ā(X, Y) of M in R^d for X, Y ∈ T_xM.
    pub fn ambient_second_form(&self, x: &[f64], u: &[f64], v: &[f64]) -> Vec<f64> {
        match self.kind {
            SceneKind::FlatDisk { .. } => vec![0.0; self.d()],
            SceneKind::EquatorialSphere { .. } => {
                let c = -dot(u, v);
                x.iter().map(|xi| c * xi).collect()
            }
        }
    }

    /// Curvature of M: R(X, Y)Z with ⟨R(X,Y)Y, X⟩ the sectional curvature.
    pub fn riemann(&self, _x: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
        match self.kind {
            SceneKind::FlatDisk { .. } => vec![0.0; self.d()],
            SceneKind::EquatorialSphere { .. } => {
                let bc = dot(b, c);
                let ac = dot(a, c);
                a.iter().zip(b).map(|(ai, bi)| bc * ai - ac * bi).collect()
            }
        }
    }

    /// Ri(u, v) = Σ_i ⟨R(u, ξ_i)ξ_i, v⟩ for u, v in the normal fiber at x.
    pub fn partial_ricci(&self, x: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_fiber(x, u)?;
        self.check_fiber(x, v)?;
        Ok(self.partial_ricci_unchecked(x, u, v))
    }

    pub(crate) fn partial_ricci_unchecked(&self, x: &[f64], u: &[f64], v: &[f64]) -> f64 {
        if self.is_flat() {
            return 0.0;
        }
        self.tangent_frame(x).iter().map(|xi| dot(&self.riemann(x, u, xi, xi), v)).sum()
    }

    /// (Σ_ij ⟨A(ξ_i, ξ_j), u⟩², [|Ā(ξ_i, u)|²]_i) for u in the normal fiber.
    pub fn second_form_contract(&self, x: &[f64], u: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_fiber(x, u)?;
        Ok(self.second_form_contract_unchecked(x, u))
    }

    pub(crate) fn second_form_contract_unchecked(&self, x: &[f64], u: &[f64]) -> (f64, Vec<f64>) {
        let frame = self.tangent_frame(x);
        let mut a = 0.0;
        for xi in &frame {
            for xj in &frame {
                let s = dot(&self.second_form(x, xi, xj), u);
                a += s * s;
            }
        }
        let row = frame
            .iter()
            .map(|xi| {
                let v = self.ambient_second_form(x, xi, u);
                dot(&v, &v)
            })
            .collect();
        (a, row)
    }

    pub fn sup_norms(&self) -> SupNorms {
        match self.kind {
            SceneKind::FlatDisk { .. } => SupNorms { a: 0.0, abar: 0.0, r: 0.0 },
            // |Ā(X,Y)| = |⟨X,Y⟩| and |⟨Y,Z⟩X − ⟨X,Z⟩Y| <= 1 on unit vectors
            SceneKind::EquatorialSphere { .. } => SupNorms { a: 0.0, abar: 1.0, r: 1.0 },
        }
    }

    /// Upper bound of |B(u)|/|u|^2 pointwise: Σ_i|Ā(ξ_i,·)|² + 2|A|² m² + m|R|.
    pub fn b_bound(&self) -> f64 {
        let s = self.sup_norms();
        let m = self.m() as f64;
        m * s.abar * s.abar + 2.0 * m * m * s.a * s.a + m * s.r
    }

    fn exp_sigma_unchecked(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        match self.kind {
            SceneKind::FlatDisk { .. } => p.iter().zip(v).map(|(a, b)| a + b).collect(),
            SceneKind::EquatorialSphere { .. } => sphere_exp(p, v),
        }
    }

    /// Geodesic exponential on Σ for v ∈ T_pΣ.
    pub fn exp_sigma(&self, p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let r = norm(v);
        if r > self.injectivity_bound() {
            return Err(Error::InjectivityExceeded { radius: r, bound: self.injectivity_bound() });
        }
        Ok(self.exp_sigma_unchecked(p, v))
    }

    /// Inverse of exp_p on Σ (the antipode maps to 0 by convention).
    pub fn log_sigma(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
        match self.kind {
            SceneKind::FlatDisk { .. } => x.iter().zip(p).map(|(a, b)| a - b).collect(),
            SceneKind::EquatorialSphere { .. } => sphere_log(p, x),
        }
    }

    pub fn distance_sigma(&self, p: &[f64], x: &[f64]) -> f64 {
        match self.kind {
            SceneKind::FlatDisk { .. } => norm(&crate::linalg::sub(x, p)),
            SceneKind::EquatorialSphere { .. } => sphere_angle(p, x),
        }
    }

    /// Normal exponential exp_x(w) in M for w normal at x ∈ Σ.
    pub fn exp_normal(&self, x: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let r = norm(w);
        if r > self.injectivity_bound() {
            return Err(Error::InjectivityExceeded { radius: r, bound: self.injectivity_bound() });
        }
        Ok(self.exp_m(x, w))
    }

    /// exp in M, tangent part of w only for the sphere.
    pub(crate) fn exp_m(&self, x: &[f64], w: &[f64]) -> Vec<f64> {
        match self.kind {
            SceneKind::FlatDisk { .. } => x.iter().zip(w).map(|(a, b)| a + b).collect(),
            SceneKind::EquatorialSphere { .. } => sphere_exp(x, w),
        }
    }

    /// Directional derivative of (x, w) ↦ exp_x(w) along (dx, dw).
    pub fn exp_m_differential(&self, x: &[f64], w: &[f64], dx: &[f64], dw: &[f64]) -> Vec<f64> {
        match self.kind {
            SceneKind::FlatDisk { .. } => dx.iter().zip(dw).map(|(a, b)| a + b).collect(),
            SceneKind::EquatorialSphere { .. } => sphere_exp_differential(x, w, dx, dw),
        }
    }

    /// Volume of the geodesic ball B_r in Σ.
    pub fn ball_volume(&self, r: f64) -> f64 {
        let m = self.m();
        match self.kind {
            SceneKind::FlatDisk { .. } => unit_ball_volume(m) * r.powi(m as i32),
            SceneKind::EquatorialSphere { .. } => {
                let r = r.min(PI);
                sphere_surface(m - 1) * integrate_sin_pow(m - 1, r)
            }
        }
    }

    /// Measure of the geodesic sphere ∂B_r in Σ.
    pub fn sphere_measure(&self, r: f64) -> f64 {
        let m = self.m();
        match self.kind {
            SceneKind::FlatDisk { .. } => m as f64 * unit_ball_volume(m) * r.powi(m as i32 - 1),
            SceneKind::EquatorialSphere { .. } => sphere_surface(m - 1) * r.sin().powi(m as i32 - 1),
        }
    }

    /// Jacobian of exp_pole in normal coordinates at radius ρ.
    pub fn exp_jacobian(&self, rho: f64) -> f64 {
        match self.kind {
            SceneKind::FlatDisk { .. } => 1.0,
            SceneKind::EquatorialSphere { m } => {
                if rho < 1e-8 {
                    1.0 - (m as f64 - 1.0) * rho * rho / 6.0
                } else {
                    (rho.sin() / rho).powi(m as i32 - 1)
                }
            }
        }
    }

    /// Volume of Σ when closed.
    pub fn total_volume(&self) -> Option<f64> {
        match self.kind {
            SceneKind::FlatDisk { .. } => None,
            SceneKind::EquatorialSphere { m } => Some(sphere_surface(m)),
        }
    }
}

/// Volume of the unit ball in R^m.
pub fn unit_ball_volume(m: usize) -> f64 {
    match m {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / m as f64 * unit_ball_volume(m - 2),
    }
}

/// Area of the unit sphere S^n ⊂ R^{n+1}.
pub fn sphere_surface(n: usize) -> f64 {
    (n + 1) as f64 * unit_ball_volume(n + 1)
}

// ∫_0^r sin^n
fn integrate_sin_pow(n: usize, r: f64) -> f64 {
    match n {
        0 => r,
        1 => 1.0 - r.cos(),
        _ => {
            let nf = n as f64;
            -r.sin().powi(n as i32 - 1) * r.cos() / nf + (nf - 1.0) / nf * integrate_sin_pow(n - 2, r)
        }
    }
}

pub(crate) fn sphere_angle(p: &[f64], x: &[f64]) -> f64 {
    let c = dot(p, x);
    let mut w = x.to_vec();
    axpy(&mut w, -c, p);
    norm(&w).atan2(c)
}

fn sphere_exp(x: &[f64], w: &[f64]) -> Vec<f64> {
    // tangent part of w at x
    let mut wt = w.to_vec();
    axpy(&mut wt, -dot(w, x), x);
    let s = norm(&wt);
    let (c, sc) = (s.cos(), sinc(s));
    x.iter().zip(&wt).map(|(a, b)| c * a + sc * b).collect()
}

fn sphere_log(p: &[f64], x: &[f64]) -> Vec<f64> {
    let c = dot(p, x);
    let mut w = x.to_vec();
    axpy(&mut w, -c, p);
    let s = norm(&w);
    if s == 0.0 {
        return vec![0.0; p.len()];
    }
    let theta = s.atan2(c);
    w.iter().map(|v| v * theta / s).collect()
}

fn sinc(s: f64) -> f64 {
    if s.abs() < 1e-4 {
        1.0 - s * s / 6.0 + s.powi(4) / 120.0
    } else {
        s.sin() / s
    }
}

// (sinc)'(s)/s, smooth at 0
fn sinc_prime_over_s(s: f64) -> f64 {
    if s.abs() < 1e-3 {
        -1.0 / 3.0 + s * s / 30.0 - s.powi(4) / 840.0
    } else {
        (s * s.cos() - s.sin()) / (s * s * s)
    }
}

fn sphere_exp_differential(x: &[f64], w: &[f64], dx: &[f64], dw: &[f64]) -> Vec<f64> {
    let wx = dot(w, x);
    let mut wt = w.to_vec();
    axpy(&mut wt, -wx, x);
    // d(wt) = dw − (dw·x + w·dx) x − (w·x) dx
    let mut dwt = dw.to_vec();
    axpy(&mut dwt, -(dot(dw, x) + dot(w, dx)), x);
    axpy(&mut dwt, -wx, dx);
    let s = norm(&wt);
    let wdw = dot(&wt, &dwt);
    let (c, sc) = (s.cos(), sinc(s));
    // E = cos s x + sinc(s) wt
    let mut out = vec![0.0; x.len()];
    axpy(&mut out, -sc * wdw, x);
    axpy(&mut out, c, dx);
    axpy(&mut out, sinc_prime_over_s(s) * wdw, &wt);
    axpy(&mut out, sc, &dwt);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sphere_point(rng: &mut ChaCha8Rng, s: &Scene) -> Vec<f64> {
        let m = s.m();
        let y: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.5..1.5)).collect();
        s.chart(&y)
    }

    #[test]
    fn flat_tensors_vanish() {
        let s = Scene::flat_disk(2, 1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x = s.chart(&[rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
            let nu = s.normal_frame(&x)[0].clone();
            let xi = s.tangent_frame(&x);
            assert!(s.second_form(&x, &xi[0], &xi[1]).iter().all(|v| *v == 0.0));
            assert!(s.ambient_second_form(&x, &xi[0], &nu).iter().all(|v| *v == 0.0));
            assert!(s.riemann(&x, &nu, &xi[0], &xi[0]).iter().all(|v| *v == 0.0));
            assert_eq!(s.partial_ricci(&x, &nu, &nu).unwrap(), 0.0);
            assert_eq!(s.second_form_contract(&x, &nu).unwrap(), (0.0, vec![0.0, 0.0]));
        }
    }

    #[test]
    fn sphere_frames_and_ricci() {
        for m in 1..=3 {
            let s = Scene::equatorial_sphere(m);
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            for _ in 0..50 {
                let x = random_sphere_point(&mut rng, &s);
                assert!(s.sigma_deviation(&x) < 1e-12);
                let xi = s.tangent_frame(&x);
                let nu = s.normal_frame(&x);
                assert_eq!(xi.len(), m);
                for a in xi.iter().chain(&nu) {
                    assert!(dot(a, &x).abs() < 1e-8);
                    for b in xi.iter().chain(&nu) {
                        let g = dot(a, b);
                        let t = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
                        assert!((g - t).abs() < 1e-8);
                    }
                }
                // trace of A vanishes
                let tr: f64 = xi.iter().map(|e| norm(&s.second_form(&x, e, e))).sum();
                assert!(tr < 1e-8);
                let ri = s.partial_ricci(&x, &nu[0], &nu[0]).unwrap();
                assert!((ri - m as f64).abs() < 1e-10);
                let u = scale_vec(&nu[0], 2.0);
                let v = scale_vec(&nu[0], 3.0);
                assert!((s.partial_ricci(&x, &u, &v).unwrap() - 6.0 * m as f64).abs() < 1e-10);
                let (a, row) = s.second_form_contract(&x, &nu[0]).unwrap();
                assert_eq!(a, 0.0);
                // Ā(ξ_i, ν) = −⟨ξ_i, ν⟩x = 0
                assert!(row.iter().all(|v| v.abs() < 1e-20));
                let diag: f64 = xi.iter().map(|e| norm(&s.ambient_second_form(&x, e, e)).powi(2)).sum();
                assert!((diag - m as f64).abs() < 1e-12);
            }
        }
    }

    fn scale_vec(v: &[f64], a: f64) -> Vec<f64> {
        v.iter().map(|x| x * a).collect()
    }

    #[test]
    fn off_fiber_rejected() {
        let s = Scene::equatorial_sphere(2);
        let x = s.pole();
        let xi = s.tangent_frame(&x)[0].clone();
        assert!(matches!(s.partial_ricci(&x, &xi, &xi), Err(Error::OffFiber { .. })));
    }

    #[test]
    fn normal_exponential_is_great_circle() {
        let s = Scene::equatorial_sphere(2);
        let x = s.chart(&[0.3, -0.7]);
        let nu = s.normal_frame(&x)[0].clone();
        for &t in &[0.0, 0.1, 1.0, 2.5] {
            let e = s.exp_normal(&x, &scale_vec(&nu, t)).unwrap();
            for i in 0..4 {
                assert!((e[i] - (t.cos() * x[i] + t.sin() * nu[i])).abs() < 1e-14);
            }
        }
        assert!(matches!(s.exp_normal(&x, &scale_vec(&nu, 4.0)), Err(Error::InjectivityExceeded { .. })));
    }

    #[test]
    fn sigma_exponential_preserves_length() {
        let s = Scene::equatorial_sphere(2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = random_sphere_point(&mut rng, &s);
            let xi = s.tangent_frame(&p);
            let mut v = vec![0.0; 4];
            axpy(&mut v, rng.gen_range(-1.0..1.0), &xi[0]);
            axpy(&mut v, rng.gen_range(-1.0..1.0), &xi[1]);
            let q = s.exp_sigma(&p, &v).unwrap();
            assert!((s.distance_sigma(&p, &q) - norm(&v)).abs() < 1e-8);
            let back = s.log_sigma(&p, &q);
            assert!(norm(&crate::linalg::sub(&back, &v)) < 1e-10);
        }
        let f = Scene::flat_disk(2, 1, 1);
        let p = vec![0.5, 0.1, 0.0, 0.0];
        let v = vec![0.25, -1.0, 0.0, 0.0];
        assert_eq!(f.exp_sigma(&p, &v).unwrap(), vec![0.75, -0.9, 0.0, 0.0]);
    }

    #[test]
    fn exp_differential_matches_finite_difference() {
        let s = Scene::equatorial_sphere(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x = random_sphere_point(&mut rng, &s);
            let xi = s.tangent_frame(&x);
            let w: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let w = s.tangent_m_project(&x, &w);
            let dw: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dx = xi[0].clone();
            let an = s.exp_m_differential(&x, &w, &dx, &dw);
            let h = 1e-6;
            let f = |t: f64| {
                let xt = s.exp_sigma_unchecked(&x, &scale_vec(&dx, t));
                let wt: Vec<f64> = w.iter().zip(&dw).map(|(a, b)| a + t * b).collect();
                s.exp_m(&xt, &wt)
            };
            let (a, b) = (f(h), f(-h));
            for i in 0..4 {
                let fd = (a[i] - b[i]) / (2.0 * h);
                assert!((fd - an[i]).abs() < 1e-6, "{fd} vs {}", an[i]);
            }
        }
    }

    #[test]
    fn exp_jacobian_tends_to_one() {
        let s = Scene::equatorial_sphere(2);
        for &r in &[0.1, 0.05, 0.025] {
            let dev = (1.0 - s.exp_jacobian(r)).abs();
            assert!(dev <= 0.2 * r * r);
        }
    }

    #[test]
    fn builtin_scene_parsing() {
        let mut p = BTreeMap::new();
        p.insert("m".to_string(), 2);
        p.insert("k".to_string(), 2);
        let s = builtin_scene("flat_disk", &p).unwrap();
        assert_eq!((s.m(), s.k(), s.d()), (2, 2, 4));
        assert!(matches!(builtin_scene("torus", &p), Err(Error::UnknownScene(_))));
        p.insert("m".to_string(), 4);
        assert!(builtin_scene("flat_disk", &p).is_err());
        assert!(builtin_scene("equatorial_sphere", &p).is_err());
    }

    #[test]
    fn volumes() {
        let s = Scene::equatorial_sphere(2);
        assert!((s.ball_volume(PI) - 4.0 * PI).abs() < 1e-12);
        assert!((s.ball_volume(0.5) - 2.0 * PI * (1.0 - 0.5f64.cos())).abs() < 1e-12);
        let s3 = Scene::equatorial_sphere(3);
        assert!((s3.ball_volume(PI) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((Scene::flat_disk(3, 1, 0).ball_volume(1.0) - 4.0 * PI / 3.0).abs() < 1e-12);
    }
}
