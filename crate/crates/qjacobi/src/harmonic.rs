//! Q-valued circle maps: irreducible decomposition, Fourier data, the rolled
//! harmonic extension to a disk, and 0-homogeneous extensions to balls.
//!
//! Coefficients are stored at unit scale: a piece with winding k and
//! coefficients (a_n, b_n) has harmonic generator
//! ζ(R, α) = a_0/2 + Σ R^n (a_n cos nα + b_n sin nα), and its trace on the
//! circle of radius r is Σ_m ⟦ζ(r, (θ + 2πm)/k)⟧.

use crate::aq::{self, QPoint};
use crate::assignment;
use crate::error::{Error, Result};
use crate::linalg::{dot, gauss_legendre, pairwise_sum};
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::PI;

pub const DEFAULT_N_MAX: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct CirclePiece {
    pub k: usize,
    pub a0: Vec<f64>,
    /// a[n-1] = a_n, n = 1..=N.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    /// Generator samples at the sampled radius on the grid α_j = 2πj/(k·n).
    pub samples: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircleMapDecomposition {
    pub q: usize,
    pub d: usize,
    /// Radius of the circle the input was sampled on.
    pub radius: f64,
    pub n_max: usize,
    pub pieces: Vec<CirclePiece>,
    /// Largest g-distance between the input samples and the truncated series.
    pub reassembly_error: f64,
}

impl CirclePiece {
    /// ζ(R, α) and its derivatives ∂_R ζ, ∂_α ζ.
    fn zeta(&self, rr: f64, alpha: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let d = self.a0.len();
        let mut v: Vec<f64> = self.a0.iter().map(|x| x / 2.0).collect();
        let mut dr = vec![0.0; d];
        let mut da = vec![0.0; d];
        let mut rn1 = 1.0; // R^(n-1)
        for n in 1..=self.a.len() {
            let rn = rn1 * rr;
            let (s, c) = (n as f64 * alpha).sin_cos();
            let nf = n as f64;
            for i in 0..d {
                let (an, bn) = (self.a[n - 1][i], self.b[n - 1][i]);
                v[i] += rn * (an * c + bn * s);
                dr[i] += nf * rn1 * (an * c + bn * s);
                da[i] += nf * rn * (-an * s + bn * c);
            }
            rn1 = rn;
        }
        (v, dr, da)
    }

    /// Σ_n R^{2n}(|a_n|² + |b_n|²) weighted by w(n).
    fn mode_sum(&self, rr: f64, w: impl Fn(f64) -> f64) -> f64 {
        let mut s = 0.0;
        for n in 1..=self.a.len() {
            let c = dot(&self.a[n - 1], &self.a[n - 1]) + dot(&self.b[n - 1], &self.b[n - 1]);
            s += rr.powi(2 * n as i32) * w(n as f64) * c;
        }
        s
    }
}

impl CircleMapDecomposition {
    /// Builds a decomposition from unit-scale Fourier data: (k, a0, [a_n], [b_n]).
    pub fn from_modes(d: usize, modes: Vec<(usize, Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>)>) -> Result<Self> {
        let mut pieces = Vec::new();
        let mut q = 0;
        let mut n_max = 0;
        for (k, a0, mut a, mut b) in modes {
            if k == 0 {
                return Err(Error::InvalidParam("winding order k must be >= 1".into()));
            }
            let n = a.len().max(b.len());
            a.resize(n, vec![0.0; d]);
            b.resize(n, vec![0.0; d]);
            if a0.len() != d || a.iter().chain(&b).any(|v| v.len() != d) {
                return Err(Error::DimensionMismatch { what: "Fourier coefficient length", left: a0.len(), right: d });
            }
            n_max = n_max.max(n);
            q += k;
            pieces.push(CirclePiece { k, a0, a, b, samples: Vec::new() });
        }
        if q == 0 {
            return Err(Error::InvalidParam("decomposition needs at least one piece".into()));
        }
        Ok(Self { q, d, radius: 1.0, n_max, pieces, reassembly_error: 0.0 })
    }

    /// φ(θ) on the circle of radius r.
    pub fn trace(&self, r: f64, theta: f64) -> QPoint {
        let mut sheets = Vec::with_capacity(self.q);
        for p in &self.pieces {
            for m in 0..p.k {
                sheets.push(p.zeta(r, (theta + 2.0 * PI * m as f64) / p.k as f64).0);
            }
        }
        QPoint::from_sheets(&sheets).expect("consistent shape")
    }

    /// Samples of the trace on a uniform grid of n angles.
    pub fn sample(&self, r: f64, n: usize) -> Vec<QPoint> {
        (0..n).map(|i| self.trace(r, 2.0 * PI * i as f64 / n as f64)).collect()
    }

    pub fn windings(&self) -> Vec<usize> {
        self.pieces.iter().map(|p| p.k).collect()
    }
}

/// Every matching within `tau` of the optimum that pairs different values.
fn matching_gap(s: &QPoint, t: &QPoint, best: &[usize], best_cost: f64, tau: f64) -> f64 {
    let q = s.q();
    let cost = aq::cost_matrix(s, t).expect("same shape");
    let same = |a: &[f64], b: &[f64]| aq::dist_sq(a, b).sqrt() <= tau;
    let distinct_from_best = |p: &[usize]| {
        (0..q).any(|l| {
            !same(t.sheet(p[l]), t.sheet(best[l]))
                && !(0..q).any(|l2| same(s.sheet(l2), s.sheet(l)) && same(t.sheet(best[l2]), t.sheet(p[l])))
        })
    };
    let mut gap = f64::INFINITY;
    let mut consider = |p: &[usize]| {
        if distinct_from_best(p) {
            gap = gap.min(assignment::permutation_cost(&cost, q, p) - best_cost);
        }
    };
    if q <= 6 {
        let mut p: Vec<usize> = (0..q).collect();
        loop {
            consider(&p);
            if !assignment::next_permutation(&mut p) {
                break;
            }
        }
    } else {
        for i in 0..q {
            for j in i + 1..q {
                let mut p = best.to_vec();
                p.swap(i, j);
                consider(&p);
            }
        }
    }
    gap
}

/// Tracks sheets around a uniformly sampled circle and splits the monodromy
/// into cycles. `samples[i]` is φ(2πi/n) on the circle of radius `radius`.
pub fn decompose_irreducible(samples: &[QPoint], radius: f64, n_max: usize, tau: f64) -> Result<CircleMapDecomposition> {
    let n = samples.len();
    if n < 4 {
        return Err(Error::InvalidParam(format!("need at least 4 circle samples (got {n})")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParam(format!("radius must be positive (got {radius})")));
    }
    let (q, d) = (samples[0].q(), samples[0].d());
    for s in samples {
        if s.q() != q || s.d() != d {
            return Err(Error::DimensionMismatch { what: "circle sample shape", left: s.q() * s.d(), right: q * d });
        }
    }
    // labels[i][s]: slot at sample i reached from slot s at sample 0
    let mut labels: Vec<Vec<usize>> = vec![(0..q).collect()];
    for i in 0..n {
        let (a, b) = (&samples[i], &samples[(i + 1) % n]);
        let (p, cost) = aq::optimal_matching(a, b)?;
        let gap = matching_gap(a, b, &p, cost, tau);
        if gap < tau {
            return Err(Error::AmbiguousMatching { sample: i, gap });
        }
        let prev = labels.last().unwrap();
        labels.push(prev.iter().map(|&s| p[s]).collect());
    }
    let mono = labels[n].clone();
    let mut seen = vec![false; q];
    let mut pieces = Vec::new();
    let mut planner = FftPlanner::<f64>::new();
    for s0 in 0..q {
        if seen[s0] {
            continue;
        }
        let mut cyc = vec![s0];
        seen[s0] = true;
        let mut s = mono[s0];
        while s != s0 {
            seen[s] = true;
            cyc.push(s);
            s = mono[s];
        }
        let k = cyc.len();
        let len = n * k;
        let mut gamma = Vec::with_capacity(len);
        for &start in &cyc {
            for lab in labels.iter().take(n) {
                gamma.push(samples_at(samples, lab, start, gamma.len() % n));
            }
        }
        let fft = planner.plan_fft_forward(len);
        let nm = n_max.min((len - 1) / 2);
        let mut a0 = vec![0.0; d];
        let mut a = vec![vec![0.0; d]; nm];
        let mut b = vec![vec![0.0; d]; nm];
        for i in 0..d {
            let mut buf: Vec<Complex<f64>> = gamma.iter().map(|g: &Vec<f64>| Complex::new(g[i], 0.0)).collect();
            fft.process(&mut buf);
            let sc = 2.0 / len as f64;
            a0[i] = buf[0].re * sc;
            for nn in 1..=nm {
                // unit-scale coefficients: divide out the sampled radius
                let rn = radius.powi(nn as i32);
                a[nn - 1][i] = buf[nn].re * sc / rn;
                b[nn - 1][i] = -buf[nn].im * sc / rn;
            }
        }
        pieces.push(CirclePiece { k, a0, a, b, samples: gamma });
    }
    let mut dec = CircleMapDecomposition { q, d, radius, n_max, pieces, reassembly_error: 0.0 };
    let mut err: f64 = 0.0;
    for (i, s) in samples.iter().enumerate() {
        err = err.max(aq::g_distance(&dec.trace(radius, 2.0 * PI * i as f64 / n as f64), s)?);
    }
    dec.reassembly_error = err;
    Ok(dec)
}

fn samples_at(samples: &[QPoint], lab: &[usize], start: usize, i: usize) -> Vec<f64> {
    samples[i].sheet(lab[start]).to_vec()
}

/// The three Fourier identities plus the disk L² norm, all at radius r.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Energies {
    pub disk_dirichlet: f64,
    pub circle_dirichlet: f64,
    pub circle_l2: f64,
    pub disk_l2: f64,
}

pub fn closed_form_energies(dec: &CircleMapDecomposition, r: f64) -> Energies {
    let mut e = Energies::default();
    for p in &dec.pieces {
        let k = p.k as f64;
        let a0 = dot(&p.a0, &p.a0);
        e.disk_dirichlet += PI * p.mode_sum(r, |n| n);
        e.circle_dirichlet += PI * p.mode_sum(r, |n| n * n / k) / r;
        e.circle_l2 += PI * k * (r * a0 / 2.0 + r * p.mode_sum(r, |_| 1.0));
        e.disk_l2 += PI * k * k * r * r * (a0 / (4.0 * k) + p.mode_sum(r, |n| 1.0 / (2.0 * n + 2.0 * k)));
    }
    e
}

/// The same quantities by direct quadrature of the rolled extension: a
/// trapezoid rule with `n_theta` angles and Gauss–Legendre in s = (ρ/r)^{1/k}.
pub fn quadrature_energies(dec: &CircleMapDecomposition, r: f64, n_theta: usize) -> Energies {
    let mut e = Energies::default();
    let ns = dec.n_max + 4;
    let (gx, gw) = gauss_legendre(ns);
    let dth = 2.0 * PI / n_theta as f64;
    for p in &dec.pieces {
        let k = p.k as f64;
        let (mut dd, mut cd, mut cl, mut dl) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for t in 0..n_theta {
            let th = t as f64 * dth;
            for m in 0..p.k {
                let alpha = (th + 2.0 * PI * m as f64) / k;
                let (v, _, da) = p.zeta(r, alpha);
                // tangential derivative of the sheet: ∂_θ = (1/k)∂_α, arc length r dθ
                cd.push(dot(&da, &da) / (k * k) / r * dth);
                cl.push(dot(&v, &v) * r * dth);
                for (x, w) in gx.iter().zip(&gw) {
                    let s = 0.5 * (x + 1.0);
                    let ws = 0.5 * w;
                    let rho = r * s.powf(k);
                    let (v, dr, da) = p.zeta(r * s, alpha);
                    // ρ dρ = r² k s^{2k-1} ds; ∂_ρ = ∂_R · (r s)/(k ρ)
                    let jac = r * r * k * s.powf(2.0 * k - 1.0);
                    let drho = dot(&dr, &dr) * (r * s / (k * rho)).powi(2);
                    let dtheta = dot(&da, &da) / (k * k * rho * rho);
                    dd.push((drho + dtheta) * jac * ws * dth);
                    dl.push(dot(&v, &v) * jac * ws * dth);
                }
            }
        }
        e.disk_dirichlet += pairwise_sum(&dd);
        e.circle_dirichlet += pairwise_sum(&cd);
        e.circle_l2 += pairwise_sum(&cl);
        e.disk_l2 += pairwise_sum(&dl);
    }
    e
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtensionReport {
    pub energies: Energies,
    /// Dir(ψ, D_r) / (Q · Dir(φ, ∂D_r)).
    pub dir_ratio: f64,
    /// ∫|ψ|² / (r ∫|φ|²), bounded by 1/2.
    pub l2_ratio: f64,
}

/// The rolled harmonic extension of a decomposition to the disk D_r.
#[derive(Clone, Debug)]
pub struct HarmonicExtension {
    pub decomposition: CircleMapDecomposition,
    pub r: f64,
}

impl HarmonicExtension {
    /// ψ at a point (x, y) of the disk, as a Q-point in R^d.
    pub fn eval(&self, x: f64, y: f64) -> QPoint {
        let rho = (x * x + y * y).sqrt();
        let th = y.atan2(x);
        let mut sheets = Vec::with_capacity(self.decomposition.q);
        for p in &self.decomposition.pieces {
            let rr = self.r * (rho / self.r).powf(1.0 / p.k as f64);
            for m in 0..p.k {
                sheets.push(p.zeta(rr, (th + 2.0 * PI * m as f64) / p.k as f64).0);
            }
        }
        QPoint::from_sheets(&sheets).expect("consistent shape")
    }

    pub fn report(&self) -> ExtensionReport {
        let e = closed_form_energies(&self.decomposition, self.r);
        let q = self.decomposition.q as f64;
        ExtensionReport {
            energies: e,
            dir_ratio: if e.circle_dirichlet > 0.0 { e.disk_dirichlet / (q * e.circle_dirichlet) } else { 0.0 },
            l2_ratio: if e.circle_l2 > 0.0 { e.disk_l2 / (self.r * e.circle_l2) } else { 0.0 },
        }
    }
}

pub fn harmonic_extension(dec: &CircleMapDecomposition, r: f64) -> Result<(HarmonicExtension, ExtensionReport)> {
    if !(r > 0.0) {
        return Err(Error::InvalidParam(format!("radius must be positive (got {r})")));
    }
    let ext = HarmonicExtension { decomposition: dec.clone(), r };
    let rep = ext.report();
    Ok((ext, rep))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomogeneousReport {
    pub sphere_dirichlet: f64,
    pub ball_dirichlet: f64,
    pub sphere_l2: f64,
    pub ball_l2: f64,
    /// ball / sphere Dirichlet energy; at most 1/(j − 2).
    pub dir_ratio: f64,
    pub l2_ratio: f64,
}

/// ψ(x) = φ(x/|x|) on the unit ball of R^j.
pub struct HomogeneousExtension<F> {
    pub j: usize,
    pub phi: F,
}

impl<F: Fn(&[f64]) -> QPoint> HomogeneousExtension<F> {
    pub fn eval(&self, x: &[f64]) -> QPoint {
        let n = dot(x, x).sqrt();
        if n == 0.0 {
            let mut e = vec![0.0; self.j];
            e[0] = 1.0;
            return (self.phi)(&e);
        }
        let u: Vec<f64> = x.iter().map(|v| v / n).collect();
        (self.phi)(&u)
    }
}

/// Product Gauss rule on S^{j-1} in hyperspherical angles.
fn sphere_rule(j: usize, n: usize) -> Vec<(Vec<f64>, f64)> {
    let (gx, gw) = gauss_legendre(n);
    let polar: Vec<(f64, f64)> = gx.iter().zip(&gw).map(|(x, w)| (PI * 0.5 * (x + 1.0), PI * 0.5 * w)).collect();
    let nphi = 2 * n;
    let mut pts = vec![(Vec::<f64>::new(), 1.0)];
    // angles φ_1..φ_{j-2} in [0, π] with weight sin^{j-1-i} φ_i
    for i in 1..=j - 2 {
        let mut next = Vec::with_capacity(pts.len() * n);
        for (ang, w) in &pts {
            for &(t, wt) in &polar {
                let mut a = ang.clone();
                a.push(t);
                next.push((a, w * wt * t.sin().powi((j - 1 - i) as i32)));
            }
        }
        pts = next;
    }
    let mut out = Vec::with_capacity(pts.len() * nphi);
    for (ang, w) in &pts {
        for t in 0..nphi {
            let phi = 2.0 * PI * t as f64 / nphi as f64;
            let mut x = vec![0.0; j];
            let mut s = 1.0;
            for (i, a) in ang.iter().enumerate() {
                x[i] = s * a.cos();
                s *= a.sin();
            }
            x[j - 2] = s * phi.cos();
            x[j - 1] = s * phi.sin();
            out.push((x, w * 2.0 * PI / nphi as f64));
        }
    }
    out
}

fn matched_dsq<G: Fn(&[f64]) -> QPoint>(f: &G, x: &[f64], dirs: &[Vec<f64>], eps: f64, on_sphere: bool) -> f64 {
    let mut s = 0.0;
    for e in dirs {
        let shift = |sg: f64| -> Vec<f64> {
            if on_sphere {
                x.iter().zip(e).map(|(a, b)| eps.cos() * a + sg * eps.sin() * b).collect()
            } else {
                x.iter().zip(e).map(|(a, b)| a + sg * eps * b).collect()
            }
        };
        let g = aq::g_distance(&f(&shift(1.0)), &f(&shift(-1.0))).expect("same shape");
        s += g * g / (4.0 * eps * eps);
    }
    s
}

/// Builds the 0-homogeneous extension and measures both energies by quadrature.
pub fn homogeneous_extension<F>(j: usize, phi: F, n_quad: usize) -> Result<(HomogeneousExtension<F>, HomogeneousReport)>
where
    F: Fn(&[f64]) -> QPoint + Sync,
{
    if j < 3 {
        return Err(Error::PlanarHomogeneous(j));
    }
    let ext = HomogeneousExtension { j, phi };
    let rule = sphere_rule(j, n_quad);
    let (rx, rw) = gauss_legendre(8);
    let eps = 1e-5;
    let std_basis: Vec<Vec<f64>> = (0..j).map(|i| crate::linalg::unit(j, i)).collect();
    let mut sd = Vec::with_capacity(rule.len());
    let mut sl = Vec::with_capacity(rule.len());
    let mut bd = Vec::with_capacity(rule.len());
    for (x, w) in &rule {
        let tan = crate::linalg::complete_basis(&[x.clone()], &std_basis, j - 1);
        sd.push(w * matched_dsq(&ext.phi, x, &tan, eps, true));
        let v = (ext.phi)(x);
        sl.push(w * v.norm_sq());
        let psi = |y: &[f64]| ext.eval(y);
        let mut b = 0.0;
        for (t, tw) in rx.iter().zip(&rw) {
            let r = 0.5 * (t + 1.0);
            let y: Vec<f64> = x.iter().map(|c| c * r).collect();
            b += 0.5 * tw * r.powi(j as i32 - 1) * matched_dsq(&psi, &y, &std_basis, eps * r, false);
        }
        bd.push(w * b);
    }
    let sphere_dirichlet = pairwise_sum(&sd);
    let sphere_l2 = pairwise_sum(&sl);
    let ball_dirichlet = pairwise_sum(&bd);
    let ball_l2 = sphere_l2 / j as f64;
    let rep = HomogeneousReport {
        sphere_dirichlet,
        ball_dirichlet,
        sphere_l2,
        ball_l2,
        dir_ratio: if sphere_dirichlet > 0.0 { ball_dirichlet / sphere_dirichlet } else { 0.0 },
        l2_ratio: if sphere_l2 > 0.0 { ball_l2 / sphere_l2 } else { 0.0 },
    };
    Ok((ext, rep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sqrt_samples(n: usize, power: i32) -> Vec<QPoint> {
        (0..n)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / n as f64;
                let a = power as f64 * th / 2.0;
                QPoint::from_sheets(&[vec![a.cos(), a.sin()], vec![-a.cos(), -a.sin()]]).unwrap()
            })
            .collect()
    }

    #[test]
    fn constant_map_splits_into_trivial_pieces() {
        let s: Vec<QPoint> = (0..32).map(|_| QPoint::repeated(3, &[1.0, -2.0]).unwrap()).collect();
        let dec = decompose_irreducible(&s, 1.0, 16, 1e-9).unwrap();
        assert_eq!(dec.windings(), vec![1, 1, 1]);
        for p in &dec.pieces {
            assert!(p.samples.iter().all(|g| g == &[1.0, -2.0]));
            assert!((p.a0[0] / 2.0 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn square_root_is_one_piece() {
        let dec = decompose_irreducible(&sqrt_samples(64, 1), 1.0, 16, 1e-9).unwrap();
        assert_eq!(dec.windings(), vec![2]);
        let p = &dec.pieces[0];
        // γ(α) = (cos α, sin α), up to the starting sheet
        let g0 = &p.samples[0];
        for (j, g) in p.samples.iter().enumerate() {
            let al = 2.0 * PI * j as f64 / 128.0;
            let sgn = g0[0].signum();
            assert!((g[0] - sgn * al.cos()).abs() < 1e-12 && (g[1] - sgn * al.sin()).abs() < 1e-12);
        }
        assert!(dec.reassembly_error < 1e-12);
    }

    #[test]
    fn separated_radii_give_two_pieces() {
        let s: Vec<QPoint> = (0..64)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / 64.0;
                QPoint::from_sheets(&[vec![th.cos(), th.sin()], vec![2.0 * th.cos(), 2.0 * th.sin()]]).unwrap()
            })
            .collect();
        let dec = decompose_irreducible(&s, 1.0, 16, 1e-9).unwrap();
        assert_eq!(dec.windings(), vec![1, 1]);
    }

    #[test]
    fn coarse_grid_is_ambiguous() {
        // two samples per half turn leave the matching undetermined
        let s = sqrt_samples(4, 2);
        assert!(matches!(decompose_irreducible(&s, 1.0, 4, 1e-9), Err(Error::AmbiguousMatching { .. })));
    }

    #[test]
    fn square_root_energies() {
        let dec = decompose_irreducible(&sqrt_samples(256, 1), 1.0, 16, 1e-9).unwrap();
        let (_, rep) = harmonic_extension(&dec, 1.0).unwrap();
        assert!((rep.energies.disk_dirichlet - 2.0 * PI).abs() < 1e-10);
        assert!((rep.energies.circle_dirichlet - PI).abs() < 1e-10);
        assert!((rep.dir_ratio - 1.0).abs() < 1e-10);
    }

    #[test]
    fn w_cubed_boundary_has_energy_six_pi() {
        let dec = decompose_irreducible(&sqrt_samples(256, 3), 1.0, 16, 1e-9).unwrap();
        let e = closed_form_energies(&dec, 1.0);
        assert!((e.disk_dirichlet - 6.0 * PI).abs() < 1e-9);
        let (ext, _) = harmonic_extension(&dec, 1.0).unwrap();
        let v = ext.eval(0.25, 0.0);
        assert!((v.sheet(0)[0].abs() - 0.125).abs() < 1e-12);
    }

    #[test]
    fn single_valued_extension() {
        let dec = CircleMapDecomposition::from_modes(2, vec![(1, vec![0.0, 0.0], vec![vec![1.0, 0.0]], vec![vec![0.0, 0.0]])]).unwrap();
        let (ext, rep) = harmonic_extension(&dec, 1.0).unwrap();
        assert!((rep.energies.disk_dirichlet - PI).abs() < 1e-14);
        let v = ext.eval(0.3, 0.4);
        assert!((v.sheet(0)[0] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn constant_energies() {
        let dec = CircleMapDecomposition::from_modes(1, vec![(2, vec![3.0], vec![], vec![])]).unwrap();
        let e = closed_form_energies(&dec, 0.5);
        assert_eq!(e.disk_dirichlet, 0.0);
        assert!((e.circle_l2 - PI * 2.0 * 0.5 * 9.0 / 2.0).abs() < 1e-12);
    }

    fn random_decomposition(rng: &mut ChaCha8Rng, d: usize, nmax: usize) -> CircleMapDecomposition {
        let mut modes = Vec::new();
        let mut q = 0;
        while q < 4 {
            let k = rng.gen_range(1..=3usize).min(4 - q);
            q += k;
            let v = |rng: &mut ChaCha8Rng| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
            let a0 = v(rng);
            let a = (0..nmax).map(|_| v(rng)).collect();
            let b = (0..nmax).map(|_| v(rng)).collect();
            modes.push((k, a0, a, b));
        }
        CircleMapDecomposition::from_modes(d, modes).unwrap()
    }

    #[test]
    fn fourier_identities_match_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..4 {
            let dec = random_decomposition(&mut rng, 2, 16);
            for &r in &[1.0, 0.6] {
                let c = closed_form_energies(&dec, r);
                let q = quadrature_energies(&dec, r, 2048);
                for (a, b) in [(c.disk_dirichlet, q.disk_dirichlet), (c.circle_dirichlet, q.circle_dirichlet), (c.circle_l2, q.circle_l2), (c.disk_l2, q.disk_l2)] {
                    assert!((a - b).abs() <= 1e-10 * a.abs(), "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn extension_bounds_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let dec = random_decomposition(&mut rng, 3, 8);
            let (_, rep) = harmonic_extension(&dec, 0.8).unwrap();
            assert!(rep.dir_ratio <= 1.0 + 1e-12);
            assert!(rep.l2_ratio <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn rolled_trace_reproduces_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dec = random_decomposition(&mut rng, 3, 3);
        let samples = dec.sample(1.0, 400);
        let back = decompose_irreducible(&samples, 1.0, 64, 1e-9).unwrap();
        assert_eq!(back.q, 4);
        assert!(back.reassembly_error < 1e-8, "{}", back.reassembly_error);
        let (a, b) = (closed_form_energies(&dec, 1.0), closed_form_energies(&back, 1.0));
        assert!((a.disk_dirichlet - b.disk_dirichlet).abs() < 1e-8 * a.disk_dirichlet);
    }

    #[test]
    fn mean_zero_is_preserved() {
        let dec = decompose_irreducible(&sqrt_samples(128, 3), 1.0, 16, 1e-9).unwrap();
        let (ext, _) = harmonic_extension(&dec, 1.0).unwrap();
        for &(x, y) in &[(0.1, 0.2), (-0.5, 0.3), (0.0, -0.7)] {
            assert!(aq::eta_mean(&ext.eval(x, y)).iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn homogeneous_extension_ratios() {
        assert!(matches!(homogeneous_extension(2, |_: &[f64]| QPoint::zero(1, 1), 8), Err(Error::PlanarHomogeneous(2))));
        let (_, rep) = homogeneous_extension(3, |x: &[f64]| QPoint::new(1, 1, vec![x[2]]).unwrap(), 16).unwrap();
        // first spherical harmonic: Dir on S² is 8π/3, the ball gets the same times ∫₀¹ dr
        assert!((rep.sphere_dirichlet - 8.0 * PI / 3.0).abs() < 1e-6, "{rep:?}");
        assert!((rep.dir_ratio - 1.0).abs() < 1e-6);
        let (_, rep) = homogeneous_extension(4, |x: &[f64]| {
            QPoint::from_sheets(&[vec![x[0] * x[1], x[3]], vec![-x[0] * x[1], x[2] - x[3]]]).unwrap()
        }, 10)
        .unwrap();
        assert!(rep.dir_ratio <= 0.5 + 1e-3, "{rep:?}");
        assert!((rep.dir_ratio - 0.5).abs() < 1e-3);
        let (_, rep) = homogeneous_extension(3, |_: &[f64]| QPoint::repeated(2, &[1.0]).unwrap(), 6).unwrap();
        assert_eq!(rep.ball_dirichlet, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn circle_energy_identity(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dec = random_decomposition(&mut rng, 2, 6);
            for p in &dec.pieces {
                // Dir(φ_ℓ, S¹) = (1/k) ∫ |γ'|²
                let n = 512;
                let k = p.k as f64;
                let mut s = 0.0;
                for i in 0..n {
                    let al = 2.0 * PI * i as f64 / n as f64;
                    let (_, _, da) = p.zeta(1.0, al);
                    s += dot(&da, &da) * 2.0 * PI / n as f64;
                }
                let single = CircleMapDecomposition { q: p.k, d: 2, radius: 1.0, n_max: 6, pieces: vec![p.clone()], reassembly_error: 0.0 };
                let e = closed_form_energies(&single, 1.0);
                prop_assert!((e.circle_dirichlet - s / k).abs() <= 1e-8 * s.max(1.0));
            }
        }
    }
}
