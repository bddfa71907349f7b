//! The built-in acceptance suite. Each check builds its own cases from a
//! seed and reports the measured values next to the verdict, so the same
//! code backs `qjacobi verify`, the `verify` task and the acceptance tests.

use crate::aq::{self, QPoint};
use crate::assignment::brute_force_min;
use crate::collar::collar_interpolation;
use crate::error::Result;
use crate::field::{dirichlet_energy, fd_variations, jac_energy, DiscreteQField, Flavor, Region};
use crate::frequency::{
    blow_up_domain, decay_fit, default_radii, monotonicity_audit, multiplicity_strata, radial_profiles, tangent_map,
    FrequencyProfile, MONOTONE_SLACK, RADIUS_RATIO,
};
use crate::harmonic::{closed_form_energies, harmonic_extension, homogeneous_extension, quadrature_energies, CircleMapDecomposition};
use crate::mesh::Mesh;
use crate::scene::Scene;
use crate::solver::{
    boundary_trace, certify_minimizer, minimize_dirichlet, minimize_jacobi, rolled_extension_field, stability_constant,
    AnnealSchedule, SolveConfig, SolveResult,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

pub const CRITERIA: [(usize, &str); 12] = [
    (1, "metric oracle"),
    (2, "fourier identities"),
    (3, "harmonic extension bounds"),
    (4, "first variation"),
    (5, "second variation"),
    (6, "stability constants"),
    (7, "frequency of the homogeneous minimizer"),
    (8, "solver vs extension"),
    (9, "almost monotonicity on caps"),
    (10, "singular detection"),
    (11, "decay fit"),
    (12, "collar interpolation"),
];

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub measured: BTreeMap<String, f64>,
    pub detail: String,
}

impl Outcome {
    pub fn line(&self) -> String {
        let vals: Vec<String> = self.measured.iter().map(|(k, v)| format!("{k}={v:.4e}")).collect();
        format!(
            "[{}] criterion {:>2} {}: {}{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            vals.join(" "),
            if self.detail.is_empty() { String::new() } else { format!(" ({})", self.detail) }
        )
    }
}

struct Tally {
    ok: bool,
    measured: BTreeMap<String, f64>,
    notes: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Self { ok: true, measured: BTreeMap::new(), notes: Vec::new() }
    }

    fn record(&mut self, key: &str, v: f64) {
        self.measured.insert(key.to_string(), v);
    }

    /// Records `v` and fails the criterion unless `cond` holds.
    fn require(&mut self, key: &str, v: f64, cond: bool, what: &str) {
        self.record(key, v);
        if !cond {
            self.ok = false;
            self.notes.push(format!("{what} violated"));
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }
}

/// The acceptance suite with the h = 1/64 minimizer shared between
/// criteria 7 and 8.
pub struct Suite {
    seed: u64,
    w3_minimizer: OnceLock<std::result::Result<SolveResult, String>>,
}

pub const W3_H: f64 = 1.0 / 64.0;

/// Σ_{w²=z} ⟦w³ + c w⁵⟧ on a flat disk with a two-dimensional normal space.
pub fn two_mode_sheets(x: &[f64], c: f64) -> Vec<Vec<f64>> {
    let (r, th) = ((x[0] * x[0] + x[1] * x[1]).sqrt(), x[1].atan2(x[0]));
    let (a, b) = (r.powf(1.5), c * r.powf(2.5));
    let (u, v) = (a * (1.5 * th).cos() + b * (2.5 * th).cos(), a * (1.5 * th).sin() + b * (2.5 * th).sin());
    vec![vec![u, v], vec![-u, -v]]
}

fn w3_qpoint(x: &[f64]) -> QPoint {
    let s = two_mode_sheets(x, 0.0);
    QPoint::from_sheets(&[vec![0.0, 0.0, s[0][0], s[0][1]], vec![0.0, 0.0, s[1][0], s[1][1]]]).expect("two sheets in R^4")
}

/// Exact radial functions of the two-mode field at the origin.
pub fn two_mode_profile(c: f64, radii: &[f64]) -> FrequencyProfile {
    let c2 = c * c;
    let d: Vec<f64> = radii.iter().map(|r| 6.0 * PI * r.powi(3) + 10.0 * PI * c2 * r.powi(5)).collect();
    let h: Vec<f64> = radii.iter().map(|r| 4.0 * PI * (r.powi(4) + c2 * r.powi(6))).collect();
    let g: Vec<f64> = radii.iter().map(|r| 4.0 * PI * (2.25 * r * r + 6.25 * c2 * r.powi(4))).collect();
    let f: Vec<f64> = radii.iter().map(|r| 4.0 * PI * (r.powi(5) / 5.0 + c2 * r.powi(7) / 7.0)).collect();
    let i: Vec<f64> = radii.iter().zip(d.iter().zip(&h)).map(|(r, (d, h))| r * d / h).collect();
    FrequencyProfile {
        pole: vec![0.0; 4],
        m: 2,
        radii: radii.to_vec(),
        e: d.clone(),
        d,
        h,
        g,
        f,
        i,
        valid: vec![true; radii.len()],
    }
}

fn random_qpoint(rng: &mut ChaCha8Rng, q: usize, d: usize) -> QPoint {
    QPoint::new(q, d, (0..q * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("shape")
}

fn random_decomposition(rng: &mut ChaCha8Rng, q: usize, d: usize, nmax: usize) -> CircleMapDecomposition {
    let mut modes = Vec::new();
    let mut left = q;
    while left > 0 {
        let k = rng.gen_range(1..=3usize).min(left);
        left -= k;
        let v = |rng: &mut ChaCha8Rng, s: f64| (0..d).map(|_| s * rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let a0 = v(rng, 1.0);
        let a = (1..=nmax).map(|n| v(rng, 1.0 / n as f64)).collect();
        let b = (1..=nmax).map(|n| v(rng, 1.0 / n as f64)).collect();
        modes.push((k, a0, a, b));
    }
    CircleMapDecomposition::from_modes(d, modes).expect("valid modes")
}

/// Normal fields on the equatorial S² ⊂ S³ whose sheets stay apart, so the
/// piecewise-linear Q-valued interpolation is as accurate as the scalar one.
struct SphereField {
    q: usize,
    coef: Vec<[f64; 7]>,
}

impl SphereField {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let q = rng.gen_range(1..=3);
        let coef = (0..q)
            .map(|l| {
                let mut c = [0.0; 7];
                for x in c.iter_mut() {
                    *x = rng.gen_range(-0.3..0.3);
                }
                c[0] += 2.0 * l as f64;
                c
            })
            .collect();
        Self { q, coef }
    }

    fn on(&self, mesh: &Arc<Mesh>) -> Result<DiscreteQField> {
        DiscreteQField::from_normal_coefficients(mesh.clone(), self.q, |_, x| {
            self.coef
                .iter()
                .map(|c| vec![c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[2] + c[4] * x[0] * x[1] + c[5] * x[1] * x[2] + c[6] * x[2] * x[2]])
                .collect()
        })
    }
}

fn observed_order(v: &[f64; 3]) -> f64 {
    let (a, b) = ((v[0] - v[1]).abs(), (v[1] - v[2]).abs());
    if a < 1e-10 && b < 1e-10 {
        f64::INFINITY
    } else {
        (a / b).log2()
    }
}

impl Suite {
    pub fn new(seed: u64) -> Self {
        Self { seed, w3_minimizer: OnceLock::new() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn rng(&self, id: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(1000).wrapping_add(id as u64))
    }

    pub fn run(&self, id: usize) -> Outcome {
        let mut t = Tally::new();
        let res = match id {
            1 => self.metric_oracle(&mut t),
            2 => self.fourier_identities(&mut t),
            3 => self.extension_bounds(&mut t),
            4 => self.first_variation(&mut t),
            5 => self.second_variation(&mut t),
            6 => self.stability(&mut t),
            7 => self.homogeneous_frequency(&mut t),
            8 => self.solver_vs_extension(&mut t),
            9 => self.cap_monotonicity(&mut t),
            10 => self.singular_detection(&mut t),
            11 => self.decay(&mut t),
            12 => self.collar(&mut t),
            _ => {
                t.ok = false;
                t.note(format!("no criterion {id}"));
                Ok(())
            }
        };
        if let Err(e) = res {
            t.ok = false;
            t.note(format!("error: {e}"));
        }
        let name = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1);
        Outcome { id, name: name.to_string(), passed: t.ok, measured: t.measured, detail: t.notes.join("; ") }
    }

    pub fn run_all(&self) -> Vec<Outcome> {
        CRITERIA.iter().map(|c| self.run(c.0)).collect()
    }

    fn w3_minimizer(&self) -> Result<&SolveResult> {
        let r = self.w3_minimizer.get_or_init(|| {
            let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, W3_H).map_err(|e| e.to_string())?);
            let bd = boundary_trace(&mesh, w3_qpoint);
            // the warm start already sits in the right basin at this resolution
            let cfg = SolveConfig { restarts: 1, anneal: AnnealSchedule { proposals: 0, ..Default::default() }, seed: self.seed, ..Default::default() };
            minimize_dirichlet(mesh, &bd, &cfg).map_err(|e| e.to_string())
        });
        r.as_ref().map_err(|e| crate::error::Error::Config(format!("w3 minimizer failed: {e}")))
    }

    fn metric_oracle(&self, t: &mut Tally) -> Result<()> {
        let mut rng = self.rng(1);
        let (mut worst, mut sym, mut ident, mut tri) = (0.0f64, 0.0f64, 0.0f64, f64::NEG_INFINITY);
        for q in 2..=6 {
            for d in 1..=3 {
                for _ in 0..1000 {
                    let (a, b) = (random_qpoint(&mut rng, q, d), random_qpoint(&mut rng, q, d));
                    let g = aq::g_distance(&a, &b)?;
                    let bf = brute_force_min(&aq::cost_matrix(&a, &b)?, q).max(0.0).sqrt();
                    worst = worst.max((g - bf).abs());
                }
                for _ in 0..1000 {
                    let (a, b, c) = (random_qpoint(&mut rng, q, d), random_qpoint(&mut rng, q, d), random_qpoint(&mut rng, q, d));
                    let (ab, ba, bc, ac) = (aq::g_distance(&a, &b)?, aq::g_distance(&b, &a)?, aq::g_distance(&b, &c)?, aq::g_distance(&a, &c)?);
                    sym = sym.max((ab - ba).abs());
                    let perm: Vec<usize> = (0..q).rev().collect();
                    ident = ident.max(aq::g_distance(&a, &a.permuted(&perm))?);
                    tri = tri.max(ac - ab - bc);
                    if ab <= 0.0 {
                        t.ok = false;
                        t.note("distinct points at distance 0");
                    }
                }
            }
        }
        t.require("max_oracle_gap", worst, worst <= 1e-12, "brute-force agreement");
        t.require("max_asymmetry", sym, sym <= 1e-12, "symmetry");
        t.require("max_self_distance", ident, ident <= 1e-12, "identity of indiscernibles");
        t.require("max_triangle_excess", tri, tri <= 1e-12, "triangle inequality");
        Ok(())
    }

    fn fourier_identities(&self, t: &mut Tally) -> Result<()> {
        let mut rng = self.rng(2);
        let mut worst = 0.0f64;
        for trial in 0..10 {
            let dec = random_decomposition(&mut rng, 2 + trial % 3, 2, 16);
            let r = rng.gen_range(0.5..2.0);
            let (a, b) = (closed_form_energies(&dec, r), quadrature_energies(&dec, r, 2048));
            for (x, y) in [
                (a.disk_dirichlet, b.disk_dirichlet),
                (a.circle_dirichlet, b.circle_dirichlet),
                (a.circle_l2, b.circle_l2),
                (a.disk_l2, b.disk_l2),
            ] {
                worst = worst.max((x - y).abs() / x.abs().max(1e-300));
            }
        }
        t.require("max_relative_error", worst, worst <= 1e-8, "closed form vs quadrature");
        let sqrt = CircleMapDecomposition::from_modes(2, vec![(2, vec![0.0, 0.0], vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]])])?;
        let dd = closed_form_energies(&sqrt, 1.0).disk_dirichlet;
        t.require("k2_disk_dirichlet", dd, (dd - 2.0 * PI).abs() <= 1e-8, "k=2, n=1 disk Dirichlet 2π");
        Ok(())
    }

    fn extension_bounds(&self, t: &mut Tally) -> Result<()> {
        let mut rng = self.rng(3);
        let (mut dir, mut l2) = (0.0f64, 0.0f64);
        for _ in 0..50 {
            let q = rng.gen_range(1..=5);
            let dec = random_decomposition(&mut rng, q, 2, 8);
            let r = rng.gen_range(0.5..2.0);
            let (_, rep) = harmonic_extension(&dec, r)?;
            dir = dir.max(rep.dir_ratio);
            l2 = l2.max(rep.l2_ratio);
        }
        t.require("max_dir_ratio", dir, dir <= 1.0 + 1e-6, "Dir(ψ) ≤ Q Dir(φ)");
        t.require("max_l2_ratio", l2, l2 <= 0.5 * (1.0 + 1e-6), "∫|ψ|² ≤ r/2 ∫|φ|²");
        let (_, rep) = homogeneous_extension(
            4,
            |x: &[f64]| QPoint::from_sheets(&[vec![x[0] * x[1], x[3]], vec![-x[0] * x[1], x[2] - x[3]]]).expect("two sheets"),
            10,
        )?;
        t.require("j4_dir_ratio", rep.dir_ratio, rep.dir_ratio <= 0.5 + 1e-3, "homogeneous ratio ≤ 1/2");
        Ok(())
    }

    fn sphere_meshes(&self) -> Result<Vec<Arc<Mesh>>> {
        let sc = Scene::equatorial_sphere(2);
        [0.2, 0.1, 0.05, 1.0 / 32.0].iter().map(|&h| Ok(Arc::new(Mesh::closed(&sc, h)?))).collect()
    }

    fn first_variation(&self, t: &mut Tally) -> Result<()> {
        let mut rng = self.rng(4);
        let meshes = self.sphere_meshes()?;
        let (mut worst, mut order) = (0.0f64, f64::INFINITY);
        for _ in 0..10 {
            let field = SphereField::random(&mut rng);
            let mut d2 = [0.0; 3];
            for (k, mesh) in meshes[..3].iter().enumerate() {
                let n = field.on(mesh)?;
                let fd = fd_variations(&n, None)?;
                worst = worst.max(fd.delta1.abs() / (mesh.total_volume() * n.max_sheet_norm()));
                d2[k] = fd.delta2;
            }
            order = order.min(observed_order(&d2));
        }
        t.require("max_relative_delta1", worst, worst <= 1e-3, "|δ1| ≤ 1e-3 area max|N|");
        t.require("min_refinement_order", order, order >= 1.8, "order ≥ 1.8");
        t.note("order measured on the variations at h = 0.2, 0.1, 0.05");
        Ok(())
    }

    fn second_variation(&self, t: &mut Tally) -> Result<()> {
        let mut rng = self.rng(4);
        let meshes = self.sphere_meshes()?;
        let fine = &meshes[3];
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let n = SphereField::random(&mut rng).on(fine)?;
            let fd = fd_variations(&n, None)?;
            let j = jac_energy(&n, &Region::all(fine))?.jac;
            worst = worst.max((fd.delta2 - j).abs() / j.abs().max(1e-300));
        }
        t.require("max_relative_gap", worst, worst <= 1e-2, "|δ2 − Jac| ≤ 1e-2 |Jac|");
        let pm = DiscreteQField::from_normal_coefficients(fine.clone(), 2, |_, _| vec![vec![1.0], vec![-1.0]])?;
        let d2 = fd_variations(&pm, None)?.delta2;
        t.require("nu_pair_delta2", d2, (d2 + 16.0 * PI).abs() <= 0.01 * 16.0 * PI, "δ2 = −16π");
        Ok(())
    }

    fn stability(&self, t: &mut Tally) -> Result<()> {
        let disk = Arc::new(Mesh::ball(&Scene::flat_disk(2, 1, 0), 1.0, 0.04)?);
        let c = stability_constant(&disk)?.constant;
        t.require("flat_disk", c, (c - 5.7832).abs() <= 0.01 * 5.7832, "disk constant 5.7832");
        let sphere = Arc::new(Mesh::closed(&Scene::equatorial_sphere(2), 0.1)?);
        let c = stability_constant(&sphere)?.constant;
        t.require("equatorial_sphere", c, (c + 2.0).abs() <= 0.02, "sphere constant −2");
        Ok(())
    }

    fn homogeneous_frequency(&self, t: &mut Tally) -> Result<()> {
        let sol = self.w3_minimizer()?;
        let n = &sol.field;
        let mesh = n.mesh();
        let pole = vec![0.0; 4];
        let radii: Vec<f64> = default_radii(mesh, &pole, Some(0.5)).into_iter().filter(|&r| r >= 0.1).collect();
        let p = radial_profiles(n, &pole, &radii)?;
        let idx = p.valid_indices();
        let dev = idx.iter().map(|&k| (p.i[k] - 1.5).abs()).fold(0.0, f64::max);
        t.require("max_frequency_deviation", dev, dev <= 1e-2 && idx.len() == radii.len(), "|I − 1.5| ≤ 1e-2");
        let scaled: Vec<f64> = idx.iter().map(|&k| p.d[k] / p.radii[k].powi(3)).collect();
        let mean = scaled.iter().sum::<f64>() / scaled.len() as f64;
        let spread = scaled.iter().map(|s| (s / mean - 1.0).abs()).fold(0.0, f64::max);
        t.record("mean_d_over_r3", mean);
        t.require("d_over_r3_spread", spread, spread <= 0.02, "D/r³ constant within 2%");
        let target = blow_up_domain(mesh.scene(), 1.0 / 32.0)?;
        let tm = tangent_map(n, &pole, &[0.8, 0.4], &target, 1e-2)?;
        t.require("mu", tm.mu, (tm.mu - 1.5).abs() <= 1e-2, "μ = 1.5");
        t.record("mu_frequency", tm.mu_frequency);
        t.require("blow_up_difference", tm.cauchy[0], tm.cauchy[0] <= 1e-2, "blow-ups at r and r/2 agree");
        Ok(())
    }

    fn solver_vs_extension(&self, t: &mut Tally) -> Result<()> {
        let sol = self.w3_minimizer()?;
        let mesh = sol.field.mesh().clone();
        let bd = boundary_trace(&mesh, w3_qpoint);
        let ext = rolled_extension_field(&mesh, &bd, true)?
            .ok_or_else(|| crate::error::Error::Config("w3 boundary has no rolled extension".into()))?;
        let e_ext = dirichlet_energy(&ext, &Region::all(&mesh), Flavor::Full)?;
        t.require("energy_over_6pi", sol.energy / (6.0 * PI), sol.energy <= 6.0 * PI * 1.02, "energy ≤ 6π(1.02)");
        let gap = (sol.energy - e_ext).abs() / e_ext;
        t.require("extension_gap", gap, gap <= 5e-3, "within 0.5% of the extension");
        let cert = certify_minimizer(&sol.field)?;
        let bound = 10.0 * W3_H * W3_H;
        t.record("residual_bound", bound);
        t.require("outer_residual", cert.outer_residual, cert.outer_residual <= bound, "outer residual ≤ 10h²");
        t.require("inner_residual", cert.inner_residual, cert.inner_residual <= bound, "inner residual ≤ 10h²");
        Ok(())
    }

    fn cap_monotonicity(&self, t: &mut Tally) -> Result<()> {
        let sc = Scene::equatorial_sphere(2);
        let mesh = Arc::new(Mesh::ball(&sc, 0.8, 1.0 / 32.0)?);
        let pole = sc.pole();
        let radii = default_radii(&mesh, &pole, None);
        let cfg = SolveConfig { restarts: 2, anneal: AnnealSchedule { proposals: 2, ..Default::default() }, seed: self.seed, ..Default::default() };
        let smooth = boundary_trace(&mesh, |x| {
            QPoint::from_sheets(&[vec![0.0, 0.0, 0.0, 1.0 + x[1]], vec![0.0, 0.0, 0.0, x[0] - 0.5]]).expect("two sheets")
        });
        let branched = boundary_trace(&mesh, |x| {
            let (r, th) = ((x[1] * x[1] + x[2] * x[2]).sqrt(), x[2].atan2(x[1]));
            let a = r.powf(1.5) * (1.5 * th).cos();
            QPoint::from_sheets(&[vec![0.0, 0.0, 0.0, a], vec![0.0, 0.0, 0.0, -a]]).expect("two sheets")
        });
        let (mut lambda, mut c0, mut cs, mut mono) = (0.0f64, 0.0f64, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for (name, bd) in [("smooth", smooth), ("branched", branched)] {
            let sol = minimize_jacobi(mesh.clone(), &bd, &cfg)?;
            let p = radial_profiles(&sol.field, &pole, &radii)?;
            let a = monotonicity_audit(&p)?;
            t.record(&format!("{name}_radii"), a.radii_used as f64);
            lambda = lambda.max(a.lambda);
            c0 = c0.max(a.c0);
            cs = cs.max(a.cauchy_schwarz);
            let idx = p.valid_indices();
            for w in idx.windows(2) {
                let (lo, hi) = ((a.lambda * p.radii[w[0]]).exp() * p.i[w[0]], (a.lambda * p.radii[w[1]]).exp() * p.i[w[1]]);
                mono = mono.max(lo * (1.0 - MONOTONE_SLACK) - hi);
            }
        }
        t.require("lambda", lambda, lambda.is_finite(), "finite λ");
        t.require("c0", c0, c0.is_finite(), "finite C0");
        t.require("max_monotonicity_defect", mono, mono <= 1e-12, "e^{λr} I non-decreasing");
        t.require("max_cauchy_schwarz", cs, cs <= 0.0, "E² ≤ G H");
        Ok(())
    }

    fn singular_detection(&self, t: &mut Tally) -> Result<()> {
        for (tag, h) in [("h32", 1.0 / 32.0), ("h64", 1.0 / 64.0)] {
            let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, h)?);
            let o = mesh.pole_vertex();
            let w3 = DiscreteQField::from_normal_coefficients(mesh.clone(), 2, |_, x| two_mode_sheets(x, 0.0))?;
            let s = multiplicity_strata(&w3, aq::TAU_COIN)?;
            let exact = s.collapsed == vec![o] && s.singular == vec![o];
            t.require(&format!("w3_singular_{tag}"), s.singular.len() as f64, exact, "w3 stratum is the origin");
            t.require(&format!("w3_lsc_violations_{tag}"), s.lsc_violations.len() as f64, s.lsc_violations.is_empty(), "σ lower semicontinuous");
            let smooth = DiscreteQField::from_normal_coefficients(mesh.clone(), 3, |_, x| vec![vec![x[0], x[1] * x[1] - 0.3]; 3])?;
            let s = multiplicity_strata(&smooth, aq::TAU_COIN)?;
            t.require(&format!("smooth_singular_{tag}"), s.singular.len() as f64, s.singular.is_empty(), "Q⟦smooth⟧ has no singular set");
            t.require(&format!("smooth_lsc_violations_{tag}"), s.lsc_violations.len() as f64, s.lsc_violations.is_empty(), "σ lower semicontinuous");
        }
        Ok(())
    }

    fn decay(&self, t: &mut Tally) -> Result<()> {
        let c = 0.05;
        let radii: Vec<f64> = (0..17).rev().map(|k| 0.5 / RADIUS_RATIO.powi(k)).collect();
        let fit = decay_fit(&two_mode_profile(c, &radii))?;
        let beta = fit.beta.unwrap_or(f64::NAN);
        t.require("beta", beta, beta > 0.0, "β > 0");
        t.require("i0", fit.i0, (fit.i0 - 1.5).abs() <= 1e-2, "I0 = 1.5");
        t.record("h0", fit.h0);
        t.record("d0", fit.d0);
        t.require("contract_gap", fit.contract_gap, fit.contract_gap <= 1e-2, "D0 = I0 H0");
        let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, W3_H)?);
        let n = DiscreteQField::from_normal_coefficients(mesh.clone(), 2, |_, x| two_mode_sheets(x, c))?;
        let pole = vec![0.0; 4];
        let disc = decay_fit(&radial_profiles(&n, &pole, &default_radii(&mesh, &pole, Some(0.5)))?)?;
        t.require("mesh_i0", disc.i0, (disc.i0 - 1.5).abs() <= 1e-2, "mesh I0 = 1.5");
        t.record("mesh_beta", disc.beta.unwrap_or(f64::NAN));
        t.record("mesh_contract_gap", disc.contract_gap);
        t.note("β and D0 = I0 H0 judged on the exact profile; the mesh values are reported only");
        Ok(())
    }

    fn collar(&self, t: &mut Tally) -> Result<()> {
        let mut rng = self.rng(12);
        let (mut endpoint, mut cl2, mut cdir) = (0.0f64, 0.0f64, 0.0f64);
        for _ in 0..20 {
            let q = rng.gen_range(1..=3);
            let f1 = random_decomposition(&mut rng, q, 2, 3).sample(1.0, 64);
            let f2 = random_decomposition(&mut rng, q, 2, 3).sample(1.0, 64);
            let lam = rng.gen_range(0.2..0.6);
            let (_, rep) = collar_interpolation(&f1, &f2, lam)?;
            endpoint = endpoint.max(rep.endpoint_error);
            cl2 = cl2.max(rep.c_l2);
            cdir = cdir.max(rep.c_dir);
        }
        t.require("max_endpoint_error", endpoint, endpoint == 0.0, "exact endpoints");
        t.require("max_c_l2", cl2, cl2.is_finite(), "finite L² constant");
        t.require("max_c_dir", cdir, cdir.is_finite(), "finite Dirichlet constant");
        let f = random_decomposition(&mut rng, 3, 2, 3).sample(1.0, 96);
        let lam = 0.3;
        let (_, rep) = collar_interpolation(&f, &f, lam)?;
        let gap = (rep.dirichlet - lam * rep.f1_dirichlet).abs() / rep.f1_dirichlet.max(1e-300);
        t.require("equal_ends_gap", gap, gap <= 1e-8, "λ Dir(f1) for f1 = f2");
        Ok(())
    }
}
