//! Executes one experiment config: one task, one output directory.

use crate::aq::QPoint;
use crate::checks::Suite;
use crate::config::{BoundarySpec, ExperimentConfig, LoadedConfig, MeshKind, Task};
use crate::error::{Error, Result};
use crate::field::DiscreteQField;
use crate::frequency::{
    blow_up_domain, decay_fit, default_radii, max_radius, monotonicity_audit, multiplicity_strata, radial_profiles, tangent_map,
};
use crate::harmonic::{decompose_irreducible, harmonic_extension, quadrature_energies, CircleMapDecomposition};
use crate::io::{self, Artifact, DecompositionRecord, FitReport, Manifest};
use crate::mesh::Mesh;
use crate::solver::{certify_minimizer, minimize_dirichlet, minimize_jacobi, SolveResult};
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Clone, Debug)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
    /// False when a verification failed; the artifacts are written regardless.
    pub success: bool,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    dir: PathBuf,
    files: Vec<String>,
    warnings: Vec<String>,
    summary: serde_json::Value,
    success: bool,
}

impl Ctx<'_> {
    fn path(&mut self, file: &str) -> PathBuf {
        self.files.push(file.to_string());
        self.dir.join(file)
    }

    fn json<T: serde::Serialize>(&mut self, file: &str, v: &T) -> Result<()> {
        let p = self.path(file);
        io::write_json(&p, v)
    }
}

pub fn run_file(path: &Path) -> Result<RunReport> {
    run(&ExperimentConfig::load(path)?)
}

pub fn run(loaded: &LoadedConfig) -> Result<RunReport> {
    let cfg = &loaded.config;
    let start = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let dir = cfg.output_path();
    fs::create_dir_all(&dir)?;
    let mut ctx = Ctx { cfg, dir: dir.clone(), files: Vec::new(), warnings: Vec::new(), summary: json!({}), success: true };
    match cfg.task {
        Task::Minimize => minimize_task(&mut ctx)?,
        Task::Frequency => frequency_task(&mut ctx)?,
        Task::Blowup => blowup_task(&mut ctx)?,
        Task::Extend => extend_task(&mut ctx)?,
        Task::Verify => verify_task(&mut ctx)?,
    }
    let artifacts: Vec<Artifact> = ctx.files.iter().map(|f| io::artifact(&dir, f)).collect::<Result<_>>()?;
    let manifest = Manifest {
        task: cfg.task.name().to_string(),
        config_sha256: io::sha256_hex(loaded.text.as_bytes()),
        seed: cfg.seed,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        field_format_version: io::FIELD_VERSION,
        started_unix,
        wall_time_s: start.elapsed().as_secs_f64(),
        warnings: ctx.warnings.clone(),
        artifacts,
        summary: ctx.summary.clone(),
    };
    io::write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(RunReport { output_dir: dir, manifest, success: ctx.success })
}

fn build_mesh(cfg: &ExperimentConfig) -> Result<Arc<Mesh>> {
    let scene = cfg.scene()?;
    let h = cfg.h.ok_or_else(|| Error::Config("missing `h`".into()))?;
    Ok(Arc::new(match cfg.mesh.kind {
        MeshKind::Ball => Mesh::ball(&scene, cfg.mesh.radius, h)?,
        MeshKind::Closed => Mesh::closed(&scene, h)?,
    }))
}

/// Embeds normal-frame coordinates at x into the ambient space.
fn embed(mesh: &Mesh, x: &[f64], sheets: &[Vec<f64>]) -> Result<QPoint> {
    let frame = mesh.scene().normal_frame(x);
    let mut out = Vec::with_capacity(sheets.len());
    for s in sheets {
        if s.len() != frame.len() {
            return Err(Error::Config(format!(
                "boundary sheets need {} normal coordinates (got {})",
                frame.len(),
                s.len()
            )));
        }
        let mut v = vec![0.0; mesh.d()];
        for (c, e) in s.iter().zip(&frame) {
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi += c * ei;
            }
        }
        out.push(v);
    }
    QPoint::from_sheets(&out)
}

fn decomposition(pieces: &[io::PieceRecord]) -> Result<CircleMapDecomposition> {
    let d = pieces.first().map_or(0, |p| p.a0.len());
    CircleMapDecomposition::from_modes(d, pieces.iter().map(|p| (p.k, p.a0.clone(), p.a.clone(), p.b.clone())).collect())
}

fn boundary(cfg: &ExperimentConfig, mesh: &Arc<Mesh>) -> Result<Vec<QPoint>> {
    let q = cfg.q.ok_or_else(|| Error::Config("missing `Q`".into()))?;
    let spec = cfg.boundary.as_ref().ok_or_else(|| Error::Config("missing [boundary]".into()))?;
    let bd = match spec {
        BoundarySpec::Constant { value } => {
            let verts = mesh.boundary_vertices();
            verts.iter().map(|&v| embed(mesh, mesh.point(v), value)).collect::<Result<Vec<_>>>()?
        }
        BoundarySpec::Modes { pieces } => {
            if mesh.m() != 2 {
                return Err(Error::Config("`modes` boundaries need a two-dimensional Σ".into()));
            }
            let dec = decomposition(pieces)?;
            let mut out = Vec::new();
            for v in mesh.boundary_vertices() {
                let y = mesh.chart_coords(v);
                let t = dec.trace((y[0] * y[0] + y[1] * y[1]).sqrt(), y[1].atan2(y[0]));
                let sheets: Vec<Vec<f64>> = t.sheets().map(<[f64]>::to_vec).collect();
                out.push(embed(mesh, mesh.point(v), &sheets)?);
            }
            out
        }
        BoundarySpec::File { path } => read_boundary_file(&cfg.resolve(path), mesh)?,
    };
    if let Some(p) = bd.iter().find(|p| p.q() != q) {
        return Err(Error::Config(format!("boundary has Q = {}, config says Q = {q}", p.q())));
    }
    Ok(bd)
}

fn read_boundary_file(path: &Path, mesh: &Arc<Mesh>) -> Result<Vec<QPoint>> {
    let text = fs::read_to_string(path)?;
    let verts = mesh.boundary_vertices();
    if text.starts_with(io::FIELD_MAGIC) {
        let f = io::read_field(path)?;
        if f.mesh().num_vertices() != mesh.num_vertices() {
            return Err(Error::Config(format!("{} lives on a different mesh", path.display())));
        }
        return Ok(verts.iter().map(|&v| f.value(v)).collect());
    }
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(QPoint::from_record(t).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?);
    }
    if out.len() != verts.len() {
        return Err(Error::Config(format!("{} has {} records for {} boundary vertices", path.display(), out.len(), verts.len())));
    }
    Ok(out)
}

fn solve(ctx: &mut Ctx) -> Result<SolveResult> {
    let cfg = ctx.cfg;
    let mesh = build_mesh(cfg)?;
    let bd = boundary(cfg, &mesh)?;
    let mut sc = cfg.solver.clone();
    sc.seed = cfg.seed;
    let res = if mesh.scene().is_flat() { minimize_dirichlet(mesh, &bd, &sc)? } else { minimize_jacobi(mesh, &bd, &sc)? };
    if let Some(w) = &res.warning {
        ctx.warnings.push(w.clone());
    }
    if !res.converged {
        ctx.warnings.push("solver did not converge within max_iters".into());
    }
    Ok(res)
}

/// The stored field named in the analysis block, or a fresh minimizer.
fn field(ctx: &mut Ctx) -> Result<DiscreteQField> {
    match &ctx.cfg.analysis.field {
        Some(p) => io::read_field(&ctx.cfg.resolve(p)),
        None => {
            let res = solve(ctx)?;
            let p = ctx.path("field.qf");
            io::write_field(&p, &res.field)?;
            Ok(res.field)
        }
    }
}

fn pole(ctx: &Ctx, n: &DiscreteQField) -> Result<Vec<f64>> {
    let p = ctx.cfg.analysis.pole.clone().unwrap_or_else(|| n.mesh().scene().pole());
    if p.len() != n.mesh().d() {
        return Err(Error::Config(format!("pole needs {} coordinates (got {})", n.mesh().d(), p.len())));
    }
    Ok(p)
}

fn minimize_task(ctx: &mut Ctx) -> Result<()> {
    let res = solve(ctx)?;
    let p = ctx.path("field.qf");
    io::write_field(&p, &res.field)?;
    let cert = certify_minimizer(&res.field)?;
    let summary = json!({
        "energy": res.energy,
        "restart_energies": res.restart_energies,
        "best_restart": res.best_restart,
        "accepted_swaps": res.accepted_swaps,
        "converged": res.converged,
        "trace": res.trace,
        "certification": cert,
    });
    ctx.json("minimize.json", &summary)?;
    ctx.summary = json!({ "energy": res.energy, "outer_residual": cert.outer_residual, "inner_residual": cert.inner_residual });
    Ok(())
}

fn frequency_task(ctx: &mut Ctx) -> Result<()> {
    let n = field(ctx)?;
    let p = pole(ctx, &n)?;
    let a = &ctx.cfg.analysis;
    let radii: Vec<f64> = default_radii(n.mesh(), &p, a.r_max).into_iter().filter(|&r| a.r_min.is_none_or(|lo| r >= lo)).collect();
    let prof = radial_profiles(&n, &p, &radii)?;
    let path = ctx.path("profile.csv");
    io::write_profile_csv(&path, &prof)?;
    let audit = match monotonicity_audit(&prof) {
        Ok(a) => Some(a),
        Err(e) => {
            ctx.warnings.push(format!("monotonicity audit skipped: {e}"));
            None
        }
    };
    let fit = decay_fit(&prof)?;
    if fit.inconsistent {
        ctx.warnings.push("fitted I0 ≤ 0 for a field that does not vanish at the pole".into());
    }
    if fit.heuristic {
        ctx.warnings.push("power-law decay fit is heuristic away from surfaces".into());
    }
    let rep = FitReport::new(&fit, audit.as_ref());
    ctx.json("fit.json", &rep)?;
    ctx.summary = json!({ "I0": rep.i0, "H0": rep.h0, "D0": rep.d0, "beta": rep.beta, "lambda": rep.lambda, "C0": rep.c0 });
    Ok(())
}

fn blowup_task(ctx: &mut Ctx) -> Result<()> {
    let n = field(ctx)?;
    let p = pole(ctx, &n)?;
    let a = ctx.cfg.analysis.clone();
    let strata = multiplicity_strata(&n, a.tau_coin)?;
    ctx.json("strata.json", &strata)?;
    let rmax = max_radius(n.mesh(), &p);
    let radii: Vec<f64> = a.blowup_fractions.iter().map(|f| f * rmax).collect();
    let target = blow_up_domain(n.mesh().scene(), a.blowup_h)?;
    match tangent_map(&n, &p, &radii, &target, a.collapse_tol) {
        Ok(tm) => {
            if tm.non_convergent {
                ctx.warnings.push("blow-up differences do not decrease".into());
            }
            let path = ctx.path("tangent.qf");
            io::write_field(&path, &tm.limit)?;
            let s = json!({
                "radii": radii,
                "mu": tm.mu,
                "mu_frequency": tm.mu_frequency,
                "cauchy": tm.cauchy,
                "non_convergent": tm.non_convergent,
                "eta_max": tm.eta_max,
                "origin_value": tm.origin_value,
                "singular_vertices": strata.singular.len(),
            });
            ctx.json("blowup.json", &s)?;
            ctx.summary = s;
        }
        Err(e @ (Error::VanishingNorm { .. } | Error::NotCollapsed { .. })) => {
            ctx.warnings.push(format!("no tangent map: {e}"));
            ctx.summary = json!({ "singular_vertices": strata.singular.len() });
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn extend_task(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let Some(BoundarySpec::Modes { pieces }) = &cfg.boundary else {
        return Err(Error::Config("task `extend` needs a `modes` boundary".into()));
    };
    let r = cfg.mesh.radius;
    let a = &cfg.analysis;
    let given = decomposition(pieces)?;
    // round trip through samples so the decomposition step itself is exercised
    let samples = given.sample(r, a.samples);
    let dec = decompose_irreducible(&samples, r, a.n_max, a.tau_coin)?;
    if dec.reassembly_error > 1e-8 {
        ctx.warnings.push(format!("decomposition reassembles with error {:.3e}", dec.reassembly_error));
    }
    ctx.json("decomposition.json", &DecompositionRecord::from_decomposition(&dec))?;
    let (_, rep) = harmonic_extension(&dec, r)?;
    let quad = quadrature_energies(&dec, r, a.quadrature_points);
    let e = rep.energies;
    let s = json!({
        "radius": r,
        "windings": dec.windings(),
        "disk_dirichlet": e.disk_dirichlet,
        "circle_dirichlet": e.circle_dirichlet,
        "circle_l2": e.circle_l2,
        "disk_l2": e.disk_l2,
        "dir_ratio": rep.dir_ratio,
        "l2_ratio": rep.l2_ratio,
        "quadrature": {
            "disk_dirichlet": quad.disk_dirichlet,
            "circle_dirichlet": quad.circle_dirichlet,
            "circle_l2": quad.circle_l2,
            "disk_l2": quad.disk_l2,
        },
        "reassembly_error": dec.reassembly_error,
    });
    ctx.json("extend.json", &s)?;
    ctx.summary = s;
    Ok(())
}

fn verify_task(ctx: &mut Ctx) -> Result<()> {
    let outcomes = Suite::new(ctx.cfg.seed).run_all();
    ctx.success = outcomes.iter().all(|o| o.passed);
    ctx.json("verify.json", &outcomes)?;
    ctx.summary = serde_json::to_value(&outcomes)?;
    Ok(())
}
