//! On-disk formats: the versioned `.qf` field file, decompositions as JSON,
//! `profile.csv`, `fit.json` and the run manifest.
//!
//! A `.qf` file is a magic line `qfield <version>`, one line of JSON metadata
//! naming the scene and mesh, then one Q-point record per vertex
//! (`Q d x_1 … x_{Qd}`, see [`QPoint::to_record`]). Matchings are not stored;
//! they are recomputed on load.

use crate::aq::QPoint;
use crate::error::{Error, Result};
use crate::field::DiscreteQField;
use crate::frequency::{DecayFit, FrequencyProfile, MonotonicityAudit};
use crate::harmonic::CircleMapDecomposition;
use crate::mesh::{Mesh, MeshSpec};
use crate::scene::builtin_scene;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

pub const FIELD_MAGIC: &str = "qfield";
pub const FIELD_VERSION: u32 = 1;
pub const DECOMPOSITION_VERSION: u32 = 1;
pub const PROFILE_HEADER: [&str; 8] = ["r", "D", "H", "E", "G", "F", "I", "valid"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneRef {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct FieldMeta {
    scene: SceneRef,
    mesh: MeshSpec,
    q: usize,
    d: usize,
    normal: bool,
    vertices: usize,
}

pub fn write_field(path: &Path, n: &DiscreteQField) -> Result<()> {
    let mesh = n.mesh();
    let meta = FieldMeta {
        scene: SceneRef { name: mesh.scene().name().to_string(), params: mesh.scene().params() },
        mesh: mesh.spec().clone(),
        q: n.q(),
        d: n.d(),
        normal: n.is_normal(),
        vertices: mesh.num_vertices(),
    };
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "{FIELD_MAGIC} {FIELD_VERSION}")?;
    writeln!(out, "{}", serde_json::to_string(&meta)?)?;
    for v in 0..mesh.num_vertices() {
        // storage order, not canonical order: sheets keep their matching slots
        let p = n.value(v);
        let mut s = format!("{} {}", p.q(), p.d());
        for x in p.as_flat() {
            s.push(' ');
            s.push_str(&format!("{x:?}"));
        }
        writeln!(out, "{s}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a `.qf` file, rebuilding the mesh from its spec.
pub fn read_field(path: &Path) -> Result<DiscreteQField> {
    let file = fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let mut next = |line: usize| -> Result<String> {
        lines.next().ok_or_else(|| Error::Parse { line, msg: "unexpected end of file".into() })?.map_err(Error::from)
    };
    let magic = next(1)?;
    let mut parts = magic.split_whitespace();
    if parts.next() != Some(FIELD_MAGIC) {
        return Err(Error::Parse { line: 1, msg: format!("expected `{FIELD_MAGIC} <version>`") });
    }
    match parts.next().map(str::parse::<u32>) {
        Some(Ok(FIELD_VERSION)) => {}
        Some(Ok(v)) => return Err(Error::Parse { line: 1, msg: format!("unsupported field version {v}") }),
        _ => return Err(Error::Parse { line: 1, msg: "missing version".into() }),
    }
    let meta: FieldMeta = serde_json::from_str(&next(2)?).map_err(|e| Error::Parse { line: 2, msg: e.to_string() })?;
    let scene = builtin_scene(&meta.scene.name, &meta.scene.params).map_err(|e| Error::Parse { line: 2, msg: e.to_string() })?;
    let mesh = Arc::new(Mesh::build(&scene, &meta.mesh).map_err(|e| Error::Parse { line: 2, msg: e.to_string() })?);
    if mesh.num_vertices() != meta.vertices {
        return Err(Error::Parse {
            line: 2,
            msg: format!("mesh spec gives {} vertices, header says {}", mesh.num_vertices(), meta.vertices),
        });
    }
    let mut values = Vec::with_capacity(meta.vertices * meta.q * meta.d);
    for v in 0..meta.vertices {
        let line = v + 3;
        let p = QPoint::from_record(&next(line)?).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if p.q() != meta.q || p.d() != meta.d {
            return Err(Error::Parse { line, msg: format!("record has Q={}, d={}; header says Q={}, d={}", p.q(), p.d(), meta.q, meta.d) });
        }
        values.extend_from_slice(p.as_flat());
    }
    DiscreteQField::new(mesh, meta.q, meta.d, values, meta.normal)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceRecord {
    pub k: usize,
    pub a0: Vec<f64>,
    #[serde(default)]
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub b: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub version: u32,
    pub q: usize,
    pub d: usize,
    pub radius: f64,
    pub n_max: usize,
    pub reassembly_error: f64,
    pub pieces: Vec<PieceRecord>,
}

impl DecompositionRecord {
    pub fn from_decomposition(dec: &CircleMapDecomposition) -> Self {
        Self {
            version: DECOMPOSITION_VERSION,
            q: dec.q,
            d: dec.d,
            radius: dec.radius,
            n_max: dec.n_max,
            reassembly_error: dec.reassembly_error,
            pieces: dec.pieces.iter().map(|p| PieceRecord { k: p.k, a0: p.a0.clone(), a: p.a.clone(), b: p.b.clone() }).collect(),
        }
    }

    pub fn to_decomposition(&self) -> Result<CircleMapDecomposition> {
        if self.version != DECOMPOSITION_VERSION {
            return Err(Error::Config(format!("unsupported decomposition version {}", self.version)));
        }
        let modes = self.pieces.iter().map(|p| (p.k, p.a0.clone(), p.a.clone(), p.b.clone())).collect();
        let mut dec = CircleMapDecomposition::from_modes(self.d, modes)?;
        dec.radius = self.radius;
        dec.reassembly_error = self.reassembly_error;
        Ok(dec)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn write_profile_csv(path: &Path, p: &FrequencyProfile) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(PROFILE_HEADER)?;
    for k in 0..p.radii.len() {
        let row = [p.radii[k], p.d[k], p.h[k], p.e[k], p.g[k], p.f[k], p.i[k]];
        let mut rec: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        rec.push(if p.valid[k] { "1".into() } else { "0".into() });
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `profile.csv` back; the pole and dimension are not stored there.
pub fn read_profile_csv(path: &Path, pole: Vec<f64>, m: usize) -> Result<FrequencyProfile> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != PROFILE_HEADER {
        return Err(Error::Parse { line: 1, msg: format!("expected header {}", PROFILE_HEADER.join(",")) });
    }
    let mut p = FrequencyProfile { pole, m, radii: vec![], d: vec![], h: vec![], e: vec![], g: vec![], f: vec![], i: vec![], valid: vec![] };
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = row + 2;
        let num = |j: usize| -> Result<f64> {
            rec.get(j)
                .ok_or_else(|| Error::Parse { line, msg: format!("missing column {}", PROFILE_HEADER[j]) })?
                .parse()
                .map_err(|_| Error::Parse { line, msg: format!("bad number in column {}", PROFILE_HEADER[j]) })
        };
        p.radii.push(num(0)?);
        p.d.push(num(1)?);
        p.h.push(num(2)?);
        p.e.push(num(3)?);
        p.g.push(num(4)?);
        p.f.push(num(5)?);
        p.i.push(num(6)?);
        p.valid.push(rec.get(7) == Some("1"));
    }
    Ok(p)
}

/// Contents of `fit.json`.
#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    #[serde(rename = "I0")]
    pub i0: f64,
    #[serde(rename = "H0")]
    pub h0: f64,
    #[serde(rename = "D0")]
    pub d0: f64,
    pub beta: Option<f64>,
    pub lambda: Option<f64>,
    #[serde(rename = "C0")]
    pub c0: Option<f64>,
    pub i0_interval: f64,
    pub residuals: [f64; 3],
    pub contract_gap: f64,
    pub heuristic: bool,
    pub exact_constant: bool,
    pub inconsistent: bool,
    pub audit: Option<MonotonicityAudit>,
}

impl FitReport {
    pub fn new(fit: &DecayFit, audit: Option<&MonotonicityAudit>) -> Self {
        Self {
            i0: fit.i0,
            h0: fit.h0,
            d0: fit.d0,
            beta: fit.beta,
            lambda: audit.map(|a| a.lambda),
            c0: audit.map(|a| a.c0),
            i0_interval: fit.i0_interval,
            residuals: fit.residuals,
            contract_gap: fit.contract_gap,
            heuristic: fit.heuristic,
            exact_constant: fit.exact_constant,
            inconsistent: fit.inconsistent,
            audit: audit.cloned(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub task: String,
    pub config_sha256: String,
    pub seed: u64,
    pub crate_version: String,
    pub field_format_version: u32,
    pub started_unix: u64,
    pub wall_time_s: f64,
    pub warnings: Vec<String>,
    pub artifacts: Vec<Artifact>,
    /// Task-specific headline values (the verify task lists every criterion here).
    pub summary: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn artifact(dir: &Path, file: &str) -> Result<Artifact> {
    Ok(Artifact { file: file.to_string(), sha256: sha256_hex(&fs::read(dir.join(file))?) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Scene;

    #[test]
    fn field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 2, 0), 1.0, 0.2).unwrap());
        let n = DiscreteQField::from_normal_coefficients(mesh, 2, |_, x| vec![vec![x[0], 0.1], vec![-x[1] / 3.0, x[0] * x[1]]]).unwrap();
        let path = dir.path().join("f.qf");
        write_field(&path, &n).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.values(), n.values());
        assert_eq!(back.mesh().num_vertices(), n.mesh().num_vertices());
        assert!(back.is_normal());
    }

    #[test]
    fn truncated_field_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = Arc::new(Mesh::ball(&Scene::flat_disk(2, 1, 0), 1.0, 0.3).unwrap());
        let n = DiscreteQField::from_normal_coefficients(mesh, 1, |_, x| vec![vec![x[0]]]).unwrap();
        let path = dir.path().join("f.qf");
        write_field(&path, &n).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[4] = "1 3 0.0 abc 0.0";
        fs::write(&path, lines.join("\n")).unwrap();
        match read_field(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn profile_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = crate::checks::two_mode_profile(0.1, &[0.1, 0.2, 0.4]);
        let path = dir.path().join("profile.csv");
        write_profile_csv(&path, &p).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("r,D,H,E,G,F,I,valid\n"));
        let back = read_profile_csv(&path, p.pole.clone(), 2).unwrap();
        assert_eq!(back.d, p.d);
        assert_eq!(back.i, p.i);
        assert_eq!(back.valid, p.valid);
    }

    #[test]
    fn decomposition_round_trip() {
        let dec = CircleMapDecomposition::from_modes(2, vec![(2, vec![0.5, 0.0], vec![vec![1.0, 0.0]], vec![vec![0.0, 1.0]])]).unwrap();
        let rec = DecompositionRecord::from_decomposition(&dec);
        let json = serde_json::to_string(&rec).unwrap();
        let back: DecompositionRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_decomposition().unwrap(), dec);
    }

    #[test]
    fn fit_keys() {
        let p = crate::checks::two_mode_profile(0.05, &(0..10).map(|k| 0.05 * 1.2f64.powi(k)).collect::<Vec<_>>());
        let fit = crate::frequency::decay_fit(&p).unwrap();
        let v = serde_json::to_value(FitReport::new(&fit, None)).unwrap();
        for key in ["I0", "H0", "D0", "beta", "lambda", "C0"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
