//! Experiment configuration files (TOML).
//!
//! ```toml
//! task = "frequency"
//! seed = 7
//! output_dir = "out/w3"
//! Q = 2
//! h = 0.03125
//!
//! [scene]
//! name = "flat_disk"
//! params = { m = 2, k = 2 }
//!
//! [boundary]
//! kind = "modes"
//! pieces = [{ k = 2, a0 = [0.0, 0.0], a = [[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]], b = [[0.0, 0.0], [0.0, 0.0], [0.0, 1.0]] }]
//! ```
//!
//! Relative paths are resolved against the directory holding the config.

use crate::error::{Error, Result};
use crate::io::{PieceRecord, SceneRef};
use crate::scene::{builtin_scene, Scene};
use crate::solver::SolveConfig;
use serde::Deserialize;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Minimize,
    Frequency,
    Blowup,
    Extend,
    Verify,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Minimize => "minimize",
            Task::Frequency => "frequency",
            Task::Blowup => "blowup",
            Task::Extend => "extend",
            Task::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    Ball,
    Closed,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    #[serde(default = "default_mesh_kind")]
    pub kind: MeshKind,
    /// Geodesic radius of a ball mesh.
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_mesh_kind() -> MeshKind {
    MeshKind::Ball
}

fn default_radius() -> f64 {
    1.0
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self { kind: MeshKind::Ball, radius: 1.0 }
    }
}

/// Boundary values are given in coordinates of the normal frame, so a
/// sheet has as many entries as Σ has normal directions.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    Constant { value: Vec<Vec<f64>> },
    /// Irreducible pieces (k, Fourier coefficients), traced on the boundary circle.
    Modes { pieces: Vec<PieceRecord> },
    /// A `.qf` field on the same mesh, or one Q-point record per boundary vertex.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Centre of profiles and blow-ups; the scene pole when omitted.
    pub pole: Option<Vec<f64>>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub tau_coin: f64,
    /// G(N(p), Q⟦0⟧) below which the pole counts as collapsed.
    pub collapse_tol: f64,
    /// Blow-up radii as fractions of the largest usable radius.
    pub blowup_fractions: Vec<f64>,
    pub blowup_h: f64,
    /// Analyse a stored field instead of minimizing first.
    pub field: Option<PathBuf>,
    /// Angular samples for the `extend` decomposition.
    pub samples: usize,
    pub n_max: usize,
    pub quadrature_points: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            pole: None,
            r_min: None,
            r_max: None,
            tau_coin: crate::aq::TAU_COIN,
            collapse_tol: 1e-2,
            blowup_fractions: vec![0.8, 0.4],
            blowup_h: 1.0 / 32.0,
            field: None,
            samples: 512,
            n_max: crate::harmonic::DEFAULT_N_MAX,
            quadrature_points: 2048,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub scene: Option<SceneRef>,
    #[serde(default)]
    pub h: Option<f64>,
    #[serde(rename = "Q", default)]
    pub q: Option<usize>,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub solver: SolveConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// A parsed config with the raw text it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub text: String,
    pub path: PathBuf,
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// First line whose key is `key`, for messages about semantic errors.
pub fn line_of_key(text: &str, key: &str) -> usize {
    text.lines()
        .position(|l| {
            let t = l.trim_start();
            t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
                || t.trim_end() == format!("[{key}]")
        })
        .map_or(1, |i| i + 1)
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(1, |s| line_of_offset(text, s.start));
            Error::Parse { line, msg: e.message().to_string() }
        })?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let config = Self::parse(&text, &base)?;
        Ok(LoadedConfig { config, text, path: path.to_path_buf() })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn scene(&self) -> Result<Scene> {
        let s = self.scene.as_ref().ok_or_else(|| Error::Config("missing [scene]".into()))?;
        builtin_scene(&s.name, &s.params)
    }

    fn validate(&self, text: &str) -> Result<()> {
        let at = |key: &str, msg: String| Error::Parse { line: line_of_key(text, key), msg };
        if let Some(s) = &self.scene {
            builtin_scene(&s.name, &s.params).map_err(|e| at("name", e.to_string()))?;
        }
        self.solver.validate().map_err(|e| at("solver", e.to_string()))?;
        if let Some(h) = self.h {
            if !(h > 0.0 && h < 1.0) {
                return Err(at("h", format!("h must lie in (0, 1) (got {h})")));
            }
        }
        if self.q == Some(0) {
            return Err(at("Q", "Q must be at least 1".into()));
        }
        if !(self.mesh.radius > 0.0) {
            return Err(at("radius", format!("mesh radius must be positive (got {})", self.mesh.radius)));
        }
        let a = &self.analysis;
        if a.blowup_fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
            return Err(at("blowup_fractions", "blow-up fractions must lie in (0, 1)".into()));
        }
        if !(a.blowup_h > 0.0) || a.samples < 8 || a.quadrature_points < 8 {
            return Err(at("analysis", "blowup_h must be positive, samples and quadrature_points at least 8".into()));
        }
        let needs_mesh = matches!(self.task, Task::Minimize) || (matches!(self.task, Task::Frequency | Task::Blowup) && a.field.is_none());
        if needs_mesh {
            for (key, missing) in [("scene", self.scene.is_none()), ("h", self.h.is_none()), ("Q", self.q.is_none()), ("boundary", self.boundary.is_none())] {
                if missing {
                    return Err(at("task", format!("task `{}` needs `{key}`", self.task.name())));
                }
            }
        }
        if self.task == Task::Extend && !matches!(self.boundary, Some(BoundarySpec::Modes { .. })) {
            return Err(at("boundary", "task `extend` needs a `modes` boundary".into()));
        }
        for p in [a.field.as_ref(), match &self.boundary {
            Some(BoundarySpec::File { path }) => Some(path),
            _ => None,
        }]
        .into_iter()
        .flatten()
        {
            if !self.resolve(p).exists() {
                return Err(at(if a.field.as_ref() == Some(p) { "field" } else { "path" }, format!("file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}
