//! Q-valued sections on minimal submanifolds.

pub mod aq;
pub mod assignment;
pub mod checks;
pub mod collar;
pub mod config;
pub mod error;
pub mod field;
pub mod frequency;
pub mod harmonic;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod runner;
pub mod scene;
pub mod selection;
pub mod solver;
pub mod sparse;
pub mod variation;

pub use aq::{eta_mean, fiber_project, g_distance, spread_stats, QPoint, TAU_COIN};
pub use error::{Error, Result};
pub use mesh::{Mesh, MeshSpec};
pub use scene::{builtin_scene, Scene};
