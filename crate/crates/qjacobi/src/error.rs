use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (left {left}, right {right})")]
    DimensionMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },
    #[error("invalid q-point: {0}")]
    InvalidPoint(String),
    #[error("basis is not orthonormal: max Gram deviation {max_deviation:.3e}")]
    NonOrthonormal { max_deviation: f64 },
    #[error("vector leaves the normal fiber by {deviation:.3e}")]
    OffFiber { deviation: f64 },
    #[error("radius {radius} exceeds the injectivity bound {bound}")]
    InjectivityExceeded { radius: f64, bound: f64 },
    #[error("unknown scene `{0}`; available: flat_disk, equatorial_sphere")]
    UnknownScene(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("sheet matchings are stale; call rematch() after editing values")]
    StaleMatchings,
    #[error("field is not a normal section (max fiber deviation {deviation:.3e})")]
    NotNormalSection { deviation: f64 },
    #[error(
        "ambiguous sheet matching at sample {sample} (cost gap {gap:.3e}); refine the circle grid"
    )]
    AmbiguousMatching { sample: usize, gap: f64 },
    #[error("unsupported test shape: {0}")]
    UnsupportedTest(String),
    #[error("homogeneous extension needs dimension j >= 3 (got {0}); use harmonic_extension for j = 2")]
    PlanarHomogeneous(usize),
    #[error("quadratic form is not positive on the free slots (curvature {curvature:.3e}); the region is not strictly stable")]
    NotStable { curvature: f64 },
    #[error("radius {radius} is beyond the usable domain (max {max})")]
    RadiusBeyondDomain { radius: f64, max: f64 },
    #[error("L2 norm {norm:.3e} on the ball vanishes; the field is identically zero near the pole")]
    VanishingNorm { norm: f64 },
    #[error("need at least {need} valid radii, got {got}")]
    TooFewRadii { need: usize, got: usize },
    #[error("pole is not a collapsed point (distance {distance:.3e} from the zero Q-point)")]
    NotCollapsed { distance: f64 },
    #[error("point lies outside the mesh")]
    OutsideMesh,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
