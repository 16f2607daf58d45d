use thiserror::Error;

use crate::geometry::Vec2;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("segment has zero length or non-finite endpoints")]
    DegenerateSegment,
    #[error("crack is collinear with the lattice link {p:?}-{q:?}")]
    CollinearCrack { p: Vec2, q: Vec2 },
    #[error("invalid outline: {0}")]
    InvalidOutline(String),
    #[error("invalid crack: {0}")]
    InvalidCrack(String),
    #[error("geometry has no boundary")]
    NoBoundary,
    #[error("point {x:?} lies on the boundary")]
    OnBoundary { x: Vec2 },
}

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("invalid lattice parameters: {0}")]
    InvalidSpec(String),
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("interior site {site} is missing distribution {alpha}")]
    MissingInteriorDistribution { site: usize, alpha: usize },
    #[error("asymmetric link at site {site} in direction {alpha}")]
    AsymmetricLink { site: usize, alpha: usize },
    #[error("wave-speed calibration failed: {0}")]
    Calibration(String),
}

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("unresolvable stencil at site {site}: {reason}")]
    UnresolvableStencil { site: usize, reason: String },
    #[error("singular boundary system; offending sites {sites:?}")]
    Singular { sites: Vec<usize> },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error)]
pub enum FractureError {
    #[error("invalid fracture criterion: {0}")]
    InvalidCriterion(String),
    #[error("relative crack speed {0} must be in [0, 1)")]
    InvalidSpeed(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
}

/// Top-level error of a simulation run.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("geometry error: {0}")]
    Geometry(#[from] GeometryError),
    #[error("step {step}: {source}")]
    Lattice { step: u64, source: LatticeError },
    #[error("step {step}: {source}")]
    Boundary { step: u64, source: BoundaryError },
    #[error("step {step}: {source}")]
    Fracture { step: u64, source: FractureError },
    #[error("{0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl SimError {
    /// Configuration problems map to exit code 2, everything else to 3.
    pub fn is_config(&self) -> bool {
        matches!(self, SimError::Config(_) | SimError::Geometry(_) | SimError::Json(_))
    }
}
