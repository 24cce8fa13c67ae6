use thiserror::Error;

/// Errors produced by the geometry, meshing, assembly and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({x}, {y}) is not an interior point of the unit disk")]
    PointOutsideDisk { x: f64, y: f64 },

    #[error("point ({x}, {y}) does not lie on the ideal boundary circle")]
    NotOnIdealBoundary { x: f64, y: f64 },

    #[error("ideal point passed where an interior point is required")]
    IdealPointNotAllowed,

    #[error("degenerate geodesic request: endpoints coincide")]
    DegenerateGeodesic,

    #[error("invalid interior angle {0}: must lie in [0, pi)")]
    InvalidAngle(f64),

    #[error("no hyperbolic polygon with this angle sum: area would be {0}")]
    NonPositiveArea(f64),

    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),

    #[error("self-intersecting boundary")]
    SelfIntersectingBoundary,

    #[error("invalid Mobius parameters: |a|^2 - |b|^2 = {0}, expected 1")]
    InvalidMobius(f64),

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("quadrature failed to converge: {0}")]
    QuadratureFailure(String),

    #[error("no sign change found in [{lo}, {hi}] while bracketing {what}")]
    BracketFailure { what: String, lo: f64, hi: f64 },

    #[error("root refinement failed: {0}")]
    RootFailure(String),

    #[error("invalid domain spec: {0}")]
    SpecValidation(String),

    #[error("mesh refinement failed: {0}")]
    RefinementFailure(String),

    #[error("mesh is invalid: {0}")]
    InvalidMesh(String),

    #[error("degenerate triangle {0} (area {1:.3e})")]
    DegenerateTriangle(usize, f64),

    #[error("all vertices are constrained; no free unknowns remain")]
    AllConstrained,

    #[error("zero vector passed to a Rayleigh quotient")]
    ZeroVector,

    #[error("matrix factorization failed: {0}")]
    FactorizationFailure(String),

    #[error("eigensolver did not converge: requested tol {tol:.3e}, worst residual {achieved:.3e}")]
    NonConvergence { tol: f64, achieved: f64 },

    #[error("eigenpair index {index} out of range ({available} available)")]
    IndexOutOfRange { index: usize, available: usize },

    #[error("unknown strategy '{name}'; available: {available}")]
    UnknownStrategy { name: String, available: String },

    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
