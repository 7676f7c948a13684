use thiserror::Error;

/// Errors raised by geometry construction and the numerical operators.
///
/// Preconditions that fail produce a dedicated variant naming the violated
/// hypothesis; quantities that are merely inadmissible (for example a mass
/// functional evaluated where its pointwise hypothesis fails) are reported
/// through flags on the result instead of through this type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown catalog data set `{0}`")]
    UnknownCatalog(String),

    #[error("invalid catalog parameter: {0}")]
    InvalidParameter(String),

    #[error("point ({x:.6}, {y:.6}, {z:.6}) lies outside the chart: {reason}")]
    OutsideChart { x: f64, y: f64, z: f64, reason: String },

    #[error("region violates the chart or sample margins: {0}")]
    BadRegion(String),

    #[error("sampled grid is malformed: {0}")]
    BadGrid(String),

    #[error("grid file parse failure at line {line}: {message}")]
    GridFile { line: usize, message: String },

    #[error("sphere grid must have n_theta >= {min_theta} and even n_phi >= {min_phi}, got ({n_theta}, {n_phi})")]
    BadSphereGrid { n_theta: usize, n_phi: usize, min_theta: usize, min_phi: usize },

    #[error("surface is degenerate at node {node}: {reason}")]
    DegenerateSurface { node: usize, reason: String },

    #[error("operation requires an asymptotically flat data set: {0}")]
    NotAsymptoticallyFlat(String),

    #[error("ADM evaluation needs at least {needed} extraction radii, got {got}")]
    TooFewRadii { needed: usize, got: usize },

    #[error("Gauss curvature of the induced metric is not strictly positive (min K = {min_k:.6e} at node {node}); the metric is outside the convex embedding class")]
    WeylConditionFailed { min_k: f64, node: usize },

    #[error("isometric embedding did not converge: residual_max {residual_max:.3e} after {iterations} iterations (tolerance {tolerance:.3e})")]
    EmbeddingDiverged { residual_max: f64, iterations: usize, tolerance: f64 },

    #[error("boundary hypothesis H - <X,nu> > 0 fails: min value {min_value:.6e}")]
    BoundaryHypothesis { min_value: f64 },

    #[error("flow hypothesis violated: {0}")]
    FlowHypothesis(String),

    #[error("shield parameter out of domain: {0}")]
    ShieldDomain(String),

    #[error("mismatched grids: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
