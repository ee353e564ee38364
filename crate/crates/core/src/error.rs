use thiserror::Error;

/// Grid node address `(i, j)`, `i` along the u axis.
pub type Node = (usize, usize);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("vector is not tangent to S3 (|<v,z>| = {residual:.3e})")]
    NotTangent { residual: f64 },

    #[error("point at node {node:?} is off the unit sphere (|z| = {norm:.9})")]
    OffSphere { node: Node, norm: f64 },

    #[error("degenerate parametrization at node {node:?} (Gram determinant {gram:.3e})")]
    DegenerateParametrization { node: Node, gram: f64 },

    #[error("tangent plane coincides with the contact plane (|<xi,n>| = {alignment:.12})")]
    DegenerateContact { alignment: f64 },

    #[error("{masked} of {total} nodes are contact-degenerate (limit is 20%)")]
    TooManyMasked { masked: usize, total: usize },

    #[error("degenerate metric at node {node:?} (det g = {det:.3e})")]
    DegenerateMetric { node: Node, det: f64 },

    #[error("grid too coarse: {axis} axis has {n} nodes, needs at least {required}")]
    InsufficientResolution { axis: &'static str, n: usize, required: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("parameter {name} = {value} outside ({lo}, {hi})")]
    RangeError { name: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("perturbation amplitude {amplitude} exceeds 0.2")]
    AmplitudeTooLarge { amplitude: f64 },

    #[error("surface {0} is not doubly periodic")]
    NotPeriodic(String),

    #[error("unknown surface {0:?}")]
    UnknownSurface(String),

    #[error("unknown parameter {param:?} for surface {surface:?}")]
    UnknownParameter { surface: String, param: String },

    #[error("invalid value for parameter {name}: {message}")]
    InvalidParameter { name: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("displacement step collapses the surface at node {node:?} (Gram determinant {gram:.3e})")]
    StepTooLarge { node: Node, gram: f64 },

    #[error("r-only descent needs an rtorus surface, got {0:?}")]
    UnsupportedMode(String),
}

impl From<std::io::Error> for GeomError {
    fn from(err: std::io::Error) -> Self {
        GeomError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;
