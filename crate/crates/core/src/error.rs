use thiserror::Error;

/// Errors produced by table construction, evaluation and the fill harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid sampling configuration: {0}")]
    InvalidConfig(String),

    /// `exp(-jkr)/r` requested at `r = 0`.
    #[error("kernel singularity at r = {r}")]
    Singularity { r: f64 },

    #[error("radius {r} outside table range [{r_min}, {r_max}]")]
    OutOfRange { r: f64, r_min: f64, r_max: f64 },

    #[error("radius {r} lies outside the stencil hull [{lo}, {hi}]")]
    Extrapolation { r: f64, lo: f64, hi: f64 },

    /// Batch evaluation stopped at the first offending radius.
    #[error("batch element {index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("mesh parse error at line {line}: {msg}")]
    MeshParse { line: usize, msg: String },

    #[error("degenerate triangle {index} (area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("unsupported polygon with {vertices} vertices at line {line}; only triangles are accepted")]
    UnsupportedPolygon { line: usize, vertices: usize },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
