use thiserror::Error;

#[derive(Debug, Error)]
pub enum HdgError {
    #[error("invalid mesh configuration: {0}")]
    InvalidMesh(String),

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("unsupported quadrature: {0}")]
    Quadrature(String),

    #[error("invalid problem definition: {0}")]
    InvalidProblem(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("problem has no exact solution attached")]
    MissingExact,

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("singular local system on cell ({i}, {j}): relative pivot {pivot:.3e}")]
    SingularCell { i: usize, j: usize, pivot: f64 },

    #[error("stabilization condition violated: min(tau - beta.n/2) = {margin:.6e} at ({x}, {y})")]
    Stabilization { margin: f64, x: f64, y: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("nonpositive error value in rate computation: {0}")]
    Rate(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, HdgError>;
