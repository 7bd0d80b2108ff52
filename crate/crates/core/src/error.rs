use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("field support B({radius}) around {center:?} escapes the varifold domain")]
    SupportOutsideDomain { center: Vec<f64>, radius: f64 },

    #[error("ball of radius {radius} around {center:?} contains no samples")]
    EmptyBall { center: Vec<f64>, radius: f64 },

    #[error("negative weight function value {value} at sample {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("hypotheses not met: {0}")]
    HypothesesUnmet(String),

    #[error("malformed varifold file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
