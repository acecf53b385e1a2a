use thiserror::Error;

/// Errors produced while loading data, building covariances or running a sampler.
#[derive(Debug, Error)]
pub enum Error {
    #[error("column `{0}` not found in header")]
    MissingColumn(String),

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a finite number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("insufficient data: {0} training rows, at least 2 required")]
    InsufficientData(usize),

    #[error("column `{0}` is constant and cannot be normalized")]
    DegenerateColumn(String),

    #[error("invalid dataset: {0}")]
    InvalidData(String),

    #[error("hyperparameter out of domain: {0}")]
    Domain(String),

    #[error(
        "covariance block for output {output} is not positive definite \
         (jitter escalated to {jitter:e}); theta = {theta:?}"
    )]
    NotPositiveDefinite {
        output: usize,
        jitter: f64,
        theta: Vec<f64>,
    },

    #[error("degenerate particle population: every weight is zero")]
    DegeneratePopulation,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("torsion frequency has a complex root (discriminant {0})")]
    ComplexRoot(f64),

    #[error("unknown synthetic problem `{0}`")]
    UnknownProblem(String),

    #[error("malformed trace: {0}")]
    MalformedTrace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
