use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix entry is not finite")]
    NonFiniteInput,
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eig:e}, slack {slack:e})")]
    NotPsd { min_eig: f64, slack: f64 },
    #[error("span must be positive, got {0}")]
    DegenerateSpan(f64),
    #[error("need at least {needed} samples, got {got}")]
    EmptyInput { needed: usize, got: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("degenerate problem: the {0} class has zero total weight")]
    DegenerateProblem(&'static str),
    #[error("model has no support vectors")]
    InvalidModel,
    #[error("pace parameter must be positive, got {0}")]
    NonPositivePace(f64),
    #[error("class {0} has no training pixels")]
    EmptyClass(u32),
    #[error("Wishart center for class {0} is singular")]
    SingularCenter(u32),
    #[error("similarity must lie in [0, 1], got {0}")]
    BadSimilarity(f64),
    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("training fraction {fraction} cannot be met for class {class}")]
    FractionTooLargeForClass { class: u32, fraction: f64 },
    #[error("need at least two labeled classes in the training mask, got {0}")]
    TooFewClasses(usize),
    #[error("map shapes differ: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("predicted class {0} is not in the evaluated class set")]
    UnknownPredictedClass(u32),
    #[error("no pixels to evaluate")]
    EmptyEvaluation,
    #[error("palette has {palette} entries but label {label} was requested")]
    PaletteTooSmall { label: u32, palette: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
