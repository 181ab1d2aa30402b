use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. The CLI maps the variants onto
/// process exit codes via [`Error::exit_code`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("numeric failure: {message} (residual {residual:e})")]
    NumericFailure { message: String, residual: f64 },

    #[error("field singularity: point lies {distance:e} m from the axis of a thin wire")]
    Singularity { distance: f64 },

    #[error("point lies inside a conductor cross-section")]
    InsideConductor,

    #[error("degenerate local frame: static field magnitude {magnitude:e} T")]
    DegenerateFrame { magnitude: f64 },

    #[error("labeling ambiguity: {} level pair(s) below confidence threshold", pairs.len())]
    LabelingAmbiguity { pairs: Vec<(usize, usize, f64)> },

    #[error("potential topology: expected two minima, found {count}")]
    Topology { count: usize },

    #[error("branch tracking lost at position {position:?} (overlap {overlap:.3})")]
    Tracking { position: [f64; 3], overlap: f64 },

    #[error("time integration failed: unitarity defect {defect:e} after {steps} steps")]
    IntegrationFailure { defect: f64, steps: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("fit did not converge after {iterations} iterations")]
    FitNonConvergence { iterations: usize },

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::Parse { .. } | Error::Io(_) => 2,
            Error::NumericFailure { .. }
            | Error::Singularity { .. }
            | Error::InsideConductor
            | Error::DegenerateFrame { .. }
            | Error::IntegrationFailure { .. } => 3,
            Error::LabelingAmbiguity { .. } | Error::Topology { .. } | Error::Tracking { .. } => 4,
            Error::DegenerateFit(_) | Error::FitNonConvergence { .. } => 5,
        }
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidConfig(_) => "invalid_config",
            Error::NumericFailure { .. } => "numeric_failure",
            Error::Singularity { .. } => "singularity",
            Error::InsideConductor => "inside_conductor",
            Error::DegenerateFrame { .. } => "degenerate_frame",
            Error::LabelingAmbiguity { .. } => "labeling_ambiguity",
            Error::Topology { .. } => "topology",
            Error::Tracking { .. } => "tracking",
            Error::IntegrationFailure { .. } => "integration_failure",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::FitNonConvergence { .. } => "fit_non_convergence",
            Error::Parse { .. } => "parse",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
