//! Error type shared by all estimation and simulation routines.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An input violated a type invariant; the message names the invariant.
    #[error("validation: {0}")]
    Validation(String),

    /// A mixture-cell denominator is zero, so the requested ratio is undefined.
    #[error("degenerate cell: {0}")]
    DegenerateCell(String),

    /// Observable cell probabilities are incompatible with the declared
    /// empty-stratum restriction.
    #[error("inconsistent cells: {0}")]
    InconsistentCells(String),

    /// Intercept calibration could not reach the target mean weight.
    #[error("calibration: {0}")]
    Calibration(String),

    /// A root-finding or monotonicity precondition failed.
    #[error("solver: {0}")]
    Solver(String),

    /// The identified-regime estimator's moment conditions are unusable.
    #[error("identification: {0}")]
    Identification(String),

    /// The regression design matrix is rank deficient.
    #[error("singular design: {0}")]
    SingularDesign(String),

    /// Logistic regression detected complete separation.
    #[error("separation: {0}")]
    Separation(String),

    /// First-stage covariance between treatment and instrument is zero.
    #[error("weak instrument: {0}")]
    WeakInstrument(String),

    /// Too many Monte Carlo replicates failed.
    #[error("replication: {0}")]
    Replication(String),
}

impl Error {
    /// Stable machine-readable code, used in CLI error records and sweep
    /// status columns.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Validation(_) => "validation",
            Error::DegenerateCell(_) => "degenerate_cell",
            Error::InconsistentCells(_) => "inconsistent_cells",
            Error::Calibration(_) => "calibration",
            Error::Solver(_) => "solver",
            Error::Identification(_) => "identification",
            Error::SingularDesign(_) => "singular_design",
            Error::Separation(_) => "separation",
            Error::WeakInstrument(_) => "weak_instrument",
            Error::Replication(_) => "replication",
        }
    }

    /// True for errors caused by invalid inputs rather than numerical
    /// failure; drives the CLI exit-code split.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::DegenerateCell(_) | Error::InconsistentCells(_)
        )
    }
}
