use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("out of range: {0}")]
    Range(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical degeneracy: {0}")]
    Numerical(String),

    #[error("autocorrelation never falls below 1/e within {searched} lags")]
    NoDecorrelation { searched: usize },

    #[error("insufficient lag range: 3*tau0 = {needed} s but max lag is {available} s")]
    InsufficientLag { needed: f64, available: f64 },

    #[error("chi-squared binning failed: {0}")]
    Binning(String),

    #[error("phase/envelope extraction unreliable: {0}")]
    ExtractionUnreliable(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("trial {index}: {source}")]
    Trial {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the numbers themselves (zero energy, empty
    /// PSD bins, non-decaying correlations) rather than by bad arguments.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Degenerate(_)
            | Error::Numerical(_)
            | Error::NoDecorrelation { .. }
            | Error::Binning(_)
            | Error::ExtractionUnreliable(_) => true,
            Error::Trial { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
