use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("spin-orbit coupling vanishes (alpha_R = alpha_D = 0)")]
    DegenerateSoc,

    #[error("basis truncation breached: tail mass {tail_mass:.3e} in the top {window} levels of N_max = {n_max}")]
    TruncationBreach {
        n_max: usize,
        window: usize,
        tail_mass: f64,
    },

    #[error("basis of {got} levels is too small; need at least {needed}")]
    InsufficientBasis { needed: usize, got: usize },

    #[error("perturbation theory breaks down: denominator {denominator:.3e} between {from} and {to}")]
    PerturbationBreakdown {
        from: String,
        to: String,
        denominator: f64,
    },

    #[error("gauge mismatch: {0}")]
    GaugeMismatch(String),

    #[error("trajectory ends at t = {available} but the average needs t = {needed}")]
    SpanTooShort { needed: f64, available: f64 },

    #[error("resonance position is not positive for k = {k}: {value}")]
    NonPositiveResonance { k: usize, value: f64 },

    #[error("no peak clears the prominence threshold {threshold:.3e}")]
    NoPeaks { threshold: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::DegenerateSoc => 2,
            Error::Io { .. } | Error::Json(_) => 1,
            _ => 3,
        }
    }
}
