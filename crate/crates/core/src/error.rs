use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid value for `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("sample point {index} is not strictly interior for step {step} (player {player})")]
    NotInterior {
        index: usize,
        player: usize,
        step: f64,
    },

    #[error("exact enumeration supports at most {max} sensors, got {found}")]
    TooManySensors { max: usize, found: usize },

    #[error("singular linear system for game {game}")]
    Singular { game: usize },

    #[error("non-finite reward for player {player} at time {time}")]
    NonFinite { player: usize, time: f64 },

    #[error("incompatible setup: {0}")]
    Incompatible(String),

    #[error("no qualifying instance after {attempts} draws ({filter})")]
    ResampleExhausted { attempts: usize, filter: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("realization {index}: {source}")]
    Realization {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error at {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                what,
                expected,
                found,
            })
        }
    }
}
