use std::fmt;

use thiserror::Error;

/// Why a state failed the admissibility check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inadmissible {
    /// A partial density is zero or negative.
    Density { species: usize, value: f64 },
    /// The temperature recovered from the conserved variables is not positive.
    Temperature { value: f64 },
    /// The pressure is not positive.
    Pressure { value: f64 },
}

impl fmt::Display for Inadmissible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Inadmissible::Density { species, value } => {
                write!(
                    f,
                    "partial density of species {species} is {value:e} (must be > 0)"
                )
            }
            Inadmissible::Temperature { value } => {
                write!(f, "temperature is {value:e} (must be > 0)")
            }
            Inadmissible::Pressure { value } => {
                write!(f, "pressure is {value:e} (must be > 0)")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("inadmissible state: {0}")]
    Inadmissible(Inadmissible),

    /// Admissibility failure located on a grid, with solver context.
    #[error(
        "inadmissible state in cell {cell} (index {index:?}) at t = {time}, {stage}: {reason}"
    )]
    InadmissibleCell {
        cell: usize,
        index: Vec<usize>,
        time: f64,
        stage: String,
        reason: Inadmissible,
    },

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("config error (line {line}): {msg}")]
    Config { line: usize, msg: String },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach cell/time/stage context to a bare admissibility error.
    pub fn locate(self, cell: usize, index: Vec<usize>, time: f64, stage: &str) -> Error {
        match self {
            Error::Inadmissible(reason) => Error::InadmissibleCell {
                cell,
                index,
                time,
                stage: stage.to_string(),
                reason,
            },
            other => other,
        }
    }

    pub fn is_admissibility(&self) -> bool {
        matches!(
            self,
            Error::Inadmissible(_) | Error::InadmissibleCell { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
