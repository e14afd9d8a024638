use std::path::PathBuf;

use crate::sdp::SdpSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite entry at ({row}, {col}) during matrix construction")]
    NonFinite { row: usize, col: usize },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("degenerate combiner: {0}")]
    DegenerateCombiner(String),

    #[error("degenerate precoder: {0}")]
    DegeneratePrecoder(String),

    #[error("retraction singularity: |x + v| < 1e-14 at entry {0}")]
    RetractionSingularity(usize),

    #[error("sdp solver: {0}")]
    Sdp(String),

    #[error(
        "sdp iteration limit: duality gap {gap:.3e} after {iterations} iterations \
         (best iterate attached)"
    )]
    SdpIterationLimit {
        best: Box<SdpSolution>,
        gap: f64,
        iterations: usize,
    },

    #[error("sdp numerical breakdown after {iterations} iterations: {reason} (best iterate attached, gap {gap:.3e})")]
    SdpBreakdown {
        best: Box<SdpSolution>,
        gap: f64,
        iterations: usize,
        reason: String,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code the CLI maps this error to: 2 for anything the user
    /// can fix in a config or argument, 3 for numerical solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::NonFinite { .. }
            | Error::Config(_)
            | Error::DegenerateChannel(_)
            | Error::DegenerateCombiner(_)
            | Error::DegeneratePrecoder(_) => 2,
            Error::RetractionSingularity(_)
            | Error::Sdp(_)
            | Error::SdpIterationLimit { .. }
            | Error::SdpBreakdown { .. } => 3,
            Error::Io { .. } => 1,
        }
    }
}
