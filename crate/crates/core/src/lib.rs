pub mod baselines;
pub mod channel;
pub mod error;
pub mod fully_connected;
pub mod harness;
pub mod manifold;
pub mod numerics;
pub mod partially_connected;
pub mod reference;
pub mod sdp;

pub use error::{Error, Result};

/// Hybrid transceiver wiring: every RF chain drives all antennas through its
/// own phase-shifter bank, or each chain drives a disjoint antenna subarray.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    FullyConnected,
    PartiallyConnected,
}

impl std::fmt::Display for Structure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Structure::FullyConnected => "fully",
            Structure::PartiallyConnected => "partially",
        })
    }
}

impl std::str::FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fully" => Ok(Structure::FullyConnected),
            "partially" => Ok(Structure::PartiallyConnected),
            other => Err(Error::Config(format!(
                "unknown structure '{other}' (expected 'fully' or 'partially')"
            ))),
        }
    }
}
