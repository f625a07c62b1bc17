use std::path::PathBuf;

use crate::grid::BusId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("unknown bus {0}")]
    UnknownBus(BusId),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("voltage collapse at bus {bus} phase {phase}: |V_ph - V_n| = {magnitude:.3} V after {iteration} iterations (infeasible injection)")]
    VoltageCollapse {
        bus: BusId,
        phase: char,
        magnitude: f64,
        iteration: usize,
    },

    #[error("power flow did not converge at slot {slot} ({strategy}): residual {residual:.3e} V after {iterations} iterations")]
    NotConverged {
        slot: usize,
        strategy: String,
        residual: f64,
        iterations: usize,
    },

    #[error("solve failed at slot {slot} ({strategy}): {source}")]
    SlotFailed {
        slot: usize,
        strategy: String,
        #[source]
        source: Box<Error>,
    },

    #[error("charging window of {slots} slots for EV at {vehicle} does not fit in one day")]
    WindowTooLong { vehicle: String, slots: u32 },

    #[error("bus {0} has no charging zone")]
    MissingZone(BusId),

    #[error("baseline scenario '{0}' missing from comparison")]
    MissingBaseline(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
