use thiserror::Error;

use crate::graph::QubitId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown qubit {0}")]
    UnknownQubit(QubitId),
    #[error("qubit {0} already exists")]
    DuplicateQubit(QubitId),
    #[error("operation needs two distinct qubits, got {0} twice")]
    SameQubit(QubitId),
    #[error("qubits {0} and {1} belong to the same logical vertex")]
    SameVertex(QubitId, QubitId),
    #[error("qubit {0} is not adjacent to {1}")]
    NotAdjacent(QubitId, QubitId),
    #[error("measurement of {qubit} is deterministic with outcome {forced}")]
    ImpossibleOutcome { qubit: QubitId, forced: u8 },
    #[error("requested branch has zero probability")]
    ZeroProbability,
    #[error("no quantum emitter present")]
    NoEmitter,
    #[error("a quantum emitter is already present")]
    EmitterExists,
    #[error("vertex containing {0} has a single member; Hadamard push-out needs at least two")]
    SingletonVertex(QubitId),
    #[error("emitter vertex holds no photon since the last Hadamard")]
    EmptyEmitterVertex,
    #[error("frame {frame} on qubit {qubit} is not supported here: {reason}")]
    UnsupportedFrame {
        qubit: QubitId,
        frame: crate::clifford::LocalClifford,
        reason: &'static str,
    },
    #[error("vertex of {qubit} has {available} allocatable photons, {needed} needed")]
    InsufficientPhotons {
        qubit: QubitId,
        available: usize,
        needed: usize,
    },
    #[error("register of {0} qubits exceeds the oracle limit of {1}")]
    TooManyQubits(usize, usize),
    #[error("qubit registers differ")]
    RegisterMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed plan: {0}")]
    MalformedPlan(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
