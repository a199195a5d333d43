use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} outside 1..={max}", max = crate::sim::MAX_QUBITS)]
    QubitCount(usize),
    #[error("invalid gate targets for {gate}: {reason}")]
    InvalidTargets { gate: String, reason: String },
    #[error("dimension mismatch: {0} vs {1} qubits")]
    DimensionMismatch(usize, usize),
    #[error("expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty ensemble for class {0}")]
    EmptyEnsemble(usize),
    #[error("cost became non-finite at epoch {epoch}")]
    NonFiniteCost { epoch: usize },
    #[error("unknown device {0:?}")]
    UnknownDevice(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
