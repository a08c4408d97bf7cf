use thiserror::Error;

/// Invalid problem instances and allocations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("scenario has no peers")]
    NoPeers,
    #[error("non-positive source uplink: {0}")]
    NonPositiveSourceUplink(f64),
    #[error("non-positive file size: {0}")]
    NonPositiveFileSize(f64),
    #[error("peer {peer} has negative uplink {value}")]
    NegativeUplink { peer: usize, value: f64 },
    #[error("peer {peer} has non-positive downlink {value}")]
    NonPositiveDownlink { peer: usize, value: f64 },
    #[error("peer {peer} has negative weight {value}")]
    NegativeWeight { peer: usize, value: f64 },
    #[error("{field} is not finite")]
    NonFinite { field: String },
    #[error("unknown benchmark case {0:?} (expected I..VI)")]
    UnknownCase(String),
    #[error("unknown weight profile {0:?}")]
    UnknownWeightProfile(String),
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("allocation row {row} has {got} entries, expected {expected}")]
    MatrixShape {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("allocation covers {got} peers, network has {expected}")]
    AllocationSize { expected: usize, got: usize },
    #[error("rate {from}->{to} is invalid: {value}")]
    NegativeRate { from: usize, to: usize, value: f64 },
    #[error("source sends {used}, uplink is {capacity}")]
    SourceOverload { used: f64, capacity: f64 },
    #[error("peer {peer} uploads {used}, uplink is {capacity}")]
    UplinkOverload {
        peer: usize,
        used: f64,
        capacity: f64,
    },
    #[error("peer {peer} downloads {used}, downlink is {capacity}")]
    DownlinkOverload {
        peer: usize,
        used: f64,
        capacity: f64,
    },
}

/// Max-flow and schedule verification failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("vertex {vertex} not in graph of {size} vertices")]
    VertexOutOfRange { vertex: usize, size: usize },
    #[error("source and sink are the same vertex {0}")]
    SourceIsSink(usize),
    #[error("edge {from}->{to} has invalid capacity {capacity}")]
    InvalidCapacity {
        from: usize,
        to: usize,
        capacity: f64,
    },
    #[error("duplicate edge {from}->{to}")]
    DuplicateEdge { from: usize, to: usize },
    #[error("finish order is not a permutation of 1..={0}")]
    InvalidPermutation(usize),
    #[error("expected {expected} epoch durations, got {got}")]
    DurationCount { expected: usize, got: usize },
    #[error("epoch {epoch} has invalid duration {value}")]
    InvalidDuration { epoch: usize, value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Allocator failures.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocError {
    #[error("broadcast rate {rate} exceeds the feasible ceiling {ceiling}")]
    RateAboveCeiling { rate: f64, ceiling: f64 },
    #[error("invalid broadcast rate {0}")]
    InvalidRate(f64),
    #[error("peer order is not a permutation of 1..={0}")]
    InvalidOrder(usize),
    #[error("peer order does not list the water-fill rates in descending order")]
    OrderNotDescending,
    #[error("peer {peer} has positive weight and zero rate: WSDT is unbounded")]
    Unbounded { peer: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicError {
    #[error("join schedule is not sorted by time (entry {0})")]
    UnsortedJoins(usize),
    #[error("join {0} has invalid time")]
    InvalidJoinTime(usize),
    #[error("peer {peer} can never finish: no positive rate at t={time}")]
    Diverged { peer: usize, time: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
}

/// Top-level error for the sweep harness and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Dynamic(#[from] DynamicError),
    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Parse errors, validation errors and runtime errors get distinct
    /// process exit codes.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::Json(_) | Error::Csv(_) | Error::UnknownScheme(_) => 2,
            Error::Model(_) | Error::InvalidSweep(_) => 3,
            Error::Flow(FlowError::Model(_)) | Error::Alloc(AllocError::Model(_)) => 3,
            Error::Dynamic(DynamicError::Model(_)) => 3,
            Error::Io { .. } => 5,
            _ => 4,
        }
    }
}
