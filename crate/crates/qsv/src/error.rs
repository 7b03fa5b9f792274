use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("state index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: u64, limit: u64 },

    #[error("invalid level spec: {0}")]
    InvalidLevelSpec(String),

    #[error("invalid site {site} for {total_bits} QU-bits")]
    InvalidSite { site: usize, total_bits: u32 },

    #[error("invalid level pair ({0}, {1})")]
    InvalidLevels(u8, u8),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),

    #[error("degenerate state: norm below tolerance")]
    DegenerateState,

    #[error("dense materialization guard exceeded: {states} states")]
    SizeGuard { states: u64 },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid factoring spec: {0}")]
    InvalidSpec(String),

    #[error("invalid partition plan: {0}")]
    InvalidPlan(String),

    #[error("plan violation: {0}")]
    PlanViolation(String),

    #[error("transport contract violated: {0}")]
    Transport(String),

    #[error("decoherence rate {0} out of range [0, 1)")]
    RateOutOfRange(f64),

    #[error("unknown machine preset `{0}`")]
    UnknownPreset(String),

    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("inconsistent step profile: {0}")]
    InvalidProfile(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
