use thiserror::Error;

use crate::hamiltonian::CouplingKey;

pub type Result<T, E = DaqcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DaqcError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("duplicate coupling {0}")]
    DuplicateCoupling(CouplingKey),

    #[error("non-canonical pair order ({i}, {j}): couplings must satisfy i < j")]
    NonCanonicalPair { i: usize, j: usize },

    #[error("qubit index {index} out of range [1, {n}]")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("non-finite strength for coupling {0}")]
    NonFiniteStrength(CouplingKey),

    #[error("qubit count {0} is below the minimum of 2")]
    TooFewQubits(usize),

    #[error("{n} qubits exceeds the configured cap of {cap}")]
    QubitCapExceeded { n: usize, cap: usize },

    #[error("qubit count mismatch: {left} vs {right}")]
    QubitCountMismatch { left: usize, right: usize },

    #[error("unsimulable: target coupling {0} has no source counterpart")]
    Unsimulable(CouplingKey),

    #[error("pair index {b} out of range [1, {max}]")]
    PairIndexOutOfRange { b: usize, max: usize },

    #[error("singular system (smallest singular value {min_singular_value:.3e})")]
    SingularSystem { min_singular_value: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("{} negative block time(s); first offenders: {}; use the non-negative solver instead", .blocks.len(), format_offenders(.blocks))]
    NegativeTimes { blocks: Vec<(usize, String, f64)> },

    #[error("negative duration {duration} at block {index}")]
    NegativeDuration { index: usize, duration: f64 },

    #[error("residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("the {protocol} protocol cannot represent coupling {key}")]
    ProtocolMismatch {
        protocol: &'static str,
        key: CouplingKey,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("schedule source hash {found} does not match source Hamiltonian hash {expected}")]
    SourceHashMismatch { expected: String, found: String },

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
}

fn format_offenders(blocks: &[(usize, String, f64)]) -> String {
    blocks
        .iter()
        .take(5)
        .map(|(i, g, t)| format!("#{i} [{g}] t={t:.3e}"))
        .collect::<Vec<_>>()
        .join(", ")
}
