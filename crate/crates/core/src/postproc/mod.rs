//! Reconciliation codes, leakage accounting and privacy-amplification hashing.

pub mod code;
pub mod leakage;
pub mod shrinkage;
pub mod toeplitz;

use thiserror::Error;

pub use code::{decode_by_syndrome, DecodeFailure, LinearCodeSpec, SyndromeDecoder, SystematicEncoder};
pub use leakage::{leak_conventional, leak_crossover_qber, leak_yuen, LeakModel};
pub use shrinkage::{key_as_codeword, key_with_appended_parity, CandidateReport};
pub use toeplitz::{exhaustive_delta, family_collision_rate, toeplitz_hash, DeltaReport, ToeplitzSeed};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PostprocError {
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no syndrome decoder for n = {n}: {reason}")]
    DecoderUnavailable { n: usize, reason: String },
    #[error("invalid hash seed: {0}")]
    InvalidSeed(String),
    #[error("in={in_len}, out={out_len} is too large for exhaustive seed enumeration")]
    TooLargeForExhaustive { in_len: usize, out_len: usize },
    #[error("{0} bits is too many to enumerate")]
    TooLargeForEnumeration(usize),
    #[error("collision rate needs two distinct inputs")]
    IdenticalInputs,
    #[error("{0}")]
    Domain(String),
}
