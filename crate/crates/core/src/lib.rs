//! Biometric verification under two-party threshold ElGamal.
//!
//! Per-feature log-likelihood-ratio scores are precomputed into quantized
//! lookup tables ([`classifier`]); a user's template is the encrypted selection
//! of one row per table. Verification sums the encrypted scores and compares
//! the result against a public threshold without either party learning the
//! score. Two protocol variants are provided:
//!
//! * [`protocol::semi_honest`]: template reply, encrypted score, blinded
//!   comparison vector.
//! * [`protocol::malicious`]: signed template components, zero-knowledge
//!   proofs at every step, and aborts that are distinguishable from a
//!   no-match.
//!
//! The [`attacks`] module runs scripted adversaries against both.

pub mod attacks;
pub mod bench;
pub mod classifier;
pub mod elgamal;
pub mod group;
pub mod prp;
pub mod protocol;
pub mod scenario;
pub mod sigma;
pub mod signature;
pub mod store;
pub mod transport;
pub mod wire;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported security level: {0} bits")]
    UnsupportedLevel(u32),
    #[error("invalid dlog window [{lo}, {hi}]")]
    InvalidRange { lo: i64, hi: i64 },
    #[error("no exponent in [{lo}, {hi}]")]
    NotInRange { lo: i64, hi: i64 },
    #[error("decode error: {0}")]
    Decode(&'static str),
    #[error("ciphertext key mismatch: {0:?} vs {1:?}")]
    KeyTagMismatch(elgamal::KeyTag, elgamal::KeyTag),
    #[error("blinding value must be nonzero")]
    ZeroBlinder,
    #[error("secret key must be nonzero")]
    ZeroKey,
    #[error("statement does not match relation {0:?}")]
    StatementShape(sigma::Relation),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("quantized value {value} outside [0, {n})")]
    OutOfRange { value: usize, n: usize },
    #[error("numerical integration did not converge")]
    Integration,
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("session failed: {0}")]
    Session(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order always matches input order.
pub(crate) fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}
