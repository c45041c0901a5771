//! Variational mutual-information estimators for learned channel coding.
//!
//! The crate is organized bottom-up:
//!
//! - [`tensor`]: matrices, a small MLP with exact gradients, NADAM, seeded RNG streams.
//! - [`channels`]: AWGN and BSC simulators, power normalization, Eb/N0, closed-form MI.
//! - [`sampling`]: joint batches and the all-pairs critic layout.
//! - [`estimators`]: MINE, NWJ, NCE, SMILE and the reverse-Jensen estimator (RJE).
//! - [`coding`]: the encoder / critic / decoder autoencoder and BLER evaluation.
//! - [`harness`]: configuration, canned experiments, CSV output and the CLI driver.

pub mod channels;
pub mod coding;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod sampling;
pub mod tensor;

pub use error::{Error, Result};
