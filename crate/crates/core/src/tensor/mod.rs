//! Deterministic numeric engine: dense matrices, a small feedforward network
//! with hand-written reverse-mode gradients, the NADAM optimizer and the
//! seeded random streams every experiment draws from.

mod gradcheck;
mod matrix;
mod mlp;
mod nadam;
mod rng;

pub use gradcheck::{gradient_check, relative_error};
pub use matrix::Matrix;
pub use mlp::{ForwardCache, Mlp, OutputActivation, ParamGrads};
pub use nadam::{Nadam, NadamConfig};
pub use rng::{Rng, Stream};
