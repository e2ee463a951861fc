//! Qudit Bell sampling.
//!
//! Exact module algebra over `Z_d`, Weyl operators and symplectic Fourier
//! analysis, a dense statevector engine, stabiliser oracles, skewed Bell
//! (difference) sampling through the four-square unitary `B_R`, and the
//! learning and testing algorithms built on top of it.

pub mod algorithms;
pub mod error;
pub mod phase_space;
pub mod qstate;
pub mod rng;
pub mod sampling;
pub mod stabiliser;
pub mod zmod;

pub use error::{Error, Result};
pub use num_complex::Complex64;
