//! Numerical laboratory for the classical capacity of the pure-loss bosonic
//! channel.
//!
//! The crate pairs closed-form capacity and converse bounds with exact
//! computations of the quantities they bound:
//!
//! - [`numerics`]: base-2 log-space probabilities, binomials, `g(x)` and `h₂(p)`.
//! - [`fock`]: photon-number distributions, cutoff projectors, coherent and
//!   thermal states.
//! - [`channel`]: the pure-loss channel on coherent states and photon-number
//!   distributions, exact output shadows, and the output-shadow lower bound.
//! - [`bounds`]: weak converse, qubit strong converse, the projector rank
//!   bound, the strong-converse success bound, and the rate–error trade-off.
//! - [`codebook`]: Gaussian coherent-state codebooks, mixture and
//!   superposition codewords, and the photon-number shadow audit.
//! - [`concentration`]: exact binomial and negative-binomial tails, the
//!   Hoeffding bound, and the optimized exponential-moment constant.
//! - [`oracle`]: small dense density-matrix checks of the operator
//!   inequalities the converse relies on.
//!
//! Probabilities that can underflow are carried as [`numerics::LogProb`]
//! (base-2 logarithms, `-inf` for zero).

#![forbid(unsafe_code)]

pub mod bounds;
pub mod channel;
pub mod codebook;
pub mod concentration;
mod error;
pub mod fock;
pub mod numerics;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
