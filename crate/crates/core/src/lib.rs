//! Error bounds for single-parameter quantum estimation under unitary encoding.
//!
//! The crate evaluates the quantum Cramér-Rao bound, three optimal biased
//! bounds (QOBB, QOBB1, QOBB2) and the Bayesian minimum mean-square error for
//! a uniform prior, and cross-checks each closed form against an independent
//! numerical route:
//!
//! - [`bounds`]: closed-form bounds and per-probe generator moments.
//! - [`bias`]: the Euler-Lagrange problem for the optimal bias, solved by
//!   finite differences, and the bound functional by quadrature.
//! - [`fock`]: a truncated Fock-space simulator used as a brute-force oracle.
//! - [`measurement`]: outcome models and the MMSE engine.
//! - [`scenarios`]: sweeps, CSV/SVG output and the `verify` oracle suite.

pub mod bias;
pub mod bounds;
pub mod error;
pub mod fock;
pub mod measurement;
pub mod quadrature;
pub mod scenarios;

pub use error::{Error, Result};
