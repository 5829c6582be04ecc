//! Monte Carlo engine for one-dimensional McKean-Vlasov SDEs
//! `dX_t = b(t, X_t, Law(X_t)) dt + dB_t` with irregular drift.

// `!(a > b)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod drift;
pub mod error;
pub mod grid;
pub mod localtime;
pub mod girsanov;
pub mod measures;
pub mod payoff;
pub mod sensitivity;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
