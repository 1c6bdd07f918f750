//! Semantic-realism measurement laboratory core.
//!
//! Observables carry an extra no-registration outcome, physical objects carry
//! hidden microstates, and detection may be selective. Every stochastic
//! experiment here is paired with an exact dense-matrix quantum oracle.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![forbid(unsafe_code)]
// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bell;
pub mod ensemble;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod rng;
pub mod statespace;

pub use error::{Error, Result};
