//! Rateless, double-sided private distributed matrix multiplication over a
//! prime field.
//!
//! A master splits `A` into `m` row blocks and `B` into `k` column blocks,
//! fountain-codes them, and hides each coded block inside a Lagrange
//! polynomial mixed with `z` random matrices. Workers evaluate products of
//! polynomial shares; the master interpolates, peels the fountain code and
//! reassembles `A B`. Any `z` colluding workers learn nothing about the data.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]
// NaN must fail the range checks, so `!(x > 0.0)` is deliberate
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod fountain;
pub mod gf;
pub mod lagrange;
pub mod master;
pub mod matrix;
pub mod privacy;
pub mod simnet;

pub use error::{Error, Result};
pub use gf::{PrimeField, DEFAULT_MODULUS};
pub use master::{run_protocol, ProtocolConfig, RunMetrics, RunOutcome};
pub use matrix::MatrixFq;
