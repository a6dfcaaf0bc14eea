//! Numerical laboratory for digit sums along Piatetski-Shapiro and Beatty
//! sequences: the Thue–Morse sequence on `⌊n^c⌋`, discrepancy estimates,
//! Gowers norms of truncated digit functions, and the supporting exponent
//! bookkeeping.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arith;
pub mod cli;
pub mod corput;
pub mod digits;
pub mod diophantine;
pub mod equidist;
pub mod error;
pub mod experiments;
pub mod gowers;
pub mod reduction;
pub mod rng;
pub mod sequences;

pub use error::{LabError, Result};
