//! Nonrandom measurement matrices and linear-time decoding for noisy
//! non-adaptive group testing where test reliability degrades with pool
//! size (asymmetric false positive / false negative rates).
//!
//! The pieces fit together as follows:
//!
//! - [`gf2m`] implements GF(2^m) arithmetic.
//! - [`codes`] generates Reed-Solomon codewords lazily and concatenates them
//!   with the identity matrix into a disjunct matrix, with an exhaustive
//!   disjunctness oracle.
//! - [`signature`] holds the bit-pattern signature matrix whose lone columns
//!   decode by Hamming weight.
//! - [`plan`] derives every test-count parameter from the problem size,
//!   noise level, and error budget, including the tabulated configurations.
//! - [`measurement`] exposes single entries of the full test matrix without
//!   materializing it.
//! - [`channel`] simulates noisy outcomes under a counter-based random
//!   stream, bit-identical for any thread count, and defines the packed
//!   outcome file format.
//! - [`decoder`] recovers the defective set in one pass over the outcomes.
//! - [`harness`] reproduces the test-count, accuracy, and decoding-time
//!   experiments.
//!
//! Rows, columns, and item indices are 1-based throughout, matching the
//! usual matrix conventions of the construction.

pub mod channel;
pub mod codes;
pub mod decoder;
pub mod error;
pub mod gf2m;
pub mod harness;
pub mod measurement;
pub mod plan;
pub mod signature;

pub use error::{Error, Result};
