//! Gate-level quantum circuit simulation on matrix product states, with a
//! Shor order-finding and factoring engine on top.
//!
//! - [`numthy`]: the classical number theory around order finding.
//! - [`circuit`]: gate lists and the three-register order-finding circuit.
//! - [`mps`]: the matrix product state engine.
//! - [`dense`]: a plain statevector simulator used as a reference.
//! - [`shor`]: the end-to-end factoring loop.
//! - [`bench`]: sweeps and the reports built on them.

pub mod bench;
pub mod circuit;
pub mod dense;
pub mod error;
pub mod mps;
pub mod numthy;
pub mod shor;

use std::collections::BTreeMap;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Measurement counts keyed by bitstring.
pub type Histogram = BTreeMap<String, usize>;

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/number-theory.md")]
    struct NumberTheory;
    #[doc = include_str!("../../../book/src/circuits.md")]
    struct Circuits;
    #[doc = include_str!("../../../book/src/mps.md")]
    struct Mps;
    #[doc = include_str!("../../../book/src/factoring.md")]
    struct Factoring;
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    struct Benchmarks;
}
