//! Pre- and post-selected weak measurements with a von Neumann pointer.
//!
//! The crate is `no_std` (it needs `alloc`). It covers
//!
//! * [`system`]: finite-dimensional states, observables, expectation and weak values;
//! * [`pointer`]: a pointer wavefunction on a periodic grid with spectral operators;
//! * [`measurement`]: the impulsive coupling `exp(-i g A p)` followed by post-selection;
//! * [`theory`]: closed-form first-order predictions for pointer shifts;
//! * [`harness`]: scenario execution, convergence sweeps and weak-value estimation.
//!
//! Units have `hbar = 1`.
#![no_std]
#![forbid(unsafe_code)]
// `!(x <= limit)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
pub mod fft;
pub mod harness;
pub mod linalg;
pub mod measurement;
pub mod pointer;
pub mod system;
pub mod theory;

pub use error::{Error, Result};
pub use num_complex::Complex64;
