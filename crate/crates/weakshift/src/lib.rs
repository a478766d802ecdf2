//! File formats, reports and batteries on top of [`weakshift_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
pub mod report;
pub mod scenario_file;
pub mod verify;
pub mod wavefunction;

pub use error::{Error, Result};
