//! Fault detection and exclusion for GNSS pseudoranges.
//!
//! Three detectors share one interface ([`fde::run_fde`]):
//!
//! * greedy Euclidean-distance-matrix FDE ([`edm`]), which needs no position
//!   estimate and works from the spectrum of a double-centered distance matrix;
//! * greedy residual FDE ([`residual`]), chi-square detection with
//!   largest-normalized-residual exclusion on a weighted least-squares fix;
//! * solution separation ([`separation`]), the combinatorial baseline.
//!
//! [`sim`] generates deterministic Walker-constellation scenarios, [`eval`]
//! turns flag sets into ROC, accuracy, timing and complexity tables, and
//! [`io`] reads and writes the CSV and TOML formats.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod clock;
mod par;

pub mod edm;
pub mod error;
pub mod eval;
pub mod fde;
pub mod geodesy;
pub mod io;
pub mod linalg;
pub mod measurement;
pub mod residual;
pub mod separation;
pub mod sim;

pub use error::{FdeError, Result};
pub use fde::{run_fde, FdeOptions};
pub use measurement::{EpochSet, FdeMethod, FdeResult, Measurement};
