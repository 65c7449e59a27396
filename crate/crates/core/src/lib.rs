//! Lattice simulator and bound auditor for the Maxwell–Klein–Gordon system
//! with field-dependent gauge couplings, a Kähler sigma-model target and
//! polynomial, sine-Gordon or Toda potentials, in temporal gauge.

#![allow(non_snake_case)]
// index loops mirror the tensor notation; negated comparisons also reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod config;
pub mod couplings;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod kahler;
pub mod lattice;
pub mod model;
pub mod par;
pub mod potential;
pub mod run;
pub mod scenario;
pub mod spherical;

pub use error::{MkgError, Result};
pub use num_complex::Complex64;
