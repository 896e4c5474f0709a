//! Fisher information of blinking and cofluorescent point sources.
//!
//! Source models and point-spread amplitudes, classical and quantum
//! information matrices, Cramér–Rao bounds and efficiency measures,
//! certificates for the blinking-advantage inequalities, and the
//! maximum-likelihood estimators used to test saturation. Everything here
//! runs without `std`; sampling, IO and the command line live in
//! `fisherloc`.

#![no_std]
// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod error;
pub mod family;
pub mod fim;
pub mod matrix;
pub mod metrology;
pub mod mle;
pub mod model;
pub mod psf;
pub mod qfim;
pub mod quad;
pub mod text;
pub mod theorems;

pub use error::{CoreError, CoreResult};
