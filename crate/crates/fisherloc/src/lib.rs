//! Standard-library companion to `fisherloc-core`: photon sampling, Monte
//! Carlo batches, parameter sweeps, certification runs, CSV output and the
//! `fisherloc` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod output;
pub mod sample;
pub mod sim;
pub mod stats;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use fisherloc_core;
