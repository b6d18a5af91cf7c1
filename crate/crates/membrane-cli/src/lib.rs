//! Command-line front end for the membrane evolution library: typed TOML
//! configuration, initial-data families, run orchestration, stable CSV/TOML
//! persistence, parameter sweeps, refinement studies, and post-hoc run
//! diagnosis.
//!
//! The binary (`membrane`) is a thin argument-parsing shell over
//! [`commands`]; everything testable lives in this library.

// Validation deliberately writes `!(x > 0.0)` so that NaN fails the
// check; the positively phrased comparison clippy suggests would let
// NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod families;
pub mod output;
pub mod pipeline;
pub mod rng;
