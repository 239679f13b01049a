//! A skim-reading LSTM classifier: after reading a few tokens it decides how
//! many of the next tokens to jump over, so long inputs are consumed in a
//! handful of reads instead of token by token. The discrete jump decisions are
//! trained with REINFORCE around an ordinary cross-entropy objective, with a
//! learned linear baseline for variance reduction.
//!
//! The `examples/` directory has one runnable program per capability
//! (synthetic benchmark, curriculum training, policy-gradient checks, trace
//! inspection, text classification, QA scoring, checkpointing); the `lstm-jump`
//! binary exposes the same machinery as `gen` / `train` / `eval` /
//! `inspect-trace` subcommands.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod jump;
pub mod model;
pub mod numeric;
pub mod rl;
pub mod train;

pub use error::{Error, Result};
