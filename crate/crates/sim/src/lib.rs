//! File formats, synthetic scenes, corpus evaluation and the `cram-sim`
//! command line, built on `cram-core`.

pub mod boxes;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod events;
pub mod output;
pub mod pnm;
pub mod synth;

pub use config::RunConfig;
pub use error::{Result, SimError};
