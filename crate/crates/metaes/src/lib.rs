//! Worker pool, run loop, file formats and command line for the distributed
//! LM-CMA meta-optimizer in `metaes_core`.

pub mod cli;
pub mod config;
pub mod exec;
pub mod plot;
pub mod trace;
