//! Algorithmic core of a multilevel distributed limited-memory CMA-ES.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`benchfuncs`]: the thirteen rotated/shifted benchmark functions,
//! * [`lmcma`]: the serial limited-memory CMA-ES used as the inner engine,
//! * [`meta`]: the outer-ES that ranks inner runs, recombines their means,
//!   step-sizes and evolution-path pools, and plans the next epoch,
//! * [`seed`]: platform-stable seed derivation for reproducible epochs.
//!
//! Threads, clocks, and file formats live in the `metaes` companion crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod benchfuncs;
pub mod budget;
pub mod linalg;
pub mod lmcma;
pub mod meta;
pub mod seed;

pub use benchfuncs::{eval_base, make_objective, BaseFunction, EvalError, Modality, Objective, ObjectiveSpec};
pub use budget::{Clock, IsolationBudget, RunLimits};
pub use lmcma::{
    apply_reconstruction, run_inner, run_inner_observed, InnerConfig, InnerError, InnerResult, InnerSettings,
    LmCmaParams, LmCmaState, PathPool, Population,
};
pub use meta::{
    mutate_sigma, rank_inner, recombine_means, recombine_paths, recombine_sigma, sample_ne, sample_sigma_uniform,
    Branch, MetaError, Normalizer, OuterSettings, OuterState, OuterWeights,
};
pub use seed::derive_seed;
