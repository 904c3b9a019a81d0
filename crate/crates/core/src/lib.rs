//! Simulation and analysis of Bell-CHSH experiments.
//!
//! The crate covers exact quantum predictions ([`quantum`]), finite local
//! hidden-variable models ([`lhv`]), adversaries that exploit detection
//! inefficiency or setting dependence ([`synthesize`]), a seeded Monte Carlo
//! trial engine ([`engine`]), a flat-spacetime causal auditor ([`spacetime`]),
//! the estimators and significance tests applied to trial logs ([`stats`]),
//! and the `bellkit` command line ([`cli`]).

pub mod chsh;
pub mod cli;
pub mod engine;
pub mod error;
pub mod lhv;
pub mod quantum;
pub mod spacetime;
pub mod stats;
pub mod synthesize;

pub use error::{Error, Result};
