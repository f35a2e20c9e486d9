//! Desk-scale laboratory for history-based feature abstractions of MDPs.
//!
//! The crate has three layers:
//!
//! - exact machinery: finite MDPs with Bellman oracles ([`mdp`]), integral
//!   probability metrics with their functionals ([`ipm`]), and tabular AIS
//!   generators whose error constants `(epsilon, delta)` are measured
//!   exactly ([`ais`]);
//! - bound checking: the feature-space dynamic program, the flattened
//!   policy's exact optimality gap, and per-instance reports that verify
//!   the approximation bound and its corollaries numerically ([`ais_dp`]);
//! - learning: a scalar reverse-mode tape with GRU/MLP shapes ([`nn`]) and
//!   multi-timescale policy-gradient / actor-critic / PPO training loops
//!   ([`train`]), driven in batch by the [`cli`] front-end.
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod ais;
pub mod ais_dp;
pub mod cli;
pub mod error;
pub mod ipm;
pub mod linalg;
pub mod mdp;
pub mod nn;
pub mod train;

pub use error::{Error, Result};
