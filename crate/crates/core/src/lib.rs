// SPDX-License-Identifier: Apache-2.0

//! Sparse deep ReLU-family networks with a constructive approximation
//! pipeline for Hölder-smooth targets, simulators for weakly dependent
//! time series, projected-gradient ERM over size-constrained network
//! classes, and a Monte-Carlo harness that measures excess-risk rates.
//!
//! Module map:
//! - [`dnn`]: network representation, evaluation, size statistics, combinators.
//! - [`approx`]: Hölder targets, grid/Taylor/hat interpolant, ReLU realization.
//! - [`weakdep`]: AR(1)/ARCH(1)/TAR(1) simulation and covariance-decay estimates.
//! - [`erm`]: losses, backpropagation, constraint projection, multi-restart training.
//! - [`harness`]: risk estimation, class schedules, bound ingredients, rate experiments.

pub mod approx;
pub mod dnn;
pub mod erm;
mod error;
pub mod exec;
pub mod harness;
pub mod seed;
pub mod stats;
pub mod weakdep;

pub use error::{Error, Result};
pub use exec::Exec;

/// Version string recorded in run manifests and reports.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
