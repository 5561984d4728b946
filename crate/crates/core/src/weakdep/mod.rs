// SPDX-License-Identifier: Apache-2.0

//! Weakly dependent input processes, supervised samples built on them, and
//! empirical covariance-decay estimates.

mod dependence;
mod simulate;
mod supervised;

pub use dependence::{default_dictionary, estimate_dependence, parse_lags, DecayModel, DependenceEstimate, FittedRate, TestFn};
pub use simulate::{simulate, Process, ProcessSpec, Trajectory, DEFAULT_BURN_IN};
pub use supervised::{make_supervised, Dataset, SupervisedTask, TaskConfig};
pub(crate) use supervised::make_supervised_labeled;
