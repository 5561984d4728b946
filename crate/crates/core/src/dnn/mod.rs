// SPDX-License-Identifier: Apache-2.0

//! Sparse feed-forward networks: evaluation, size accounting, class
//! membership and structural combinators.

mod activation;
pub mod combine;
mod json;
mod layer;
mod network;

pub use activation::{Activation, ActivationKind};
pub use combine::{compose_affine_input, pad_to_depth, parallelize, parallelize_many, select_inputs, then};
pub use json::DENSE_LIMIT;
pub use layer::Layer;
pub use network::{ClassConstraints, MembershipReport, Network, ParamStats, Scratch, Violation};
