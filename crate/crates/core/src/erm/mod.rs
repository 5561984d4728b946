// SPDX-License-Identifier: Apache-2.0

//! Lipschitz losses, exact backpropagation, and multi-restart projected
//! gradient descent over a size-constrained network class. The search is an
//! approximate ERM; guarantees are relative to the candidates it evaluated.

mod grad;
mod loss;
mod train;

pub use grad::{empirical_risk, gradient, DenseNet};
pub use loss::{Loss, LossKind};
pub use train::{
    project_constraints, project_params, train_erm, Architecture, RestartSummary, TrainConfig, TrainedModel,
};
