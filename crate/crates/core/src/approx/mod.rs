// SPDX-License-Identifier: Apache-2.0

//! Constructive approximation of Hölder-smooth functions: local Taylor
//! interpolation on a grid, its exact ReLU realization, and conversion to
//! other piecewise-linear activations.

pub mod certify;
pub mod convert;
pub mod corpus;
pub mod interp;
pub mod relu;
pub mod target;

pub use certify::{build_approximant, build_relu_approximant, ApproxCertificate, ApproxOptions, BudgetConstants};
pub use convert::convert_relu_to_pwl;
pub use corpus::{corpus_target, study_corpus, CORPUS_NAMES};
pub use relu::{hat_network, mult01_network, mult_network};
pub use interp::{
    build_grid, grid_for_budget, hat_weight, interpolant_error_bound, interpolant_eval, project_grid_point, rescale_map, GridSpec,
    Interpolant, Rescale, TaylorPatch, UsableBox,
};
pub use target::{DomainBox, HolderTarget};
