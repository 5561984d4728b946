// SPDX-License-Identifier: Apache-2.0

//! Monte-Carlo risk, excess-risk decomposition through a best-in-class
//! proxy, the sample-size-indexed class schedule with its bound
//! ingredients, and the rate experiment that ties them together.

mod class;
mod rate;
mod report;
mod risk;

pub use class::{bound_ingredients, class_schedule, cn2, reference_bound, BaseConstants, BoundIngredients, BALL_GRID};
pub use rate::{rate_experiment, theorem2_class, CellResult, PerN, RateExperimentConfig, RateReport};
pub use report::{render_svg, write_csv, CSV_HEADER};
pub use risk::{
    argmin_risk, decompose_losses, estimate_cn1, excess_and_decomposition, losses, mc_risk, mc_sample, paired_se,
    Decomposition, McEstimate, Predictor, MC_BATCHES, MIN_MC_SAMPLES,
};
