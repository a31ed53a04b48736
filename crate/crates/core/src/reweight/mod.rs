//! Auxiliary-task weights: the gradient-matching update and baselines.
//!
//! All weight vectors live on `{alpha >= 0, sum alpha = K}`. Every scheme
//! looks only at the shared-segment gradients collected in a
//! [`GradientSnapshot`]; task heads never enter the weight objective.

mod arml;
mod baselines;
mod grid;
mod scheme;
mod simplex;
mod weights;

pub use arml::{arml_objective, arml_update, arml_weight_gradient, matching_gradient, matching_objective, SnapshotEma};
pub use baselines::{adaloss_weights, cosine_sim_weights, gradnorm_update, ol_aux_update};
pub use grid::{argmin_first, grid_search, select, GridSelection};
pub use scheme::{AdaLoss, Arml, CosineSim, Fixed, GradNorm, OlAux, Reweighter, Uniform, UpdateInputs};
pub use simplex::project_simplex;
pub use weights::{GradientSnapshot, TaskWeights, SUM_TOL};
