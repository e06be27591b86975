//! Spline-based additive network: basis functions, univariate activations,
//! the one-layer model, and its trainer.

pub mod activation;
pub mod basis;
pub mod model;
pub mod train;

pub use activation::{grid_from_values, silu, SplineActivation};
pub use basis::{bspline_basis, uniform_grid, BasisEval, MAX_DEGREE};
pub use model::{ImportanceEntry, ImportanceReport, KanModel};
pub use train::{
    gradients, gradients_sequential, init_model, loss, train, ActivationGradient, Gradients,
    TrainConfig, TrainHistory,
};
