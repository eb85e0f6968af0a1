//! Comparison optimizers: a deterministic interpolating-RBF method with
//! cycled response/distance weights, and a kriging-based expected-improvement
//! method.

pub mod ego;
pub mod gmsrbf;

pub use ego::{ego_fit, ego_select, GpModel};
pub use gmsrbf::{
    choose_scale_loo, default_scale_grid, gmsrbf_fit, gmsrbf_select, GmsrbfModel, WeightCycle,
};
