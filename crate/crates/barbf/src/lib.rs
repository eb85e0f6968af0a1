//! Surrogate-based global optimization of expensive black-box functions.
//!
//! The centerpiece is BaRBF: a Bayesian surrogate built from Gaussian radial
//! basis functions with a spike-and-slab prior on the coefficients, sampled by
//! a Gibbs/Metropolis-Hastings chain, driving a Sampled Expected Improvement
//! (SEI) acquisition rule over a candidate set. Variants add an escape step
//! that injects maximin-distance points after consecutive non-improvements
//! (M-BaRBF) and a grid-free mode that resamples candidates uniformly each
//! iteration. Two baselines are included for comparison: G-MSRBF (an
//! interpolating RBF surrogate with a cycling weighted response/distance
//! criterion) and EGO (a constant-mean Gaussian process with closed-form
//! expected improvement).
//!
//! The crate is organized around the optimization loop in [`optimizer`] and
//! the replication harness in [`harness`]; everything below them is a small
//! library of independently testable pieces: test functions ([`testbed`]),
//! maximin Latin hypercube designs ([`design`]), the RBF surrogate
//! representation ([`rbf`]), posterior sampling ([`mcmc`]), acquisition rules
//! ([`acquisition`]), and the baselines ([`baselines`]).

pub mod acquisition;
pub mod baselines;
pub mod design;
mod error;
pub mod harness;
pub mod mcmc;
pub mod optimizer;
pub mod point;
pub mod rbf;
pub mod stats;
pub mod testbed;

pub use error::{Error, Result};
pub use point::Point;
