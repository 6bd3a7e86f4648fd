//! Discrete-time networked SIS epidemics coupled with polar opinion dynamics.
//!
//! Each node `i` carries an infection level `x_i ∈ [0, 1]` and an opinion
//! `z_i ∈ [0, 1]` about the epidemic's seriousness. Opinions lower infection
//! and raise recovery rates; infection levels in turn pull opinions up. The
//! crate simulates the coupled map, computes the opinion-dependent
//! reproduction number and its extremes, locates and certifies equilibria, and
//! turns a severity classification into a response plan.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

// `!(a > b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod intervention;
pub mod linalg;
pub mod network;
pub mod scalar;
pub mod scenario;
pub mod spectral;
pub mod synthetic;
pub mod trajectory_io;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix = linalg::Matrix<f64>;
pub type Params = network::ModelParams<f64>;
pub type Rates = network::EpidemicRates<f64>;
pub type State = dynamics::CoupledState<f64>;
pub type Trajectory = dynamics::Trajectory<f64>;
pub type Record = equilibria::EquilibriumRecord<f64>;
pub type Plan = intervention::ResponsePlan<f64>;

pub type Params32 = network::ModelParams<f32>;
pub type State32 = dynamics::CoupledState<f32>;
