//! Discrete Bayesian networks: model, exact inference, sampling, parameter
//! estimation with elicited priors, divergence metrics and classifiers.
//!
//! Everything numeric is generic over [`Prob`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64` unless suffixed `32`.

pub mod bn;
pub mod classify;
pub mod dataset;
pub mod estimation;
pub mod inference;
pub mod metrics;
pub mod prior;
pub mod random;
pub mod sampling;
pub mod scalar;

pub use scalar::Prob;

pub type Network = bn::Network<f64>;
pub type Network32 = bn::Network<f32>;
pub type Distribution = bn::Distribution<f64>;
pub type Distribution32 = bn::Distribution<f32>;
pub type Cpt = bn::Cpt<f64>;
pub type PriorTable = prior::PriorTable<f64>;
pub type Factor = inference::Factor<f64>;
