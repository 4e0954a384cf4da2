//! Homoscedastic aleatoric-uncertainty losses for regression and
//! classification: Bayesian Smooth L1 and Bayesian Focal loss with
//! closed-form gradients, a normalization verifier for the implied
//! Gaussian-core / Laplace-tail likelihood, synthetic data generators and a
//! toy multi-task trainer that learns the log-variances.

#![allow(clippy::excessive_precision)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod gradcheck;
pub mod likelihood;
pub mod losses;
pub mod plot;
pub mod quadrature;
pub mod scalar_math;
pub mod synth;
pub mod trainer;

pub use error::{Error, Result};
