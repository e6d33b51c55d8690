//! Numerics for Euclidean scalar fields over a p-adic (or function-field)
//! base: ultrametric geometry, the free propagator, lattice Gaussian
//! measures, Wick calculus and Schwinger-function estimators.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
mod error;
pub mod lattice;
pub mod model;
pub mod report;
pub mod sampler;
pub mod ultrametric;
pub mod verify;
pub mod wick;

pub use error::{Error, Result};
