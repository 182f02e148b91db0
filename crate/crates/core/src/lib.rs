//! Volterra Gaussian processes, SDEs with singular drifts, and the Monte
//! Carlo estimators used to check their quantitative properties.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drifts;
pub mod ensemble;
pub mod error;
pub mod kernels;
pub mod paths;
pub mod quadrature;
pub mod rng;
pub mod solver;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
