//! Exponential functionals of Lévy processes: exponents, path simulation, fluctuation
//! estimators, decay-regime asymptotics and continuous-state branching processes in a
//! Lévy random environment.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod levy_core;
pub mod numerics;
pub mod quadrature;

pub use error::{Error, Result};
pub mod mc;
pub mod path_sim;
pub mod asymptotics;
pub mod ladder;
pub mod cbre;
