//! Zeroth-order optimization with stochastic three points (STP), the random
//! gradient-free method (RGF) and gradientless descent (GLD), together with
//! the test functions, step-size rules and diagnostics used to study them.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod directions;
pub mod error;
pub mod exact;
pub mod objectives;
pub mod rng;
pub mod schedules;
pub mod solvers;
pub mod trajectory;

pub use error::{Error, Result};
