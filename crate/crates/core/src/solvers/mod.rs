//! Zeroth-order solvers as single-step state machines, and the trajectory
//! runner that drives them.

mod gld;
mod rgf;
mod run;
mod stp;

use std::fmt;

pub use gld::Gld;
pub use rgf::Rgf;
pub use run::{run_trajectory, run_trajectory_observed, RunSettings, StepEvent};
pub use stp::Stp;

use crate::error::Result;
use crate::objectives::Oracle;
use crate::rng::SeededRng;

/// Mutable state of one trajectory.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub theta: Vec<f64>,
    /// Cached `f(theta)`.
    pub f_current: f64,
    /// Index of the current iterate, starting at 1.
    pub t: u64,
    pub rng: SeededRng,
    /// Last search direction drawn.
    pub direction: Vec<f64>,
}

impl SolverState {
    /// Spends one oracle call to cache `f(theta)`.
    pub fn new(theta: Vec<f64>, oracle: &mut Oracle<'_>, rng: SeededRng) -> Result<Self> {
        let f_current = oracle.evaluate(&theta)?;
        let dim = theta.len();
        Ok(Self {
            theta,
            f_current,
            t: 1,
            rng,
            direction: vec![0.0; dim],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    /// The iterate index advanced. `alpha` is the step length used, when the
    /// method has one.
    Advanced { alpha: Option<f64> },
    /// No step was taken and none will be; the state is unchanged.
    Exhausted { reason: String },
}

pub trait Solver: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Oracle calls spent by one [`Solver::step`].
    fn evals_per_step(&self) -> u64;

    /// Whether `f_current` can never increase.
    fn is_monotone(&self) -> bool;

    fn step(&self, state: &mut SolverState, oracle: &mut Oracle<'_>) -> Result<StepOutcome>;

    /// Step length iteration `t` would use, if it is known without running it.
    fn planned_step_size(&self, _t: u64) -> Option<f64> {
        None
    }

    /// Name of the step-size rule, for solvers that take one.
    fn schedule_name(&self) -> Option<&'static str> {
        None
    }
}

/// Replace `theta` by the best of `theta`, `theta + alpha·s`, `theta - alpha·s`.
///
/// Moving requires strict improvement; the `+` candidate wins ties between
/// the two moves. Always costs two oracle calls.
pub fn three_point_move(
    state: &mut SolverState,
    oracle: &mut Oracle<'_>,
    alpha: f64,
) -> Result<()> {
    let f_plus = oracle.evaluate_along(&state.theta, alpha, &state.direction)?;
    let f_minus = oracle.evaluate_along(&state.theta, -alpha, &state.direction)?;
    let sign = if f_plus < state.f_current && f_plus <= f_minus {
        state.f_current = f_plus;
        1.0
    } else if f_minus < state.f_current {
        state.f_current = f_minus;
        -1.0
    } else {
        return Ok(());
    };
    let step = sign * alpha;
    for (x, &s) in state.theta.iter_mut().zip(&state.direction) {
        *x += step * s;
    }
    Ok(())
}
