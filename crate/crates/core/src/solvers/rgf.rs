use crate::directions::{DirectionSampler, UnitSphere};
use crate::error::{Error, Result};
use crate::objectives::Oracle;

use super::{Solver, SolverState, StepOutcome};

/// Random gradient-free method: a forward difference along a uniform unit
/// direction `u`, then `θ ← θ − h · (f(θ + μu) − f(θ))/μ · u`.
///
/// `f(θ)` is re-evaluated after every move so that recorded values are exact,
/// which makes two oracle calls per step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rgf {
    mu_fd: f64,
    h_step: f64,
}

impl Rgf {
    pub fn new(mu_fd: f64, h_step: f64) -> Result<Self> {
        if !(mu_fd > 0.0 && mu_fd.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "mu_fd must be positive, got {mu_fd}"
            )));
        }
        if !(h_step > 0.0 && h_step.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "h_step must be positive, got {h_step}"
            )));
        }
        Ok(Self { mu_fd, h_step })
    }

    pub fn mu_fd(&self) -> f64 {
        self.mu_fd
    }

    pub fn h_step(&self) -> f64 {
        self.h_step
    }
}

impl Solver for Rgf {
    fn name(&self) -> &'static str {
        "rgf"
    }

    fn evals_per_step(&self) -> u64 {
        2
    }

    fn is_monotone(&self) -> bool {
        false
    }

    fn step(&self, state: &mut SolverState, oracle: &mut Oracle<'_>) -> Result<StepOutcome> {
        UnitSphere.sample_into(&mut state.rng, &mut state.direction);
        let f_probe = oracle.evaluate_along(&state.theta, self.mu_fd, &state.direction)?;
        let slope = (f_probe - state.f_current) / self.mu_fd;
        let step = self.h_step * slope;
        for (x, &u) in state.theta.iter_mut().zip(&state.direction) {
            *x -= step * u;
        }
        state.f_current = oracle.evaluate(&state.theta)?;
        state.t += 1;
        Ok(StepOutcome::Advanced {
            alpha: Some(step.abs()),
        })
    }
}
