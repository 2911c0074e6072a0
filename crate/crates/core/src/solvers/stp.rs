use std::sync::Arc;

use crate::directions::DirectionSampler;
use crate::error::{Error, Result};
use crate::objectives::Oracle;
use crate::schedules::{DirectionalProbe, StepSchedule};

use super::{three_point_move, Solver, SolverState, StepOutcome};

/// Stochastic three points: sample `s`, then keep the best of
/// `θ`, `θ + α s`, `θ − α s`.
#[derive(Debug, Clone)]
pub struct Stp {
    sampler: Arc<dyn DirectionSampler>,
    schedule: Arc<dyn StepSchedule>,
}

impl Stp {
    pub fn new(sampler: Arc<dyn DirectionSampler>, schedule: Arc<dyn StepSchedule>) -> Self {
        Self { sampler, schedule }
    }

    pub fn schedule(&self) -> &dyn StepSchedule {
        self.schedule.as_ref()
    }

    pub fn sampler(&self) -> &dyn DirectionSampler {
        self.sampler.as_ref()
    }
}

impl Solver for Stp {
    fn name(&self) -> &'static str {
        "stp"
    }

    fn evals_per_step(&self) -> u64 {
        if self.schedule.probe_base().is_some() {
            3
        } else {
            2
        }
    }

    fn is_monotone(&self) -> bool {
        true
    }

    fn step(&self, state: &mut SolverState, oracle: &mut Oracle<'_>) -> Result<StepOutcome> {
        let t = state.t;
        let offset = match self.schedule.probe_offset(t) {
            Ok(offset) => offset,
            Err(e @ Error::ScheduleExhausted { .. }) => {
                return Ok(StepOutcome::Exhausted {
                    reason: e.to_string(),
                })
            }
            Err(e) => return Err(e),
        };
        if let Some(l) = self.schedule.smoothness() {
            if l != oracle.smoothness() {
                return Err(Error::ContractViolation(format!(
                    "schedule built for L = {l}, objective has L = {}",
                    oracle.smoothness()
                )));
            }
        }
        self.sampler
            .sample_into(&mut state.rng, &mut state.direction);
        let probe = match offset {
            Some(offset) => Some(DirectionalProbe {
                offset,
                difference: oracle.probe_difference(
                    &state.theta,
                    state.f_current,
                    offset,
                    &state.direction,
                )?,
            }),
            None => None,
        };
        let alpha = self.schedule.step_size(t, probe.as_ref())?;
        three_point_move(state, oracle, alpha)?;
        state.t += 1;
        Ok(StepOutcome::Advanced { alpha: Some(alpha) })
    }

    fn planned_step_size(&self, t: u64) -> Option<f64> {
        if self.schedule.probe_base().is_some() {
            return None;
        }
        self.schedule.step_size(t, None).ok()
    }

    fn schedule_name(&self) -> Option<&'static str> {
        Some(self.schedule.name())
    }
}
