use std::time::Instant;

use crate::directions::l2_norm;
use crate::error::{Error, Result};
use crate::objectives::{Objective, Oracle};
use crate::rng::SeededRng;
use crate::trajectory::{Record, Trajectory};

use super::{Solver, SolverState, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSettings {
    /// Index `T` of the last recorded iterate; `T - 1` steps are taken.
    pub iterations: u64,
    /// Seed of this trajectory's random stream.
    pub seed: u64,
    pub record_every: u64,
    pub run_index: u64,
}

/// One completed step, as seen by an observer.
#[derive(Debug)]
pub struct StepEvent<'a> {
    pub t: u64,
    pub theta_before: &'a [f64],
    pub theta_after: &'a [f64],
    pub direction: &'a [f64],
    pub alpha: Option<f64>,
    pub f_before: f64,
    pub f_after: f64,
}

pub fn run_trajectory(
    solver: &dyn Solver,
    objective: &dyn Objective,
    theta_init: &[f64],
    settings: &RunSettings,
) -> Result<Trajectory> {
    drive(solver, objective, theta_init, settings, None)
}

/// Like [`run_trajectory`], calling `observer` after every step.
pub fn run_trajectory_observed(
    solver: &dyn Solver,
    objective: &dyn Objective,
    theta_init: &[f64],
    settings: &RunSettings,
    observer: &mut dyn FnMut(&StepEvent<'_>),
) -> Result<Trajectory> {
    drive(solver, objective, theta_init, settings, Some(observer))
}

fn drive(
    solver: &dyn Solver,
    objective: &dyn Objective,
    theta_init: &[f64],
    settings: &RunSettings,
    mut observer: Option<&mut dyn FnMut(&StepEvent<'_>)>,
) -> Result<Trajectory> {
    if settings.iterations == 0 {
        return Err(Error::InvalidParameters(
            "iterations must be at least 1".into(),
        ));
    }
    if settings.record_every == 0 {
        return Err(Error::InvalidParameters(
            "record_every must be at least 1".into(),
        ));
    }
    let mut oracle = Oracle::new(objective);
    let mut state = SolverState::new(
        theta_init.to_vec(),
        &mut oracle,
        SeededRng::new(settings.seed),
    )?;
    let mut grad = vec![0.0; objective.dim()];
    let mut min_grad = f64::INFINITY;
    let mut records = Vec::new();
    let mut terminal_reason = None;
    let mut before = Vec::new();
    let start = Instant::now();

    for t in 1..=settings.iterations {
        debug_assert_eq!(state.t, t);
        objective.gradient_into(&state.theta, &mut grad);
        let grad_norm = l2_norm(&grad);
        min_grad = min_grad.min(grad_norm);
        let record_now = t == 1 || t % settings.record_every == 0 || t == settings.iterations;
        let mut record = Record {
            t,
            f_value: state.f_current,
            grad_norm,
            min_grad_norm: min_grad,
            alpha_t: None,
            evals: oracle.evals(),
            elapsed_ns: start.elapsed().as_nanos() as u64,
        };
        if t == settings.iterations {
            record.alpha_t = solver.planned_step_size(t);
            records.push(record);
            break;
        }
        let f_before = state.f_current;
        if observer.is_some() {
            before.clone_from(&state.theta);
        }
        match solver.step(&mut state, &mut oracle)? {
            StepOutcome::Advanced { alpha } => {
                record.alpha_t = alpha;
                if let Some(obs) = observer.as_mut() {
                    obs(&StepEvent {
                        t,
                        theta_before: &before,
                        theta_after: &state.theta,
                        direction: &state.direction,
                        alpha,
                        f_before,
                        f_after: state.f_current,
                    });
                }
                if record_now {
                    records.push(record);
                }
            }
            StepOutcome::Exhausted { reason } => {
                records.push(record);
                terminal_reason = Some(reason);
                break;
            }
        }
    }

    Ok(Trajectory {
        run_index: settings.run_index,
        seed: settings.seed,
        solver: solver.name().to_string(),
        objective: objective.name().to_string(),
        schedule: solver.schedule_name().map(str::to_string),
        records,
        terminal_reason,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::directions::UnitSphere;
    use crate::objectives::{NesterovChain, SphereQuadratic};
    use crate::schedules::{Directional, Power};
    use crate::solvers::Stp;

    fn settings(iterations: u64, record_every: u64) -> RunSettings {
        RunSettings {
            iterations,
            seed: 42,
            record_every,
            run_index: 0,
        }
    }

    fn strip_time(traj: &mut Trajectory) {
        traj.records.iter_mut().for_each(|r| r.elapsed_ns = 0);
    }

    #[test]
    fn single_iteration_records_the_start() {
        let f = NesterovChain::new(500).unwrap();
        let solver = Stp::new(
            Arc::new(UnitSphere),
            Arc::new(Power::new(4.0, 0.51).unwrap()),
        );
        let traj = run_trajectory(&solver, &f, &vec![0.0; 500], &settings(1, 100)).unwrap();
        assert_eq!(traj.records.len(), 1);
        let r = &traj.records[0];
        assert_eq!((r.t, r.f_value, r.grad_norm, r.evals), (1, 0.0, 1.0, 1));
        assert_eq!(r.alpha_t, Some(4.0));
    }

    #[test]
    fn grid_and_accounting() {
        let f = SphereQuadratic::new(5).unwrap();
        let solver = Stp::new(
            Arc::new(UnitSphere),
            Arc::new(Power::new(1.0, 0.6).unwrap()),
        );
        let traj = run_trajectory(&solver, &f, &[1.0; 5], &settings(95, 10)).unwrap();
        let ts: Vec<u64> = traj.times();
        assert_eq!(ts, vec![1, 10, 20, 30, 40, 50, 60, 70, 80, 90, 95]);
        for r in &traj.records {
            assert_eq!(r.evals, 1 + 2 * (r.t - 1));
        }
        traj.validate().unwrap();
        for w in traj.records.windows(2) {
            assert!(w[1].f_value <= w[0].f_value);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let f = NesterovChain::new(20).unwrap();
        let solver = Stp::new(
            Arc::new(UnitSphere),
            Arc::new(Power::new(4.0, 0.51).unwrap()),
        );
        let mut a = run_trajectory(&solver, &f, &[0.0; 20], &settings(300, 7)).unwrap();
        let mut b = run_trajectory(&solver, &f, &[0.0; 20], &settings(300, 7)).unwrap();
        strip_time(&mut a);
        strip_time(&mut b);
        assert_eq!(a, b);
    }

    #[test]
    fn exhaustion_stops_the_run() {
        let f = SphereQuadratic::new(2).unwrap();
        // 2^-t < 1e-300 first at t = 997.
        let solver = Stp::new(
            Arc::new(UnitSphere),
            Arc::new(Directional::new(1.0, 2.0).unwrap()),
        );
        let traj = run_trajectory(&solver, &f, &[1.0, 0.0], &settings(5000, 100)).unwrap();
        assert!(traj.terminal_reason.is_some());
        let last = traj.last().unwrap();
        assert_eq!(last.t, 997);
        assert_eq!(last.evals, 1 + 3 * 996);
        assert_eq!(last.alpha_t, None);
    }

    #[test]
    fn observer_sees_every_step() {
        let f = SphereQuadratic::new(3).unwrap();
        let solver = Stp::new(
            Arc::new(UnitSphere),
            Arc::new(Power::new(1.0, 0.6).unwrap()),
        );
        let mut seen = Vec::new();
        run_trajectory_observed(&solver, &f, &[1.0; 3], &settings(50, 10), &mut |e| {
            assert!(e.f_after <= e.f_before);
            assert_eq!(e.f_after, f.value(e.theta_after));
            seen.push(e.t);
        })
        .unwrap();
        assert_eq!(seen, (1..50).collect::<Vec<_>>());
    }
}
