use std::sync::Arc;

use proptest::prelude::*;
use stp_core::diagnostics::first_increase;
use stp_core::directions::{DirectionSampler, ScaledGaussian, UnitSphere};
use stp_core::objectives::{HuberChainConvex, NesterovChain, Objective, SphereQuadratic};
use stp_core::schedules::{linear_rate_probe_base, Directional, Harmonic, Power, StepSchedule};
use stp_core::solvers::{
    run_trajectory, run_trajectory_observed, Gld, Rgf, RunSettings, Solver, Stp,
};

fn settings(iterations: u64, seed: u64) -> RunSettings {
    RunSettings {
        iterations,
        seed,
        record_every: 1,
        run_index: 0,
    }
}

fn stp(sampler: Arc<dyn DirectionSampler>, schedule: Arc<dyn StepSchedule>) -> Stp {
    Stp::new(sampler, schedule)
}

fn final_evals(solver: &dyn Solver, obj: &dyn Objective, iterations: u64) -> u64 {
    let theta = vec![0.5; obj.dim()];
    let traj = run_trajectory(solver, obj, &theta, &settings(iterations, 3)).unwrap();
    assert_eq!(traj.last().unwrap().t, iterations);
    traj.last().unwrap().evals
}

#[test]
fn oracle_calls_per_step() {
    let obj = NesterovChain::new(20).unwrap();
    let steps = 99;
    let power = stp(
        Arc::new(UnitSphere),
        Arc::new(Power::new(1.0, 0.5).unwrap()),
    );
    assert_eq!(final_evals(&power, &obj, steps + 1), 2 * steps + 1);
    let sphere = SphereQuadratic::new(20).unwrap();
    let h = linear_rate_probe_base(1.0 / (40.0 * std::f64::consts::PI).sqrt(), 1.0, 1.0).unwrap();
    let directional = stp(
        Arc::new(UnitSphere),
        Arc::new(Directional::new(1.0, h).unwrap()),
    );
    assert_eq!(final_evals(&directional, &sphere, steps + 1), 3 * steps + 1);
    let rgf = Rgf::new(1e-4, 0.25).unwrap();
    assert_eq!(final_evals(&rgf, &obj, steps + 1), 2 * steps + 1);
    let gld = Gld::new(Arc::new(UnitSphere), 1e-5, 1e-4).unwrap();
    let per_step = gld.radii().len() as u64;
    assert_eq!(per_step, gld.levels() as u64 + 1);
    assert_eq!(final_evals(&gld, &obj, steps + 1), per_step * steps + 1);
}

#[test]
fn every_stp_step_takes_the_best_of_three() {
    let obj = HuberChainConvex::new(8).unwrap();
    let solver = stp(
        Arc::new(ScaledGaussian),
        Arc::new(Harmonic::new(2.0).unwrap()),
    );
    let mut steps = 0;
    let mut check = |e: &stp_core::solvers::StepEvent<'_>| {
        let alpha = e.alpha.unwrap();
        let at = |sign: f64| {
            let p: Vec<f64> = e
                .theta_before
                .iter()
                .zip(e.direction)
                .map(|(x, s)| x + sign * alpha * s)
                .collect();
            obj.value(&p)
        };
        let best = e.f_before.min(at(1.0)).min(at(-1.0));
        assert_eq!(e.f_after, best, "t={}", e.t);
        assert_eq!(obj.value(e.theta_after), e.f_after);
        steps += 1;
    };
    run_trajectory_observed(&solver, &obj, &[1.0; 8], &settings(500, 9), &mut check).unwrap();
    assert_eq!(steps, 499);
}

#[test]
fn gld_never_increases_f() {
    let obj = NesterovChain::new(50).unwrap();
    let gld = Gld::new(Arc::new(UnitSphere), 1e-3, 1.0).unwrap();
    let traj = run_trajectory(&gld, &obj, &[0.0; 50], &settings(2000, 5)).unwrap();
    assert_eq!(first_increase(&traj), None);
    assert!(traj.last().unwrap().f_value < traj.records[0].f_value);
}

#[test]
fn same_seed_same_trajectory() {
    let obj = NesterovChain::new(30).unwrap();
    let solver = stp(
        Arc::new(UnitSphere),
        Arc::new(Power::new(4.0, 0.51).unwrap()),
    );
    let a = run_trajectory(&solver, &obj, &[0.0; 30], &settings(300, 77)).unwrap();
    let b = run_trajectory(&solver, &obj, &[0.0; 30], &settings(300, 77)).unwrap();
    let strip = |t: &stp_core::trajectory::Trajectory| {
        t.records
            .iter()
            .map(|r| (r.t, r.f_value.to_bits(), r.grad_norm.to_bits(), r.evals))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stp_is_monotone(seed in any::<u64>(), d in 1usize..30, alpha in 0.01f64..10.0, exponent in 0.0f64..1.0, which in 0usize..3) {
        let obj: Box<dyn Objective> = match which {
            0 => Box::new(NesterovChain::new(d).unwrap()),
            1 => Box::new(SphereQuadratic::new(d).unwrap()),
            _ => Box::new(HuberChainConvex::new(d).unwrap()),
        };
        let solver = stp(Arc::new(UnitSphere), Arc::new(Power::new(alpha, exponent).unwrap()));
        let theta = vec![1.5; d];
        let traj = run_trajectory(&solver, obj.as_ref(), &theta, &settings(200, seed)).unwrap();
        prop_assert_eq!(first_increase(&traj), None);
        let mins: Vec<f64> = traj.records.iter().map(|r| r.min_grad_norm).collect();
        prop_assert!(mins.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn recording_grid_is_thinned_but_complete(seed in any::<u64>(), every in 1u64..40, iterations in 1u64..300) {
        let obj = SphereQuadratic::new(4).unwrap();
        let solver = stp(Arc::new(UnitSphere), Arc::new(Harmonic::new(1.0).unwrap()));
        let s = RunSettings { iterations, seed, record_every: every, run_index: 2 };
        let traj = run_trajectory(&solver, &obj, &[1.0; 4], &s).unwrap();
        let expected: Vec<u64> = (1..=iterations).filter(|&t| t == 1 || t % every == 0 || t == iterations).collect();
        prop_assert_eq!(traj.times(), expected);
        prop_assert!(traj.validate().is_ok());
    }
}
