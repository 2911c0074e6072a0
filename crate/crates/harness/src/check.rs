//! Diagnostic checks over a batch of recorded trajectories.
//!
//! Each check yields `{check_name, pass, statistics}`. A config may list its
//! checks explicitly; otherwise [`default_checks`] picks those that apply to
//! the solver, schedule and objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use stp_core::diagnostics::{
    bounded_rate_check, check_expected_decrease, check_probe_step_decrease,
    convex_rate_constants_with_alpha, expectation_curve, first_increase, geometric_envelope_check,
    geometric_rate_fit, last_iterate_decay, linear_rate_bound, rate_fit, CurveField,
};
use stp_core::rng::SeededRng;
use stp_core::solvers::{run_trajectory_observed, RunSettings};
use stp_core::trajectory::Trajectory;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::registry::Experiment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_name: String,
    pub pass: bool,
    pub statistics: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesField {
    GradNorm,
    MinGradNorm,
}

fn d_exponent() -> f64 {
    0.49
}
fn d_half() -> f64 {
    0.5
}
fn d_slack() -> f64 {
    0.05
}
fn d_min_grad() -> SeriesField {
    SeriesField::MinGradNorm
}
fn d_max_exponent() -> f64 {
    -0.40
}
fn d_tenth() -> f64 {
    0.1
}
fn d_early_t() -> u64 {
    1000
}
fn d_points() -> usize {
    3
}
fn d_alphas() -> Vec<f64> {
    vec![1e-3, 1e-2, 1e-1]
}
fn d_samples() -> usize {
    10_000
}
fn d_rate_slack() -> f64 {
    0.003
}
fn d_s() -> f64 {
    0.9
}
fn d_quarter() -> f64 {
    0.25
}
fn d_three() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// Recorded `f` never increases.
    Monotone,
    /// Final gradient norm below the initial one on every trajectory.
    Descent,
    /// `T^exponent · min_{t≤T} ‖∇f‖` non-increasing over the tail, per trajectory.
    BoundedRate {
        #[serde(default = "d_exponent")]
        exponent: f64,
        #[serde(default = "d_half")]
        tail_fraction: f64,
        #[serde(default = "d_slack")]
        slack: f64,
    },
    /// Log-log slope of the cross-seed mean at most `max_exponent`.
    RateFit {
        #[serde(default = "d_min_grad")]
        field: SeriesField,
        #[serde(default = "d_half")]
        window_fraction: f64,
        #[serde(default = "d_max_exponent")]
        max_exponent: f64,
    },
    /// Median gradient norm over the last `fraction` of the grid is at most
    /// `max_ratio` times the median over the first, and the mean gradient
    /// norm at the end is below the mean at `early_t`.
    LastIterate {
        #[serde(default = "d_tenth")]
        fraction: f64,
        #[serde(default = "d_tenth")]
        max_ratio: f64,
        #[serde(default = "d_early_t")]
        early_t: u64,
    },
    /// Monte Carlo expected decrease of one three-point step at random points.
    ExpectedDecrease {
        #[serde(default = "d_points")]
        points: usize,
        #[serde(default = "d_alphas")]
        alphas: Vec<f64>,
        #[serde(default = "d_samples")]
        samples: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Replays each trajectory and checks the per-step decrease of the
    /// probe-driven schedule.
    ProbeStepReplay,
    /// Geometric fit of the mean gap against the linear-rate bound.
    GeometricRate {
        #[serde(default = "d_rate_slack")]
        slack: f64,
    },
    /// Per trajectory, `(1 − s·μ_D²μ/L)^(−t) · gap` bounded over the tail.
    GeometricEnvelope {
        #[serde(default = "d_s")]
        s: f64,
        #[serde(default = "d_quarter")]
        tail_fraction: f64,
        #[serde(default = "d_slack")]
        slack: f64,
    },
    /// Mean gap below `a/T` plus a multiple of its standard error.
    ConvexRateBound {
        #[serde(default = "d_three")]
        stderr_multiple: f64,
    },
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::Monotone => "monotone",
            CheckSpec::Descent => "descent",
            CheckSpec::BoundedRate { .. } => "bounded_rate",
            CheckSpec::RateFit { .. } => "rate_fit",
            CheckSpec::LastIterate { .. } => "last_iterate",
            CheckSpec::ExpectedDecrease { .. } => "expected_decrease",
            CheckSpec::ProbeStepReplay => "probe_step_replay",
            CheckSpec::GeometricRate { .. } => "geometric_rate",
            CheckSpec::GeometricEnvelope { .. } => "geometric_envelope",
            CheckSpec::ConvexRateBound { .. } => "convex_rate_bound",
        }
    }
}

/// Checks that apply to an experiment when none are configured.
pub fn default_checks(exp: &Experiment) -> Vec<CheckSpec> {
    let mut out = Vec::new();
    if exp.solver.is_monotone() {
        out.push(CheckSpec::Monotone);
    }
    let Some(schedule) = &exp.schedule else {
        out.push(CheckSpec::Descent);
        return out;
    };
    out.push(CheckSpec::ExpectedDecrease {
        points: d_points(),
        alphas: d_alphas(),
        samples: d_samples(),
        seed: 0,
    });
    let objective = exp.objective.as_ref();
    if schedule.probe_base().is_some() {
        out.push(CheckSpec::ProbeStepReplay);
        if objective.strong_convexity() > 0.0 && objective.f_star().is_some() {
            out.push(CheckSpec::GeometricRate {
                slack: d_rate_slack(),
            });
            out.push(CheckSpec::GeometricEnvelope {
                s: d_s(),
                tail_fraction: d_quarter(),
                slack: d_slack(),
            });
        }
        return out;
    }
    if let Some(decay) = schedule.decay() {
        if decay.exponent > 0.5 && decay.exponent < 1.0 {
            let rate = 1.0 - decay.exponent;
            out.push(CheckSpec::BoundedRate {
                exponent: rate,
                tail_fraction: d_half(),
                slack: d_slack(),
            });
            out.push(CheckSpec::RateFit {
                field: SeriesField::MinGradNorm,
                window_fraction: d_half(),
                // Allow a 20% shortfall on the predicted exponent.
                max_exponent: -0.8 * rate,
            });
        }
        if schedule.satisfies_robbins_monro() {
            out.push(CheckSpec::LastIterate {
                fraction: d_tenth(),
                max_ratio: d_tenth(),
                early_t: d_early_t(),
            });
        }
        if decay.exponent == 1.0 && objective.is_convex() && objective.sublevel_radius(1.0).is_ok()
        {
            out.push(CheckSpec::ConvexRateBound {
                stderr_multiple: d_three(),
            });
        }
    }
    out
}

fn result(spec: &CheckSpec, pass: bool, statistics: Value) -> CheckResult {
    CheckResult {
        check_name: spec.name().into(),
        pass,
        statistics,
    }
}

fn mu_d(exp: &Experiment) -> Result<f64, HarnessError> {
    Ok(exp.sampler.constants(exp.objective.dim())?.mu_d)
}

fn f_star(exp: &Experiment) -> Result<f64, HarnessError> {
    exp.objective.f_star().ok_or_else(|| {
        HarnessError::Core(stp_core::Error::UnsupportedObjective(
            exp.objective.name().into(),
            "optimal value unknown".into(),
        ))
    })
}

fn nonfinite_to_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

pub fn run_check(
    spec: &CheckSpec,
    config: &ExperimentConfig,
    exp: &Experiment,
    trajectories: &[Trajectory],
) -> Result<CheckResult, HarnessError> {
    if trajectories.is_empty() {
        return Err(HarnessError::invalid(
            "trajectories",
            "no trajectories to check",
        ));
    }
    let objective = exp.objective.as_ref();
    Ok(match spec {
        CheckSpec::Monotone => {
            let violations: Vec<Value> = trajectories
                .iter()
                .filter_map(|tr| {
                    first_increase(tr).map(|t| json!({"run_index": tr.run_index, "t": t}))
                })
                .collect();
            result(
                spec,
                violations.is_empty(),
                json!({"trajectories": trajectories.len(), "violations": violations}),
            )
        }
        CheckSpec::Descent => {
            let failing: Vec<u64> = trajectories
                .iter()
                .filter(|tr| {
                    let first = tr.records.first().expect("nonempty");
                    let last = tr.last().expect("nonempty");
                    !(last.grad_norm < first.grad_norm)
                })
                .map(|tr| tr.run_index)
                .collect();
            let worst = trajectories
                .iter()
                .map(|tr| tr.last().unwrap().grad_norm / tr.records[0].grad_norm)
                .fold(f64::NEG_INFINITY, f64::max);
            result(
                spec,
                failing.is_empty(),
                json!({"failing": failing, "max_final_over_initial": nonfinite_to_null(worst)}),
            )
        }
        CheckSpec::BoundedRate {
            exponent,
            tail_fraction,
            slack,
        } => {
            let r = bounded_rate_check(trajectories, *exponent, *tail_fraction, *slack)?;
            let failing: Vec<u64> = r
                .per_trajectory
                .iter()
                .filter(|t| !t.nonincreasing)
                .map(|t| t.run_index)
                .collect();
            let max_ratio = r
                .per_trajectory
                .iter()
                .map(|t| t.max_ratio)
                .fold(f64::NEG_INFINITY, f64::max);
            result(
                spec,
                r.all_nonincreasing,
                json!({
                    "exponent": exponent,
                    "max_tail_value": r.max_tail_value,
                    "max_ratio_to_tail_start": max_ratio,
                    "failing": failing,
                }),
            )
        }
        CheckSpec::RateFit {
            field,
            window_fraction,
            max_exponent,
        } => {
            let field = match field {
                SeriesField::GradNorm => CurveField::GradNorm,
                SeriesField::MinGradNorm => CurveField::MinGradNorm,
            };
            let curve = mean_curve(trajectories, field)?;
            let series: Vec<(f64, f64)> = curve.iter().map(|&(t, m)| (t as f64, m)).collect();
            let fit = rate_fit(&series, *window_fraction)?;
            result(
                spec,
                fit.exponent_estimate <= *max_exponent,
                json!({
                    "exponent_estimate": fit.exponent_estimate,
                    "intercept": fit.intercept,
                    "r_squared": fit.r_squared,
                    "window": [fit.window.0, fit.window.1],
                    "max_exponent": max_exponent,
                }),
            )
        }
        CheckSpec::LastIterate {
            fraction,
            max_ratio,
            early_t,
        } => {
            let mut failing = Vec::new();
            let mut worst: f64 = 0.0;
            for tr in trajectories {
                let d = last_iterate_decay(tr, *fraction)?;
                worst = worst.max(d.ratio);
                if !(d.ratio <= *max_ratio) {
                    failing.push(json!({"run_index": tr.run_index, "ratio": d.ratio}));
                }
            }
            let curve = mean_curve(trajectories, CurveField::GradNorm)?;
            let early = curve
                .iter()
                .rev()
                .find(|&&(t, _)| t <= *early_t)
                .copied()
                .unwrap_or(curve[0]);
            let last = *curve.last().expect("nonempty");
            let mean_decreased = last.1 < early.1;
            result(
                spec,
                failing.is_empty() && mean_decreased,
                json!({
                    "max_ratio_observed": worst,
                    "failing": failing,
                    "mean_grad_early": {"t": early.0, "value": early.1},
                    "mean_grad_final": {"t": last.0, "value": last.1},
                }),
            )
        }
        CheckSpec::ExpectedDecrease {
            points,
            alphas,
            samples,
            seed,
        } => {
            let mut rng = SeededRng::new(*seed);
            let mut cases = Vec::new();
            let mut all = true;
            for _ in 0..*points {
                let mut theta = exp.theta_init.clone();
                theta.iter_mut().for_each(|x| *x += rng.standard_normal());
                for &alpha in alphas {
                    let r = check_expected_decrease(
                        objective,
                        &theta,
                        alpha,
                        exp.sampler.as_ref(),
                        *samples,
                        &mut rng,
                    )?;
                    all &= r.holds;
                    cases.push(json!({
                        "alpha": alpha,
                        "lhs_mean": r.lhs_mean,
                        "lhs_stderr": r.lhs_stderr,
                        "rhs": r.rhs,
                        "holds": r.holds,
                    }));
                }
            }
            result(spec, all, json!({"cases": cases}))
        }
        CheckSpec::ProbeStepReplay => probe_step_replay(spec, config, exp, trajectories)?,
        CheckSpec::GeometricRate { slack } => {
            let (q, h) = linear_rate_inputs(exp)?;
            let fs = f_star(exp)?;
            let curve = mean_curve(trajectories, CurveField::FGap { f_star: fs })?;
            let series: Vec<(f64, f64)> = curve.iter().map(|&(t, m)| (t as f64, m)).collect();
            let fit = geometric_rate_fit(&series)?;
            let (t_final, gap_final) = *curve.last().expect("nonempty");
            let initial_gap = exp.objective.value(&exp.theta_init) - fs;
            let bound = linear_rate_bound(
                initial_gap,
                mu_d(exp)?,
                objective.strong_convexity(),
                objective.smoothness(),
                h,
                t_final,
            )?;
            let rho_limit = 1.0 - q + slack;
            result(
                spec,
                fit.rho <= rho_limit && gap_final <= bound,
                json!({
                    "rho": fit.rho,
                    "rho_limit": rho_limit,
                    "fit_points": fit.points,
                    "r_squared": fit.r_squared,
                    "t_final": t_final,
                    "mean_gap_final": gap_final,
                    "bound_final": bound,
                }),
            )
        }
        CheckSpec::GeometricEnvelope {
            s,
            tail_fraction,
            slack,
        } => {
            let (q, _) = linear_rate_inputs(exp)?;
            let fs = f_star(exp)?;
            let rate = 1.0 - s * q;
            let mut failing = Vec::new();
            let mut worst: f64 = f64::NEG_INFINITY;
            for tr in trajectories {
                let c = geometric_envelope_check(tr, fs, rate, *tail_fraction, *slack)?;
                if c.points_checked > 0 {
                    worst = worst.max(c.max_ratio);
                }
                if !c.pass {
                    failing.push(json!({"run_index": tr.run_index, "max_ratio": c.max_ratio}));
                }
            }
            result(
                spec,
                failing.is_empty(),
                json!({"rate": rate, "max_ratio": nonfinite_to_null(worst), "failing": failing}),
            )
        }
        CheckSpec::ConvexRateBound { stderr_multiple } => {
            let schedule = exp
                .schedule
                .as_ref()
                .and_then(|s| s.decay())
                .ok_or_else(|| {
                    HarnessError::invalid(
                        "schedule",
                        "convex rate bound needs a closed-form schedule",
                    )
                })?;
            let constants = convex_rate_constants_with_alpha(
                objective,
                &exp.theta_init,
                mu_d(exp)?,
                schedule.scale,
            )?;
            let fs = f_star(exp)?;
            let curve = expectation_curve(trajectories, CurveField::FGap { f_star: fs })?;
            let mut violations = Vec::new();
            let mut min_margin = f64::INFINITY;
            for p in &curve {
                let limit = constants.a / p.t as f64 + stderr_multiple * p.stderr;
                min_margin = min_margin.min(limit - p.mean);
                if p.mean > limit {
                    violations.push(json!({"t": p.t, "mean_gap": p.mean, "limit": limit}));
                }
            }
            result(
                spec,
                violations.is_empty(),
                json!({
                    "radius": constants.radius,
                    "alpha": constants.alpha,
                    "a": constants.a,
                    "min_margin": min_margin,
                    "violations": violations,
                }),
            )
        }
    })
}

fn mean_curve(
    trajectories: &[Trajectory],
    field: CurveField,
) -> Result<Vec<(u64, f64)>, HarnessError> {
    if trajectories.len() == 1 {
        let tr = &trajectories[0];
        return Ok(tr
            .records
            .iter()
            .map(|r| {
                let v = match field {
                    CurveField::FGap { f_star } => r.f_value - f_star,
                    CurveField::GradNorm => r.grad_norm,
                    CurveField::MinGradNorm => r.min_grad_norm,
                };
                (r.t, v)
            })
            .collect());
    }
    Ok(expectation_curve(trajectories, field)?
        .into_iter()
        .map(|p| (p.t, p.mean))
        .collect())
}

/// `(μ_D² μ / L, h)` for a probe-driven run on a strongly convex objective.
fn linear_rate_inputs(exp: &Experiment) -> Result<(f64, f64), HarnessError> {
    let h = exp
        .schedule
        .as_ref()
        .and_then(|s| s.probe_base())
        .ok_or_else(|| HarnessError::invalid("schedule", "needs the directional schedule"))?;
    let mu = exp.objective.strong_convexity();
    if mu <= 0.0 {
        return Err(HarnessError::invalid(
            "objective",
            "needs a strongly convex objective",
        ));
    }
    let m = mu_d(exp)?;
    Ok((m * m * mu / exp.objective.smoothness(), h))
}

fn probe_step_replay(
    spec: &CheckSpec,
    config: &ExperimentConfig,
    exp: &Experiment,
    trajectories: &[Trajectory],
) -> Result<CheckResult, HarnessError> {
    let h = exp
        .schedule
        .as_ref()
        .and_then(|s| s.probe_base())
        .ok_or_else(|| {
            HarnessError::invalid("schedule", "replay needs the directional schedule")
        })?;
    let outcomes: Vec<Result<(u64, u64, bool, Option<Value>), HarnessError>> = trajectories
        .par_iter()
        .map(|stored| {
            let settings = RunSettings {
                iterations: config.iterations,
                seed: stored.seed,
                record_every: config.record_every,
                run_index: stored.run_index,
            };
            let mut steps = 0u64;
            let mut failures = 0u64;
            let mut first_failure = None;
            let mut error = None;
            let replayed = run_trajectory_observed(
                exp.solver.as_ref(),
                exp.objective.as_ref(),
                &exp.theta_init,
                &settings,
                &mut |e| {
                    steps += 1;
                    match check_probe_step_decrease(
                        exp.objective.as_ref(),
                        e.theta_before,
                        e.theta_after,
                        e.direction,
                        e.t,
                        h,
                    ) {
                        Ok(c) if c.holds => {}
                        Ok(c) => {
                            failures += 1;
                            first_failure.get_or_insert(json!({
                                "run_index": stored.run_index, "t": e.t, "lhs": c.lhs, "rhs": c.rhs,
                            }));
                        }
                        Err(err) => {
                            error.get_or_insert(err);
                        }
                    }
                },
            )?;
            if let Some(err) = error {
                return Err(err.into());
            }
            let same = replayed.records.len() == stored.records.len()
                && replayed
                    .records
                    .iter()
                    .zip(&stored.records)
                    .all(|(a, b)| a.t == b.t && a.f_value.to_bits() == b.f_value.to_bits());
            Ok((steps, failures, same, first_failure))
        })
        .collect();
    let mut steps = 0;
    let mut failures = 0;
    let mut mismatched = Vec::new();
    let mut examples = Vec::new();
    for (tr, outcome) in trajectories.iter().zip(outcomes) {
        let (s, f, same, first) = outcome?;
        steps += s;
        failures += f;
        if !same {
            mismatched.push(tr.run_index);
        }
        examples.extend(first);
    }
    Ok(result(
        spec,
        failures == 0 && mismatched.is_empty(),
        json!({
            "steps": steps,
            "failures": failures,
            "replay_mismatch": mismatched,
            "first_failures": examples.into_iter().take(5).collect::<Vec<_>>(),
        }),
    ))
}

/// Runs `specs`, or the defaults when empty.
pub fn run_checks(
    config: &ExperimentConfig,
    exp: &Experiment,
    trajectories: &[Trajectory],
) -> Result<Vec<CheckResult>, HarnessError> {
    let specs = if config.checks.is_empty() {
        default_checks(exp)
    } else {
        config.checks.clone()
    };
    specs
        .iter()
        .map(|spec| run_check(spec, config, exp, trajectories))
        .collect()
}
