use crate::directions::{dot, l2_norm, DirectionSampler};
use crate::error::{Error, Result};
use crate::objectives::{evaluate, gradient, Objective};
use crate::rng::SeededRng;

pub const MIN_DECREASE_SAMPLES: usize = 1000;

/// Monte Carlo estimate of `E[min(f(θ), f(θ+αs), f(θ−αs))]` against the
/// bound `f(θ) − μ_D α ‖∇f(θ)‖₂ + L α²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedDecrease {
    pub lhs_mean: f64,
    pub lhs_stderr: f64,
    pub rhs: f64,
    /// `lhs_mean − 3·lhs_stderr ≤ rhs`.
    pub holds: bool,
    pub samples: usize,
}

pub fn check_expected_decrease(
    obj: &dyn Objective,
    theta: &[f64],
    alpha: f64,
    sampler: &dyn DirectionSampler,
    n_samples: usize,
    rng: &mut SeededRng,
) -> Result<ExpectedDecrease> {
    let mu_d = sampler.constants(obj.dim())?.mu_d;
    check_expected_decrease_with_mu(obj, theta, alpha, sampler, mu_d, n_samples, rng)
}

/// As [`check_expected_decrease`] with an explicit alignment constant.
pub fn check_expected_decrease_with_mu(
    obj: &dyn Objective,
    theta: &[f64],
    alpha: f64,
    sampler: &dyn DirectionSampler,
    mu_d: f64,
    n_samples: usize,
    rng: &mut SeededRng,
) -> Result<ExpectedDecrease> {
    if n_samples < MIN_DECREASE_SAMPLES {
        return Err(Error::InvalidParameters(format!(
            "need at least {MIN_DECREASE_SAMPLES} samples, got {n_samples}"
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameters(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let f0 = evaluate(obj, theta)?;
    let grad_norm = l2_norm(&gradient(obj, theta)?);
    let rhs = f0 - mu_d * alpha * grad_norm + obj.smoothness() * alpha * alpha / 2.0;

    let d = theta.len();
    let mut s = vec![0.0; d];
    let mut point = vec![0.0; d];
    let along = |step: f64, s: &[f64], point: &mut Vec<f64>| {
        for ((p, &x), &si) in point.iter_mut().zip(theta).zip(s) {
            *p = x + step * si;
        }
        obj.value(point)
    };
    // Deviations from the first sample keep the mean exact when all samples agree.
    let mut anchor = None;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        sampler.sample_into(rng, &mut s);
        let best = f0
            .min(along(alpha, &s, &mut point))
            .min(along(-alpha, &s, &mut point));
        let a = *anchor.get_or_insert(best);
        let dev = best - a;
        sum += dev;
        sum_sq += dev * dev;
    }
    let n = n_samples as f64;
    let anchor = anchor.expect("at least one sample");
    let lhs_mean = anchor + sum / n;
    let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
    let lhs_stderr = (var / n).sqrt();
    Ok(ExpectedDecrease {
        lhs_mean,
        lhs_stderr,
        rhs,
        holds: lhs_mean - 3.0 * lhs_stderr <= rhs,
        samples: n_samples,
    })
}

/// Per-step decrease of the probe-driven schedule:
/// `f(θᵗ⁺¹) ≤ f(θᵗ) − ⟨∇f(θᵗ), sₜ⟩²/(2L) + (L/8) h^(−2t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeStepCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub holds: bool,
}

pub fn check_probe_step_decrease(
    obj: &dyn Objective,
    theta_before: &[f64],
    theta_after: &[f64],
    direction: &[f64],
    t: u64,
    h: f64,
) -> Result<ProbeStepCheck> {
    if direction.len() != theta_before.len() {
        return Err(Error::InvalidInput("direction dimension mismatch".into()));
    }
    let l = obj.smoothness();
    let f_before = evaluate(obj, theta_before)?;
    let lhs = evaluate(obj, theta_after)?;
    let g = gradient(obj, theta_before)?;
    let inner = dot(&g, direction);
    let rhs = f_before - inner * inner / (2.0 * l) + l / 8.0 * h.powf(-2.0 * t as f64);
    let tolerance = 1e-12 * f_before.abs().max(1.0);
    Ok(ProbeStepCheck {
        lhs,
        rhs,
        tolerance,
        holds: lhs <= rhs + tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directions::UnitSphere;
    use crate::objectives::{NesterovChain, SphereQuadratic};

    #[test]
    fn at_the_minimizer() {
        let f = SphereQuadratic::new(4).unwrap();
        let mut rng = SeededRng::new(1);
        let r = check_expected_decrease(&f, &[0.0; 4], 0.3, &UnitSphere, 1000, &mut rng).unwrap();
        assert_eq!(r.lhs_mean, 0.0);
        assert_eq!(r.lhs_stderr, 0.0);
        assert!((r.rhs - 0.045).abs() < 1e-15);
        assert!(r.holds);
    }

    #[test]
    fn one_dimensional_equality() {
        let f = SphereQuadratic::new(1).unwrap();
        let mut rng = SeededRng::new(2);
        let r = check_expected_decrease_with_mu(&f, &[1.0], 0.1, &UnitSphere, 1.0, 2000, &mut rng)
            .unwrap();
        assert_eq!(r.lhs_mean, 0.405);
        assert_eq!(r.rhs, 0.405);
        assert_eq!(r.lhs_stderr, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn too_few_samples() {
        let f = SphereQuadratic::new(1).unwrap();
        let mut rng = SeededRng::new(2);
        assert!(check_expected_decrease(&f, &[1.0], 0.1, &UnitSphere, 999, &mut rng).is_err());
    }

    #[test]
    fn nesterov_origin() {
        let f = NesterovChain::new(50).unwrap();
        let mut rng = SeededRng::new(3);
        let r =
            check_expected_decrease(&f, &[0.0; 50], 0.01, &UnitSphere, 20_000, &mut rng).unwrap();
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn hand_traced_probe_step() {
        let f = SphereQuadratic::new(1).unwrap();
        let r = check_probe_step_decrease(&f, &[1.0], &[-0.25], &[1.0], 1, 2.0).unwrap();
        assert_eq!(r.lhs, 0.03125);
        assert_eq!(r.rhs, 0.03125);
        assert!(r.holds);
    }

    #[test]
    fn probe_step_violation_detected() {
        let f = SphereQuadratic::new(1).unwrap();
        let r = check_probe_step_decrease(&f, &[1.0], &[1.0], &[1.0], 1, 2.0).unwrap();
        assert!(!r.holds);
    }
}
