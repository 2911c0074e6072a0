use crate::directions::{DirectionSampler, UnitSphere};
use crate::error::{Error, Result};
use crate::objectives::{evaluate, Objective};
use crate::rng::SeededRng;

fn minimizer_and_value(obj: &dyn Objective) -> Result<(Vec<f64>, f64)> {
    match (obj.minimizer(), obj.f_star()) {
        (Some(x), Some(f)) => Ok((x, f)),
        _ => Err(Error::UnsupportedObjective(
            obj.name().into(),
            "minimizer and optimal value must be known".into(),
        )),
    }
}

/// Upper bound `R` on `‖θ − θ*‖₂` over `{θ : f(θ) ≤ f(θ_init)}`.
///
/// The bound itself is analytic. `n_probe` random rays from the minimizer are
/// then bisected to their sublevel boundary, and an error is returned if any
/// boundary point lies outside the bound.
pub fn estimate_sublevel_radius(
    obj: &dyn Objective,
    theta_init: &[f64],
    n_probe: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    let (center, f_star) = minimizer_and_value(obj)?;
    let level = evaluate(obj, theta_init)?;
    if level <= f_star {
        return Ok(0.0);
    }
    let radius = obj.sublevel_radius(level)?;
    let mut u = vec![0.0; center.len()];
    let mut point = vec![0.0; center.len()];
    let mut f_at = |r: f64, u: &[f64]| {
        for ((p, &c), &ui) in point.iter_mut().zip(&center).zip(u) {
            *p = c + r * ui;
        }
        obj.value(&point)
    };
    for _ in 0..n_probe {
        UnitSphere.sample_into(rng, &mut u);
        let mut hi = radius.max(f64::MIN_POSITIVE);
        let mut doublings = 0;
        while f_at(hi, &u) <= level {
            hi *= 2.0;
            doublings += 1;
            if doublings > 1100 {
                return Err(Error::ContractViolation(format!(
                    "sublevel set of {} is unbounded along a sampled ray",
                    obj.name()
                )));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f_at(mid, &u) <= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo > radius * (1.0 + 1e-9) {
            return Err(Error::ContractViolation(format!(
                "sublevel point at distance {lo} exceeds the bound {radius}"
            )));
        }
    }
    Ok(radius)
}

/// Constants of the `a/T` bound for the harmonic schedule on convex objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexRateConstants {
    pub radius: f64,
    pub alpha: f64,
    /// `max(3αμ_D/R · (f(θ¹) − f*), Lα² / (2(αμ_D/R − 1)))`.
    pub a: f64,
    pub initial_gap: f64,
}

/// Constants with the canonical `alpha = 2R/μ_D`.
pub fn convex_rate_constants(
    obj: &dyn Objective,
    theta_init: &[f64],
    mu_d: f64,
) -> Result<ConvexRateConstants> {
    let radius = analytic_radius(obj, theta_init)?;
    convex_rate_constants_with_alpha(obj, theta_init, mu_d, 2.0 * radius / mu_d)
}

pub fn convex_rate_constants_with_alpha(
    obj: &dyn Objective,
    theta_init: &[f64],
    mu_d: f64,
    alpha: f64,
) -> Result<ConvexRateConstants> {
    if !obj.is_convex() {
        return Err(Error::UnsupportedObjective(
            obj.name().into(),
            "objective is not convex".into(),
        ));
    }
    if !(mu_d > 0.0) {
        return Err(Error::InvalidParameters(format!(
            "mu_D must be positive, got {mu_d}"
        )));
    }
    let radius = analytic_radius(obj, theta_init)?;
    let (_, f_star) = minimizer_and_value(obj)?;
    let initial_gap = evaluate(obj, theta_init)? - f_star;
    let ratio = alpha * mu_d / radius;
    if !(ratio > 1.0) {
        return Err(Error::InvalidParameters(format!(
            "alpha = {alpha} must exceed R/mu_D = {}",
            radius / mu_d
        )));
    }
    let a =
        (3.0 * ratio * initial_gap).max(obj.smoothness() * alpha * alpha / (2.0 * (ratio - 1.0)));
    Ok(ConvexRateConstants {
        radius,
        alpha,
        a,
        initial_gap,
    })
}

fn analytic_radius(obj: &dyn Objective, theta_init: &[f64]) -> Result<f64> {
    let (_, f_star) = minimizer_and_value(obj)?;
    let level = evaluate(obj, theta_init)?;
    let radius = if level <= f_star {
        0.0
    } else {
        obj.sublevel_radius(level)?
    };
    if radius <= 0.0 {
        return Err(Error::DegenerateStart(format!(
            "sublevel radius is 0 at f(θ¹) = {level}"
        )));
    }
    Ok(radius)
}

/// Right-hand side of the linear-rate bound for the probe-driven schedule,
/// `q^(T−1) [f(θ¹) − f* + (L/8) / (h² q − 1)]` with `q = 1 − μ_D² μ / L`.
pub fn linear_rate_bound(
    initial_gap: f64,
    mu_d: f64,
    mu: f64,
    smoothness: f64,
    h: f64,
    t: u64,
) -> Result<f64> {
    if t < 1 {
        return Err(Error::InvalidParameters("T must be at least 1".into()));
    }
    let q = 1.0 - mu_d * mu_d * mu / smoothness;
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameters(format!(
            "contraction factor {q} outside (0, 1)"
        )));
    }
    let denom = h * h * q - 1.0;
    if !(denom > 0.0) {
        return Err(Error::InvalidParameters(format!(
            "h = {h} must exceed 1/sqrt({q})"
        )));
    }
    Ok(q.powf((t - 1) as f64) * (initial_gap + smoothness / 8.0 / denom))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::objectives::{HuberChainConvex, NesterovChain};

    #[test]
    fn huber_radius_examples() {
        let f = HuberChainConvex::new(1).unwrap();
        let mut rng = SeededRng::new(0);
        assert_eq!(
            estimate_sublevel_radius(&f, &[0.0], 10, &mut rng).unwrap(),
            0.0
        );
        let x = f.point_at_level(1.0).unwrap();
        let r = estimate_sublevel_radius(&f, &x, 10, &mut rng).unwrap();
        assert!((r - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn radius_needs_known_minimizer() {
        #[derive(Debug)]
        struct Opaque;
        impl Objective for Opaque {
            fn name(&self) -> &'static str {
                "opaque"
            }
            fn dim(&self) -> usize {
                1
            }
            fn smoothness(&self) -> f64 {
                1.0
            }
            fn strong_convexity(&self) -> f64 {
                0.0
            }
            fn f_star(&self) -> Option<f64> {
                None
            }
            fn minimizer(&self) -> Option<Vec<f64>> {
                None
            }
            fn is_convex(&self) -> bool {
                true
            }
            fn value(&self, theta: &[f64]) -> f64 {
                theta[0] * theta[0]
            }
            fn gradient_into(&self, theta: &[f64], out: &mut [f64]) {
                out[0] = 2.0 * theta[0];
            }
        }
        let mut rng = SeededRng::new(0);
        assert!(matches!(
            estimate_sublevel_radius(&Opaque, &[1.0], 10, &mut rng),
            Err(Error::UnsupportedObjective(..))
        ));
        let f = NesterovChain::new(3).unwrap();
        assert!(estimate_sublevel_radius(&f, &[1.0, 0.0, 0.0], 10, &mut rng).is_err());
    }

    #[test]
    fn canonical_alpha_simplifies_a() {
        let f = HuberChainConvex::new(2).unwrap();
        let x = f.point_at_level(1.0).unwrap();
        let mu_d = 1.0 / (4.0 * PI).sqrt();
        let c = convex_rate_constants(&f, &x, mu_d).unwrap();
        let r = 6f64.sqrt();
        assert!((c.radius - r).abs() < 1e-12);
        assert!((c.alpha - 2.0 * r * (4.0 * PI).sqrt()).abs() < 1e-10);
        let expected = (6.0 * c.initial_gap).max(2.0 * r * r / (mu_d * mu_d));
        assert!((c.a - expected).abs() < 1e-9 * expected);
        // 2 L R² / μ_D² = 2 · 6 · 4π.
        assert!((c.a - 48.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn small_alpha_rejected_and_degenerate_start() {
        let f = HuberChainConvex::new(2).unwrap();
        let x = f.point_at_level(1.0).unwrap();
        assert!(convex_rate_constants_with_alpha(&f, &x, 0.3, 1.0).is_err());
        assert!(matches!(
            convex_rate_constants(&f, &[0.0, 0.0], 0.3),
            Err(Error::DegenerateStart(_))
        ));
    }

    #[test]
    fn a_grows_with_dimension() {
        let mut last = 0.0;
        for d in [10, 20, 40, 80] {
            let f = HuberChainConvex::new(d).unwrap();
            let x = f.point_at_level(1.0).unwrap();
            let mu_d = 1.0 / (2.0 * PI * d as f64).sqrt();
            let a = convex_rate_constants(&f, &x, mu_d).unwrap().a;
            assert!(a > last);
            last = a;
        }
    }

    #[test]
    fn linear_bound_at_t1() {
        let b = linear_rate_bound(1.0, 0.5, 1.0, 1.0, 2.0, 1).unwrap();
        assert!((b - (1.0 + 1.0 / 8.0 / (4.0 * 0.75 - 1.0))).abs() < 1e-15);
        assert!(linear_rate_bound(1.0, 0.5, 1.0, 1.0, 1.1, 5).is_err());
    }
}
