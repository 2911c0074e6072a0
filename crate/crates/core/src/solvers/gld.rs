use std::sync::Arc;

use crate::directions::{l2_norm, DirectionSampler};
use crate::error::{Error, Result};
use crate::objectives::Oracle;

use super::{Solver, SolverState, StepOutcome};

/// Gradientless descent: try `θ + r_k g_k/‖g_k‖` for the radii
/// `r_k = 2^-k r_max`, `k = 0..=K`, `K = ⌈log₂(r_max/r_min)⌉`, with an
/// independent direction per radius, and keep the best point including `θ`.
#[derive(Debug, Clone)]
pub struct Gld {
    sampler: Arc<dyn DirectionSampler>,
    r_min: f64,
    r_max: f64,
    radii: Vec<f64>,
}

impl Gld {
    pub fn new(sampler: Arc<dyn DirectionSampler>, r_min: f64, r_max: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_min.is_finite() && r_max.is_finite() && r_min < r_max) {
            return Err(Error::InvalidParameters(format!(
                "need 0 < r_min < r_max, got r_min = {r_min}, r_max = {r_max}"
            )));
        }
        let levels = (r_max / r_min).log2().ceil() as i32;
        let radii = (0..=levels).map(|k| r_max * 2f64.powi(-k)).collect();
        Ok(Self {
            sampler,
            r_min,
            r_max,
            radii,
        })
    }

    /// `K`; each step evaluates `K + 1` candidates.
    pub fn levels(&self) -> usize {
        self.radii.len() - 1
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }
}

impl Solver for Gld {
    fn name(&self) -> &'static str {
        "gld"
    }

    fn evals_per_step(&self) -> u64 {
        self.radii.len() as u64
    }

    fn is_monotone(&self) -> bool {
        true
    }

    fn step(&self, state: &mut SolverState, oracle: &mut Oracle<'_>) -> Result<StepOutcome> {
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut best_f = state.f_current;
        for &r in &self.radii {
            loop {
                self.sampler
                    .sample_into(&mut state.rng, &mut state.direction);
                if l2_norm(&state.direction) > 0.0 {
                    break;
                }
            }
            let scale = r / l2_norm(&state.direction);
            let f = oracle.evaluate_along(&state.theta, scale, &state.direction)?;
            if f < best_f {
                best_f = f;
                let move_ = state.direction.iter().map(|s| scale * s).collect();
                best = Some((f, move_));
            }
        }
        if let Some((f, delta)) = best {
            for (x, d) in state.theta.iter_mut().zip(&delta) {
                *x += d;
            }
            state.f_current = f;
        }
        state.t += 1;
        Ok(StepOutcome::Advanced { alpha: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directions::UnitSphere;
    use crate::objectives::{NesterovChain, SphereQuadratic};
    use crate::rng::SeededRng;

    #[test]
    fn radii_for_the_benchmark_setting() {
        let gld = Gld::new(Arc::new(UnitSphere), 1e-5, 1e-4).unwrap();
        assert_eq!(gld.levels(), 4);
        let expected = [1e-4, 5e-5, 2.5e-5, 1.25e-5, 6.25e-6];
        for (r, e) in gld.radii().iter().zip(expected) {
            assert!((r - e).abs() <= 1e-20, "{r} vs {e}");
        }
        assert_eq!(gld.evals_per_step(), 5);
    }

    #[test]
    fn rejects_bad_radii() {
        assert!(Gld::new(Arc::new(UnitSphere), 1e-4, 1e-4).is_err());
        assert!(Gld::new(Arc::new(UnitSphere), 1e-3, 1e-4).is_err());
        assert!(Gld::new(Arc::new(UnitSphere), 0.0, 1e-4).is_err());
    }

    #[test]
    fn one_dimensional_sign_outcomes() {
        let f = SphereQuadratic::new(1).unwrap();
        let gld = Gld::new(Arc::new(UnitSphere), 0.25, 0.5).unwrap();
        assert_eq!(gld.levels(), 1);
        let mut improved = 0;
        for seed in 0..64 {
            let mut oracle = Oracle::new(&f);
            let mut state = SolverState::new(vec![1.0], &mut oracle, SeededRng::new(seed)).unwrap();
            gld.step(&mut state, &mut oracle).unwrap();
            assert_eq!(oracle.evals(), 3);
            let x = state.theta[0];
            assert!([1.0, 0.5, 0.75].contains(&x), "{x}");
            if x < 1.0 {
                improved += 1;
                assert!(state.f_current < 0.5);
            }
        }
        // Staying put requires both signs positive: probability 1/4.
        assert!(improved > 32);
    }

    #[test]
    fn monotone_on_nesterov() {
        let f = NesterovChain::new(50).unwrap();
        let gld = Gld::new(Arc::new(UnitSphere), 1e-5, 1e-4).unwrap();
        let mut oracle = Oracle::new(&f);
        let mut state = SolverState::new(vec![0.0; 50], &mut oracle, SeededRng::new(9)).unwrap();
        let mut last = state.f_current;
        for _ in 0..200 {
            gld.step(&mut state, &mut oracle).unwrap();
            assert!(state.f_current <= last);
            last = state.f_current;
        }
        assert_eq!(oracle.evals(), 1 + 5 * 200);
    }
}
