//! Random search directions and their alignment constants.
//!
//! A direction law `D` is characterised here by two numbers: the second
//! moment `gamma_d = E‖s‖²` and an alignment constant `mu_d` with
//! `E|⟨v, s⟩| ≥ mu_d ‖v‖₂` for every `v`. Both built-in laws use the ℓ2 norm.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionConstants {
    pub mu_d: f64,
    pub gamma_d: f64,
    pub dim: usize,
}

/// A law over search directions in ℝᵈ.
///
/// Implementations are immutable descriptors; all randomness comes from the
/// caller's [`SeededRng`].
pub trait DirectionSampler: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Overwrite `out` with one draw. `out.len()` is the dimension.
    fn sample_into(&self, rng: &mut SeededRng, out: &mut [f64]);

    fn constants(&self, dim: usize) -> Result<DistributionConstants>;
}

/// Uniform on the unit sphere `{s : ‖s‖₂ = 1}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitSphere;

/// `N(0, I/d)`. Its norm exceeds 1 with small probability, so the bounded
/// norm requirement used by the descent analysis holds only approximately.
#[derive(Debug, Clone, Copy, Default)]
pub struct ScaledGaussian;

impl DirectionSampler for UnitSphere {
    fn name(&self) -> &'static str {
        "unit_sphere"
    }

    fn sample_into(&self, rng: &mut SeededRng, out: &mut [f64]) {
        loop {
            rng.fill_standard_normal(out);
            let norm = l2_norm(out);
            if norm > 0.0 {
                out.iter_mut().for_each(|x| *x /= norm);
                return;
            }
        }
    }

    fn constants(&self, dim: usize) -> Result<DistributionConstants> {
        check_dim(dim)?;
        // Asymptotic constant, used for every d.
        Ok(DistributionConstants {
            mu_d: 1.0 / (2.0 * PI * dim as f64).sqrt(),
            gamma_d: 1.0,
            dim,
        })
    }
}

impl DirectionSampler for ScaledGaussian {
    fn name(&self) -> &'static str {
        "scaled_gaussian"
    }

    fn sample_into(&self, rng: &mut SeededRng, out: &mut [f64]) {
        let scale = 1.0 / (out.len() as f64).sqrt();
        rng.fill_standard_normal(out);
        out.iter_mut().for_each(|x| *x *= scale);
    }

    fn constants(&self, dim: usize) -> Result<DistributionConstants> {
        check_dim(dim)?;
        Ok(DistributionConstants {
            mu_d: (2.0 / (PI * dim as f64)).sqrt(),
            gamma_d: 1.0,
            dim,
        })
    }
}

/// The built-in direction laws, addressable by their config names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionKind {
    UnitSphere,
    ScaledGaussian,
}

impl DirectionKind {
    pub const ALL: [DirectionKind; 2] = [DirectionKind::UnitSphere, DirectionKind::ScaledGaussian];

    pub fn name(self) -> &'static str {
        match self {
            DirectionKind::UnitSphere => "unit_sphere",
            DirectionKind::ScaledGaussian => "scaled_gaussian",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn sampler(self) -> Box<dyn DirectionSampler> {
        match self {
            DirectionKind::UnitSphere => Box::new(UnitSphere),
            DirectionKind::ScaledGaussian => Box::new(ScaledGaussian),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(())
}

pub fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sample_direction(kind: DirectionKind, dim: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
    check_dim(dim)?;
    let mut out = vec![0.0; dim];
    kind.sampler().sample_into(rng, &mut out);
    Ok(out)
}

pub fn analytic_constants(kind: DirectionKind, dim: usize) -> Result<DistributionConstants> {
    kind.sampler().constants(dim)
}

/// Sample mean of `|⟨probe, s⟩| / ‖probe‖₂` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of `E|⟨v, s⟩| / ‖v‖₂` for a fixed probe `v`.
pub fn monte_carlo_mu(
    sampler: &dyn DirectionSampler,
    probe: &[f64],
    n_samples: usize,
    rng: &mut SeededRng,
) -> Result<AlignmentEstimate> {
    check_dim(probe.len())?;
    if n_samples == 0 {
        return Err(Error::InvalidInput("n_samples must be at least 1".into()));
    }
    let norm = l2_norm(probe);
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidInput(
            "probe vector must be nonzero and finite".into(),
        ));
    }
    let mut s = vec![0.0; probe.len()];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n_samples {
        sampler.sample_into(rng, &mut s);
        let x = dot(probe, &s).abs() / norm;
        sum += x;
        sum_sq += x * x;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let stderr = if n_samples > 1 {
        ((sum_sq - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(AlignmentEstimate {
        mean,
        stderr,
        samples: n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_dimension_rejected() {
        let mut rng = SeededRng::new(1);
        for kind in DirectionKind::ALL {
            assert_eq!(
                sample_direction(kind, 0, &mut rng),
                Err(Error::InvalidDimension(0))
            );
            assert_eq!(analytic_constants(kind, 0), Err(Error::InvalidDimension(0)));
        }
    }

    #[test]
    fn unit_sphere_in_one_dimension_is_a_sign() {
        let mut rng = SeededRng::new(99);
        let mut seen = [false; 2];
        for _ in 0..200 {
            let s = sample_direction(DirectionKind::UnitSphere, 1, &mut rng).unwrap();
            assert!(s[0] == 1.0 || s[0] == -1.0, "{s:?}");
            seen[(s[0] > 0.0) as usize] = true;
        }
        assert!(seen[0] && seen[1]);
    }

    #[test]
    fn unit_sphere_normalized_in_500_dims() {
        let mut rng = SeededRng::new(7);
        let s = sample_direction(DirectionKind::UnitSphere, 500, &mut rng).unwrap();
        assert!((l2_norm(&s) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn analytic_constants_match_closed_forms() {
        for d in [1usize, 2, 10, 500] {
            let g = analytic_constants(DirectionKind::ScaledGaussian, d).unwrap();
            assert!((g.mu_d - 2f64.sqrt() / (d as f64 * PI).sqrt()).abs() < 1e-15);
            assert_eq!(g.gamma_d, 1.0);
            let u = analytic_constants(DirectionKind::UnitSphere, d).unwrap();
            assert!((u.mu_d - 1.0 / (2.0 * PI * d as f64).sqrt()).abs() < 1e-15);
            assert_eq!(u.gamma_d, 1.0);
            assert!(u.mu_d > 0.0 && u.mu_d < 1.0 && g.mu_d < 1.0);
        }
    }

    #[test]
    fn alignment_in_one_dimension_is_exactly_one() {
        let mut rng = SeededRng::new(5);
        let est = monte_carlo_mu(&UnitSphere, &[3.0], 10_000, &mut rng).unwrap();
        assert_eq!(est.mean, 1.0);
        assert!(est.mean > 1.0 / (2.0 * PI).sqrt());
    }

    #[test]
    fn zero_probe_rejected() {
        let mut rng = SeededRng::new(5);
        assert!(matches!(
            monte_carlo_mu(&UnitSphere, &[0.0, 0.0], 10, &mut rng),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn second_moment_is_one() {
        // E‖s‖² = 1 for both laws; 10⁵ draws, 3 standard errors.
        for kind in DirectionKind::ALL {
            let mut rng = SeededRng::new(11);
            let sampler = kind.sampler();
            let n = 100_000;
            let mut s = vec![0.0; 10];
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for _ in 0..n {
                sampler.sample_into(&mut rng, &mut s);
                let q = dot(&s, &s);
                sum += q;
                sum_sq += q * q;
            }
            let mean = sum / n as f64;
            let var = (sum_sq / n as f64 - mean * mean).max(0.0);
            let se = (var / n as f64).sqrt();
            assert!(
                (mean - 1.0).abs() <= 3.0 * se + 1e-12,
                "{kind:?}: {mean} ± {se}"
            );
        }
    }

    #[test]
    fn equal_seeds_give_identical_direction_sequences() {
        for kind in DirectionKind::ALL {
            let mut a = SeededRng::new(2024);
            let mut b = SeededRng::new(2024);
            for _ in 0..100 {
                let x = sample_direction(kind, 37, &mut a).unwrap();
                let y = sample_direction(kind, 37, &mut b).unwrap();
                assert!(x.iter().zip(&y).all(|(p, q)| p.to_bits() == q.to_bits()));
            }
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in DirectionKind::ALL {
            assert_eq!(DirectionKind::from_name(kind.name()), Some(kind));
            assert_eq!(kind.sampler().name(), kind.name());
        }
        assert_eq!(DirectionKind::from_name("coordinate"), None);
    }
}
