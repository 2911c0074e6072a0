//! Test functions and the counting evaluation oracle.
//!
//! Solvers only ever see an [`Oracle`], which exposes function values and
//! counts calls. Gradients live on [`Objective`] itself and are used for
//! recording and diagnostics.

use std::fmt;

use crate::directions::l2_norm;
use crate::error::{Error, Result};
use crate::exact::{exact_probe_point, Dyadic, Scalar};

pub trait Objective: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    /// Lipschitz constant of the gradient.
    fn smoothness(&self) -> f64;
    /// Strong convexity modulus; 0 when the function is treated as merely smooth.
    fn strong_convexity(&self) -> f64;
    fn f_star(&self) -> Option<f64>;
    fn minimizer(&self) -> Option<Vec<f64>>;
    fn is_convex(&self) -> bool;

    /// `f(theta)` without validation or counting.
    fn value(&self, theta: &[f64]) -> f64;

    /// `∇f(theta)` written into `out`.
    fn gradient_into(&self, theta: &[f64], out: &mut [f64]);

    /// `f(base + offset · dir) - f(base)` rounded once, when the objective can
    /// evaluate it without cancellation.
    fn exact_difference(&self, _base: &[f64], _offset: f64, _dir: &[f64]) -> Option<f64> {
        None
    }

    /// Upper bound on `‖θ - θ*‖₂` over `{θ : f(θ) ≤ level}`.
    fn sublevel_radius(&self, _level: f64) -> Result<f64> {
        Err(Error::UnsupportedObjective(
            self.name().into(),
            "no analytic sublevel radius".into(),
        ))
    }

    /// A point with `f = level`.
    fn point_at_level(&self, _level: f64) -> Result<Vec<f64>> {
        Err(Error::UnsupportedObjective(
            self.name().into(),
            "no closed-form point at a prescribed level".into(),
        ))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidDimension(dim));
    }
    Ok(())
}

fn exact_gap<F>(base: &[f64], offset: f64, dir: &[f64], f: F) -> f64
where
    F: Fn(&[Dyadic]) -> Dyadic,
{
    let probe = exact_probe_point(base, offset, dir);
    let base: Vec<Dyadic> = base.iter().map(|&x| Dyadic::from_f64(x)).collect();
    (f(&probe) - f(&base)).to_f64()
}

/// `½θ₁² + ½Σ(θᵢ₊₁ − θᵢ)² + ½θ_d² − θ₁`, the worst-case smooth quadratic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NesterovChain {
    dim: usize,
}

impl NesterovChain {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim })
    }

    fn formula<S: Scalar>(theta: &[S]) -> S {
        let d = theta.len();
        let first = theta[0].clone();
        let last = theta[d - 1].clone();
        let mut acc = first.clone() * first.clone() + last.clone() * last;
        for pair in theta.windows(2) {
            let diff = pair[1].clone() - pair[0].clone();
            acc = acc + diff.clone() * diff;
        }
        acc.half() - first
    }
}

impl Objective for NesterovChain {
    fn name(&self) -> &'static str {
        "nesterov_chain"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn smoothness(&self) -> f64 {
        4.0
    }

    fn strong_convexity(&self) -> f64 {
        0.0
    }

    /// `-d / (2(d + 1))`, attained at `θᵢ = 1 - i/(d + 1)`.
    fn f_star(&self) -> Option<f64> {
        let d = self.dim as f64;
        Some(-d / (2.0 * (d + 1.0)))
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        let d = self.dim as f64;
        Some((1..=self.dim).map(|i| 1.0 - i as f64 / (d + 1.0)).collect())
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn value(&self, theta: &[f64]) -> f64 {
        Self::formula(theta)
    }

    fn gradient_into(&self, theta: &[f64], out: &mut [f64]) {
        let d = theta.len();
        for i in 0..d {
            let left = if i > 0 { theta[i - 1] } else { 0.0 };
            let right = if i + 1 < d { theta[i + 1] } else { 0.0 };
            out[i] = 2.0 * theta[i] - left - right;
        }
        out[0] -= 1.0;
    }

    fn exact_difference(&self, base: &[f64], offset: f64, dir: &[f64]) -> Option<f64> {
        Some(exact_gap(base, offset, dir, Self::formula::<Dyadic>))
    }
}

/// `½‖θ‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereQuadratic {
    dim: usize,
}

impl SphereQuadratic {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim })
    }

    fn formula<S: Scalar>(theta: &[S]) -> S {
        theta
            .iter()
            .fold(S::zero(), |acc, x| acc + x.clone() * x.clone())
            .half()
    }
}

impl Objective for SphereQuadratic {
    fn name(&self) -> &'static str {
        "sphere_quadratic"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn smoothness(&self) -> f64 {
        1.0
    }

    fn strong_convexity(&self) -> f64 {
        1.0
    }

    fn f_star(&self) -> Option<f64> {
        Some(0.0)
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.dim])
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn value(&self, theta: &[f64]) -> f64 {
        Self::formula(theta)
    }

    fn gradient_into(&self, theta: &[f64], out: &mut [f64]) {
        out.copy_from_slice(theta);
    }

    fn exact_difference(&self, base: &[f64], offset: f64, dir: &[f64]) -> Option<f64> {
        Some(exact_gap(base, offset, dir, Self::formula::<Dyadic>))
    }

    fn sublevel_radius(&self, level: f64) -> Result<f64> {
        Ok((2.0 * level.max(0.0)).sqrt())
    }

    fn point_at_level(&self, level: f64) -> Result<Vec<f64>> {
        if !(level >= 0.0 && level.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "level {level} is below the minimum 0"
            )));
        }
        let mut theta = vec![0.0; self.dim];
        theta[0] = (2.0 * level).sqrt();
        Ok(theta)
    }
}

/// `Σ (√(1 + θᵢ²) − 1)`: convex, 1-smooth, not strongly convex, bounded
/// sublevel sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HuberChainConvex {
    dim: usize,
}

impl HuberChainConvex {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim })
    }

    /// Largest `|x|` with `√(1 + x²) − 1 ≤ level`.
    fn coordinate_bound(level: f64) -> f64 {
        ((1.0 + level) * (1.0 + level) - 1.0).max(0.0).sqrt()
    }
}

impl Objective for HuberChainConvex {
    fn name(&self) -> &'static str {
        "huber_chain"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn smoothness(&self) -> f64 {
        1.0
    }

    fn strong_convexity(&self) -> f64 {
        0.0
    }

    fn f_star(&self) -> Option<f64> {
        Some(0.0)
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.dim])
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn value(&self, theta: &[f64]) -> f64 {
        // x² / (√(1 + x²) + 1) avoids cancellation near 0.
        theta
            .iter()
            .map(|&x| x * x / ((1.0 + x * x).sqrt() + 1.0))
            .sum()
    }

    fn gradient_into(&self, theta: &[f64], out: &mut [f64]) {
        for (g, &x) in out.iter_mut().zip(theta) {
            *g = x / (1.0 + x * x).sqrt();
        }
    }

    fn sublevel_radius(&self, level: f64) -> Result<f64> {
        Ok((self.dim as f64).sqrt() * Self::coordinate_bound(level))
    }

    fn point_at_level(&self, level: f64) -> Result<Vec<f64>> {
        if !(level >= 0.0 && level.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "level {level} is below the minimum 0"
            )));
        }
        let mut theta = vec![0.0; self.dim];
        theta[0] = Self::coordinate_bound(level);
        Ok(theta)
    }
}

fn validate_point(obj: &dyn Objective, theta: &[f64]) -> Result<()> {
    if theta.len() != obj.dim() {
        return Err(Error::InvalidInput(format!(
            "{} expects dimension {}, got {}",
            obj.name(),
            obj.dim(),
            theta.len()
        )));
    }
    if let Some(i) = theta.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "coordinate {i} is not finite ({})",
            theta[i]
        )));
    }
    Ok(())
}

/// Validated `f(theta)` outside any oracle; does not count.
pub fn evaluate(obj: &dyn Objective, theta: &[f64]) -> Result<f64> {
    validate_point(obj, theta)?;
    Ok(obj.value(theta))
}

/// Validated gradient; never counted as an oracle call.
pub fn gradient(obj: &dyn Objective, theta: &[f64]) -> Result<Vec<f64>> {
    validate_point(obj, theta)?;
    let mut out = vec![0.0; theta.len()];
    obj.gradient_into(theta, &mut out);
    Ok(out)
}

pub fn gradient_norm(obj: &dyn Objective, theta: &[f64]) -> Result<f64> {
    Ok(l2_norm(&gradient(obj, theta)?))
}

/// Zeroth-order access to an objective. Every query costs one evaluation.
#[derive(Debug)]
pub struct Oracle<'a> {
    objective: &'a dyn Objective,
    evals: u64,
    scratch: Vec<f64>,
}

impl<'a> Oracle<'a> {
    pub fn new(objective: &'a dyn Objective) -> Self {
        Self {
            objective,
            evals: 0,
            scratch: vec![0.0; objective.dim()],
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn smoothness(&self) -> f64 {
        self.objective.smoothness()
    }

    pub fn evals(&self) -> u64 {
        self.evals
    }

    pub fn evaluate(&mut self, theta: &[f64]) -> Result<f64> {
        validate_point(self.objective, theta)?;
        self.evals += 1;
        Ok(self.objective.value(theta))
    }

    /// `f(base + step · dir)`.
    pub fn evaluate_along(&mut self, base: &[f64], step: f64, dir: &[f64]) -> Result<f64> {
        let mut point = std::mem::take(&mut self.scratch);
        point.resize(base.len(), 0.0);
        for ((p, &b), &s) in point.iter_mut().zip(base).zip(dir) {
            *p = b + step * s;
        }
        let value = self.evaluate(&point);
        self.scratch = point;
        value
    }

    /// `f(base + offset · dir) - f(base)` given the cached `f(base)`.
    ///
    /// Costs one evaluation. Uses the objective's exact difference when
    /// available, since for tiny offsets the naive difference is dominated by
    /// rounding.
    pub fn probe_difference(
        &mut self,
        base: &[f64],
        f_base: f64,
        offset: f64,
        dir: &[f64],
    ) -> Result<f64> {
        validate_point(self.objective, base)?;
        if dir.len() != base.len() {
            return Err(Error::InvalidInput("direction dimension mismatch".into()));
        }
        match self.objective.exact_difference(base, offset, dir) {
            Some(diff) => {
                self.evals += 1;
                Ok(diff)
            }
            None => Ok(self.evaluate_along(base, offset, dir)? - f_base),
        }
    }
}
