//! Step-size rules.
//!
//! Three regimes are provided: a polynomial decay `alpha / t^p`, the harmonic
//! rule `alpha / t`, and a directional rule that sets the step from a
//! finite-difference probe along the current search direction with a
//! geometrically shrinking offset `h^-t`.

use std::fmt;

use crate::error::{Error, Result};

/// Offsets below this value are treated as exhausted.
pub const DEFAULT_OFFSET_FLOOR: f64 = 1e-300;

/// Closed-form decay `alpha_t = scale / t^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decay {
    pub scale: f64,
    pub exponent: f64,
}

/// Result of probing the objective at `theta + offset · s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionalProbe {
    pub offset: f64,
    /// `f(theta + offset · s) - f(theta)`.
    pub difference: f64,
}

impl DirectionalProbe {
    pub fn from_values(offset: f64, f_probe: f64, f_current: f64) -> Self {
        Self {
            offset,
            difference: f_probe - f_current,
        }
    }
}

pub trait StepSchedule: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    /// Offset at which iteration `t` must probe the objective before the step
    /// size is known; `None` for schedules that need no probe.
    fn probe_offset(&self, t: u64) -> Result<Option<f64>>;

    fn step_size(&self, t: u64, probe: Option<&DirectionalProbe>) -> Result<f64>;

    /// Whether `Σ α_t² < ∞` and `Σ α_t = ∞` hold for every trajectory.
    fn satisfies_robbins_monro(&self) -> bool;

    fn decay(&self) -> Option<Decay> {
        None
    }

    /// Base `h` of the probe offset `h^-t`, for directional rules.
    fn probe_base(&self) -> Option<f64> {
        None
    }

    /// Smoothness constant the rule was built for, if it uses one.
    fn smoothness(&self) -> Option<f64> {
        None
    }
}

fn check_t(t: u64) -> Result<()> {
    if t == 0 {
        return Err(Error::ContractViolation(
            "iteration index starts at 1".into(),
        ));
    }
    Ok(())
}

fn reject_probe(name: &str, probe: Option<&DirectionalProbe>) -> Result<()> {
    if probe.is_some() {
        return Err(Error::ContractViolation(format!(
            "{name} schedule does not take a probe"
        )));
    }
    Ok(())
}

/// `alpha / t^exponent` with `exponent ∈ (0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Power {
    alpha: f64,
    exponent: f64,
}

impl Power {
    pub fn new(alpha: f64, exponent: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::InvalidParameters(format!(
                "exponent must lie in (0, 1], got {exponent}"
            )));
        }
        Ok(Self { alpha, exponent })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }
}

impl StepSchedule for Power {
    fn name(&self) -> &'static str {
        "power"
    }

    fn probe_offset(&self, _t: u64) -> Result<Option<f64>> {
        Ok(None)
    }

    fn step_size(&self, t: u64, probe: Option<&DirectionalProbe>) -> Result<f64> {
        check_t(t)?;
        reject_probe(self.name(), probe)?;
        Ok(self.alpha / (t as f64).powf(self.exponent))
    }

    fn satisfies_robbins_monro(&self) -> bool {
        self.exponent > 0.5 && self.exponent <= 1.0
    }

    fn decay(&self) -> Option<Decay> {
        Some(Decay {
            scale: self.alpha,
            exponent: self.exponent,
        })
    }
}

/// `alpha / t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    alpha: f64,
}

impl Harmonic {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl StepSchedule for Harmonic {
    fn name(&self) -> &'static str {
        "harmonic"
    }

    fn probe_offset(&self, _t: u64) -> Result<Option<f64>> {
        Ok(None)
    }

    fn step_size(&self, t: u64, probe: Option<&DirectionalProbe>) -> Result<f64> {
        check_t(t)?;
        reject_probe(self.name(), probe)?;
        Ok(self.alpha / t as f64)
    }

    fn satisfies_robbins_monro(&self) -> bool {
        true
    }

    fn decay(&self) -> Option<Decay> {
        Some(Decay {
            scale: self.alpha,
            exponent: 1.0,
        })
    }
}

/// `|f(θ + h^-t s) - f(θ)| / (L h^-t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Directional {
    smoothness: f64,
    base: f64,
    floor: f64,
}

impl Directional {
    pub fn new(smoothness: f64, base: f64) -> Result<Self> {
        Self::with_floor(smoothness, base, DEFAULT_OFFSET_FLOOR)
    }

    pub fn with_floor(smoothness: f64, base: f64, floor: f64) -> Result<Self> {
        if !(smoothness > 0.0 && smoothness.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "smoothness constant must be positive, got {smoothness}"
            )));
        }
        if !(base > 1.0 && base.is_finite()) {
            return Err(Error::InvalidParameters(format!(
                "h must exceed 1, got {base}"
            )));
        }
        if !(floor > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "offset floor must be positive, got {floor}"
            )));
        }
        Ok(Self {
            smoothness,
            base,
            floor,
        })
    }

    pub fn offset(&self, t: u64) -> f64 {
        self.base.powf(-(t as f64))
    }
}

impl StepSchedule for Directional {
    fn name(&self) -> &'static str {
        "directional"
    }

    fn probe_offset(&self, t: u64) -> Result<Option<f64>> {
        check_t(t)?;
        let offset = self.offset(t);
        if offset < self.floor {
            return Err(Error::ScheduleExhausted {
                t,
                offset,
                floor: self.floor,
            });
        }
        Ok(Some(offset))
    }

    fn step_size(&self, t: u64, probe: Option<&DirectionalProbe>) -> Result<f64> {
        let expected = self
            .probe_offset(t)?
            .expect("directional schedules always probe");
        let probe = probe.ok_or_else(|| {
            Error::ContractViolation("directional schedule requires a probe".into())
        })?;
        if (probe.offset - expected).abs() > 4.0 * f64::EPSILON * expected {
            return Err(Error::ContractViolation(format!(
                "probe offset {:e} does not match h^-t = {:e}",
                probe.offset, expected
            )));
        }
        if !probe.difference.is_finite() {
            return Err(Error::InvalidInput("probe difference is not finite".into()));
        }
        Ok(probe.difference.abs() / (self.smoothness * probe.offset))
    }

    fn satisfies_robbins_monro(&self) -> bool {
        false
    }

    fn probe_base(&self) -> Option<f64> {
        Some(self.base)
    }

    fn smoothness(&self) -> Option<f64> {
        Some(self.smoothness)
    }
}

/// Probe base `h = 2 / sqrt(1 - mu_d² mu / L)` that yields a linear rate on
/// `mu`-strongly convex, `L`-smooth objectives.
pub fn linear_rate_probe_base(mu_d: f64, mu: f64, smoothness: f64) -> Result<f64> {
    if !(mu > 0.0 && mu <= smoothness) {
        return Err(Error::InvalidParameters(format!(
            "need 0 < mu <= L, got mu = {mu}, L = {smoothness}"
        )));
    }
    if !(mu_d > 0.0 && mu_d < 1.0) {
        return Err(Error::InvalidParameters(format!(
            "need 0 < mu_D < 1, got {mu_d}"
        )));
    }
    let contraction = mu_d * mu_d * mu / smoothness;
    if contraction >= 1.0 {
        return Err(Error::InvalidParameters(format!(
            "mu_D² mu / L = {contraction} must be below 1"
        )));
    }
    Ok(2.0 / (1.0 - contraction).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn power_anchor() {
        let s = Power::new(4.0, 0.51).unwrap();
        assert_eq!(s.step_size(1, None).unwrap(), 4.0);
    }

    #[test]
    fn harmonic_value() {
        assert_eq!(Harmonic::new(2.0).unwrap().step_size(4, None).unwrap(), 0.5);
    }

    #[test]
    fn directional_formula() {
        let s = Directional::new(1.0, 2.0).unwrap();
        let probe = DirectionalProbe::from_values(0.5, 0.75, 0.5);
        assert_eq!(s.step_size(1, Some(&probe)).unwrap(), 0.5);
    }

    #[test]
    fn directional_without_probe_is_a_contract_violation() {
        let s = Directional::new(1.0, 2.0).unwrap();
        assert!(matches!(
            s.step_size(1, None),
            Err(Error::ContractViolation(_))
        ));
        let wrong = DirectionalProbe::from_values(0.3, 1.0, 0.0);
        assert!(matches!(
            s.step_size(1, Some(&wrong)),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn flat_probe_gives_zero_step() {
        let s = Directional::new(4.0, 3.0).unwrap();
        let probe = DirectionalProbe::from_values(s.offset(2), 1.25, 1.25);
        assert_eq!(s.step_size(2, Some(&probe)).unwrap(), 0.0);
    }

    #[test]
    fn robbins_monro_classification() {
        assert!(Power::new(4.0, 0.51).unwrap().satisfies_robbins_monro());
        assert!(!Power::new(1.0, 0.5).unwrap().satisfies_robbins_monro());
        assert!(Power::new(1.0, 1.0).unwrap().satisfies_robbins_monro());
        assert!(Harmonic::new(3.0).unwrap().satisfies_robbins_monro());
        assert!(!Directional::new(1.0, 2.0)
            .unwrap()
            .satisfies_robbins_monro());
    }

    #[test]
    fn invalid_parameters() {
        assert!(Power::new(0.0, 0.5).is_err());
        assert!(Power::new(1.0, 0.0).is_err());
        assert!(Power::new(1.0, 1.5).is_err());
        assert!(Harmonic::new(-1.0).is_err());
        assert!(Directional::new(1.0, 1.0).is_err());
        assert!(Directional::new(0.0, 2.0).is_err());
    }

    #[test]
    fn probe_base_values() {
        let h = linear_rate_probe_base(1e-9, 1.0, 1.0).unwrap();
        assert!((h - 2.0).abs() < 1e-15);
        let h = linear_rate_probe_base(0.5, 1.0, 1.0).unwrap();
        assert!((h - 2.0 / 0.75f64.sqrt()).abs() < 1e-12);
        assert!((h - 2.3094).abs() < 1e-4);
        let mu_d = 1.0 / (2.0 * PI * 500.0).sqrt();
        let h = linear_rate_probe_base(mu_d, 1.0, 1.0).unwrap();
        assert!((h - 2.0 / (1.0 - 1.0 / (1000.0 * PI)).sqrt()).abs() < 1e-12);
        assert!((h - 2.0003).abs() < 1e-4);
        // Admissible interval (1/sqrt(1 - c), ∞).
        assert!(h > 1.0 / (1.0 - mu_d * mu_d).sqrt());
    }

    #[test]
    fn probe_base_rejects_bad_parameters() {
        assert!(linear_rate_probe_base(0.5, 2.0, 1.0).is_err());
        assert!(linear_rate_probe_base(1.0, 1.0, 1.0).is_err());
        assert!(linear_rate_probe_base(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn offset_floor_fires_once() {
        let s = Directional::new(1.0, 2.0).unwrap();
        let mut first_exhausted = None;
        for t in 1..5000u64 {
            match s.probe_offset(t) {
                Ok(Some(_)) => assert!(
                    first_exhausted.is_none(),
                    "offset recovered after exhaustion"
                ),
                Err(Error::ScheduleExhausted { .. }) => {
                    first_exhausted.get_or_insert(t);
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        // 2^-t < 1e-300 first at t = 997.
        assert_eq!(first_exhausted, Some(997));
    }

    proptest! {
        #[test]
        fn closed_form_schedules_strictly_decrease(
            alpha in 1e-3f64..1e3, p in 0.01f64..1.0, t in 1u64..1_000_000
        ) {
            let power = Power::new(alpha, p).unwrap();
            let a = power.step_size(t, None).unwrap();
            let b = power.step_size(t + 1, None).unwrap();
            prop_assert!(a > 0.0 && b < a);
            let harmonic = Harmonic::new(alpha).unwrap();
            prop_assert!(harmonic.step_size(t + 1, None).unwrap() < harmonic.step_size(t, None).unwrap());
        }

        #[test]
        fn directional_step_is_nonnegative_and_finite(
            f_probe in -1e12f64..1e12, f_cur in -1e12f64..1e12,
            h in 1.01f64..10.0, t in 1u64..50, l in 1e-3f64..1e3,
        ) {
            let s = Directional::new(l, h).unwrap();
            let probe = DirectionalProbe::from_values(s.offset(t), f_probe, f_cur);
            let a = s.step_size(t, Some(&probe)).unwrap();
            prop_assert!(a >= 0.0 && a.is_finite());
        }

        #[test]
        fn directional_offsets_strictly_decrease(h in 1.01f64..10.0, t in 1u64..100) {
            let s = Directional::new(1.0, h).unwrap();
            prop_assert!(s.offset(t + 1) < s.offset(t));
        }
    }
}
