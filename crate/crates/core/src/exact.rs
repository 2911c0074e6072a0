//! Exact dyadic arithmetic for cancellation-free function differences.
//!
//! Every finite `f64` is `m · 2^e` for integers `m`, `e`, and that set is
//! closed under `+`, `-`, `*`. Objectives written over [`Scalar`] can
//! therefore be evaluated exactly at a point `base + offset · dir` built from
//! `f64` inputs, and `f(probe) - f(base)` rounded once at the end.

use std::ops::{Add, Mul, Sub};

use num_bigint::{BigInt, Sign};
use num_traits::{ToPrimitive, Zero};

/// Arithmetic needed to evaluate polynomial objectives.
pub trait Scalar: Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn from_f64(x: f64) -> Self;
    fn zero() -> Self;
    /// `self / 2`, exact for dyadic values.
    fn half(self) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn zero() -> Self {
        0.0
    }

    #[inline]
    fn half(self) -> Self {
        0.5 * self
    }
}

/// `mantissa · 2^exponent`, exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Dyadic {
    mantissa: BigInt,
    exponent: i64,
}

impl Dyadic {
    pub fn new(mantissa: BigInt, exponent: i64) -> Self {
        Self { mantissa, exponent }
    }

    /// Exact conversion. Panics on non-finite input.
    pub fn from_f64(x: f64) -> Self {
        assert!(x.is_finite(), "dyadic conversion of non-finite value {x}");
        if x == 0.0 {
            return Self::zero_value();
        }
        let bits = x.to_bits();
        let negative = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let fraction = bits & ((1u64 << 52) - 1);
        let (mut m, e) = if biased == 0 {
            (fraction, -1074)
        } else {
            (fraction | (1u64 << 52), biased - 1075)
        };
        let tz = m.trailing_zeros();
        m >>= tz;
        let mantissa = BigInt::from(m);
        Self {
            mantissa: if negative { -mantissa } else { mantissa },
            exponent: e + tz as i64,
        }
    }

    fn zero_value() -> Self {
        Self {
            mantissa: BigInt::zero(),
            exponent: 0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    /// Nearest `f64` (round-half-even on the leading 64 bits with a sticky bit).
    pub fn to_f64(&self) -> f64 {
        if self.mantissa.is_zero() {
            return 0.0;
        }
        let negative = self.mantissa.sign() == Sign::Minus;
        let magnitude = self.mantissa.magnitude();
        let bits = magnitude.bits();
        let shift = bits.saturating_sub(64);
        let mut top = (magnitude >> shift)
            .to_u64()
            .expect("leading bits fit in u64");
        if shift > 0 && magnitude.trailing_zeros().unwrap_or(0) < shift {
            top |= 1;
        }
        let value = scale_by_power_of_two(top as f64, self.exponent + shift as i64);
        if negative {
            -value
        } else {
            value
        }
    }
}

fn scale_by_power_of_two(mut x: f64, mut e: i64) -> f64 {
    const STEP: i64 = 600;
    let up = 2f64.powi(STEP as i32);
    let down = 2f64.powi(-STEP as i32);
    while e > STEP {
        x *= up;
        e -= STEP;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -STEP {
        x *= down;
        e += STEP;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

impl Add for Dyadic {
    type Output = Dyadic;

    fn add(self, rhs: Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let exponent = self.exponent.min(rhs.exponent);
        let a = self.mantissa << (self.exponent - exponent) as usize;
        let b = rhs.mantissa << (rhs.exponent - exponent) as usize;
        Dyadic {
            mantissa: a + b,
            exponent,
        }
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;

    fn sub(self, rhs: Dyadic) -> Dyadic {
        self + Dyadic {
            mantissa: -rhs.mantissa,
            exponent: rhs.exponent,
        }
    }
}

impl Mul for Dyadic {
    type Output = Dyadic;

    fn mul(self, rhs: Dyadic) -> Dyadic {
        if self.is_zero() || rhs.is_zero() {
            return Dyadic::zero_value();
        }
        Dyadic {
            mantissa: self.mantissa * rhs.mantissa,
            exponent: self.exponent + rhs.exponent,
        }
    }
}

impl Scalar for Dyadic {
    fn from_f64(x: f64) -> Self {
        Dyadic::from_f64(x)
    }

    fn zero() -> Self {
        Dyadic::zero_value()
    }

    fn half(self) -> Self {
        Dyadic {
            mantissa: self.mantissa,
            exponent: self.exponent - 1,
        }
    }
}

/// Exact `base + offset · dir` for each coordinate.
pub fn exact_probe_point(base: &[f64], offset: f64, dir: &[f64]) -> Vec<Dyadic> {
    let offset = Dyadic::from_f64(offset);
    base.iter()
        .zip(dir)
        .map(|(&b, &s)| Dyadic::from_f64(b) + offset.clone() * Dyadic::from_f64(s))
        .collect()
}
