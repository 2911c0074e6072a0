//! Empirical checks of descent inequalities, theoretical constants, and rate
//! estimation over recorded trajectories. Everything here is a pure function
//! of its inputs, apart from explicitly passed random streams.

mod constants;
mod inequalities;
mod rates;

pub use constants::{
    convex_rate_constants, convex_rate_constants_with_alpha, estimate_sublevel_radius,
    linear_rate_bound, ConvexRateConstants,
};
pub use inequalities::{
    check_expected_decrease, check_expected_decrease_with_mu, check_probe_step_decrease,
    ExpectedDecrease, ProbeStepCheck, MIN_DECREASE_SAMPLES,
};
pub use rates::{
    bounded_rate_check, expectation_curve, first_increase, geometric_envelope_check,
    geometric_rate_fit, last_iterate_decay, max_ratio_to_first, nonincreasing_within, rate_fit,
    BoundedRateCheck, CurveField, CurvePoint, EnvelopeCheck, GeometricFit, LastIterateDecay,
    RateFit, TailResult,
};
