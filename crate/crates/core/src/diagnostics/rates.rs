use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

const MIN_FIT_POINTS: usize = 10;

/// Least-squares fit of `log(value)` against `log(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Fitted slope; `−r` for a series decaying like `t^−r`.
    pub exponent_estimate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

struct Line {
    slope: f64,
    intercept: f64,
    r_squared: f64,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> Line {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = if syy > 0.0 {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Line {
        slope,
        intercept,
        r_squared,
    }
}

/// Fits the last `window_fraction` of `series` on log-log axes. Points with
/// nonpositive `t` or value are dropped.
pub fn rate_fit(series: &[(f64, f64)], window_fraction: f64) -> Result<RateFit> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidParameters(format!(
            "window fraction must lie in (0, 1], got {window_fraction}"
        )));
    }
    let take = ((series.len() as f64) * window_fraction).ceil() as usize;
    let window = &series[series.len() - take.min(series.len())..];
    let usable: Vec<(f64, f64)> = window
        .iter()
        .copied()
        .filter(|&(t, v)| t > 0.0 && v > 0.0 && v.is_finite())
        .collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: usable.len(),
        });
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let line = least_squares(&xs, &ys);
    Ok(RateFit {
        exponent_estimate: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        window: (usable[0].0, usable[usable.len() - 1].0),
        points: usable.len(),
    })
}

/// Fit of `log(gap)` against `t`; `rho = exp(slope)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricFit {
    pub rho: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub points: usize,
}

/// Gaps at or below this value are treated as converged and excluded.
pub const GAP_FLOOR: f64 = 1e-12;

/// Linear fit of `log(gap)` over the leading stretch where `gap > 1e-12`.
pub fn geometric_rate_fit(series: &[(f64, f64)]) -> Result<GeometricFit> {
    let usable: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .take_while(|&(_, g)| g > GAP_FLOOR)
        .filter(|&(_, g)| g.is_finite())
        .collect();
    if usable.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: usable.len(),
        });
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let line = least_squares(&xs, &ys);
    Ok(GeometricFit {
        rho: line.slope.exp(),
        slope: line.slope,
        intercept: line.intercept,
        r_squared: line.r_squared,
        window: (xs[0], xs[xs.len() - 1]),
        points: usable.len(),
    })
}

/// Largest `values[i] / values[0]`.
pub fn max_ratio_to_first(values: &[f64]) -> f64 {
    match values.first() {
        Some(&first) => values
            .iter()
            .map(|&v| v / first)
            .fold(f64::NEG_INFINITY, f64::max),
        None => 1.0,
    }
}

/// No value exceeds the first one by more than the relative `slack`.
pub fn nonincreasing_within(values: &[f64], slack: f64) -> bool {
    match values.first() {
        Some(&first) => values.iter().all(|&v| v <= (1.0 + slack) * first),
        None => true,
    }
}

/// Index `t` of the first recorded increase of `f_value`, if any.
pub fn first_increase(traj: &Trajectory) -> Option<u64> {
    traj.records
        .windows(2)
        .find(|w| w[1].f_value > w[0].f_value)
        .map(|w| w[1].t)
}

fn check_common_grid(trajectories: &[Trajectory]) -> Result<Vec<u64>> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::InvalidInput("no trajectories".into()))?;
    let grid = first.times();
    for traj in &trajectories[1..] {
        if traj.records.len() != grid.len()
            || traj.records.iter().zip(&grid).any(|(r, &t)| r.t != t)
        {
            return Err(Error::InvalidInput(format!(
                "trajectory {} is recorded on a different grid",
                traj.run_index
            )));
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailResult {
    pub run_index: u64,
    pub nonincreasing: bool,
    /// Largest tail value relative to the first tail value.
    pub max_ratio: f64,
    pub final_value: f64,
}

/// `u(T) = T^exponent · min_{t ≤ T} ‖∇f(θᵗ)‖₂` examined on each trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedRateCheck {
    /// Largest `u` at the last grid point across trajectories.
    pub max_tail_value: f64,
    pub all_nonincreasing: bool,
    pub per_trajectory: Vec<TailResult>,
}

/// The tail is the last `tail_fraction` of the grid. It counts as
/// non-increasing when no value exceeds the first tail value by more than
/// `slack`.
pub fn bounded_rate_check(
    trajectories: &[Trajectory],
    exponent: f64,
    tail_fraction: f64,
    slack: f64,
) -> Result<BoundedRateCheck> {
    let grid = check_common_grid(trajectories)?;
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParameters(format!(
            "tail fraction must lie in (0, 1], got {tail_fraction}"
        )));
    }
    let take = ((grid.len() as f64 * tail_fraction).ceil() as usize).max(1);
    let start = grid.len() - take.min(grid.len());
    let mut per_trajectory = Vec::with_capacity(trajectories.len());
    for traj in trajectories {
        let tail: Vec<f64> = traj.records[start..]
            .iter()
            .map(|r| (r.t as f64).powf(exponent) * r.min_grad_norm)
            .collect();
        per_trajectory.push(TailResult {
            run_index: traj.run_index,
            nonincreasing: nonincreasing_within(&tail, slack),
            max_ratio: max_ratio_to_first(&tail),
            final_value: *tail.last().expect("nonempty tail"),
        });
    }
    Ok(BoundedRateCheck {
        max_tail_value: per_trajectory
            .iter()
            .map(|r| r.final_value)
            .fold(f64::NEG_INFINITY, f64::max),
        all_nonincreasing: per_trajectory.iter().all(|r| r.nonincreasing),
        per_trajectory,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveField {
    /// `f_value − f_star`.
    FGap {
        f_star: f64,
    },
    GradNorm,
    MinGradNorm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub t: u64,
    pub mean: f64,
    pub stderr: f64,
}

/// Pointwise mean and standard error across trajectories on a shared grid.
pub fn expectation_curve(
    trajectories: &[Trajectory],
    field: CurveField,
) -> Result<Vec<CurvePoint>> {
    if trajectories.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: trajectories.len(),
        });
    }
    let grid = check_common_grid(trajectories)?;
    let n = trajectories.len() as f64;
    let pick = |traj: &Trajectory, i: usize| {
        let r = &traj.records[i];
        match field {
            CurveField::FGap { f_star } => r.f_value - f_star,
            CurveField::GradNorm => r.grad_norm,
            CurveField::MinGradNorm => r.min_grad_norm,
        }
    };
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            // Deviations from the first trajectory keep identical inputs exact.
            let anchor = pick(&trajectories[0], i);
            let (mut sum, mut sum_sq) = (0.0, 0.0);
            for traj in trajectories {
                let d = pick(traj, i) - anchor;
                sum += d;
                sum_sq += d * d;
            }
            let var = ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0);
            CurvePoint {
                t,
                mean: anchor + sum / n,
                stderr: (var / n).sqrt(),
            }
        })
        .collect())
}

/// Medians of `grad_norm` over the first and last `fraction` of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LastIterateDecay {
    pub head_median: f64,
    pub tail_median: f64,
    /// `tail_median / head_median`.
    pub ratio: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn last_iterate_decay(traj: &Trajectory, fraction: f64) -> Result<LastIterateDecay> {
    if !(fraction > 0.0 && fraction <= 0.5) {
        return Err(Error::InvalidParameters(format!(
            "fraction must lie in (0, 0.5], got {fraction}"
        )));
    }
    let n = traj.records.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let k = ((n as f64 * fraction).ceil() as usize).max(1);
    let head = median(traj.records[..k].iter().map(|r| r.grad_norm).collect());
    let tail = median(traj.records[n - k..].iter().map(|r| r.grad_norm).collect());
    Ok(LastIterateDecay {
        head_median: head,
        tail_median: tail,
        ratio: tail / head,
    })
}

/// Per-trajectory check that `rate^(−t) · (f(θᵗ) − f*)` stays bounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeCheck {
    pub pass: bool,
    pub max_ratio: f64,
    pub points_checked: usize,
}

/// Examines the last `tail_fraction` of the records, cut at the first gap
/// at or below `1e-12`; passes when no scaled gap exceeds the first one by
/// more than `slack`.
pub fn geometric_envelope_check(
    traj: &Trajectory,
    f_star: f64,
    rate: f64,
    tail_fraction: f64,
    slack: f64,
) -> Result<EnvelopeCheck> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::InvalidParameters(format!(
            "rate must lie in (0, 1), got {rate}"
        )));
    }
    let n = traj.records.len();
    let take = ((n as f64 * tail_fraction).ceil() as usize).clamp(1, n.max(1));
    let scaled: Vec<f64> = traj.records[n.saturating_sub(take)..]
        .iter()
        .map(|r| (r.t, r.f_value - f_star))
        .take_while(|&(_, gap)| gap > GAP_FLOOR)
        .map(|(t, gap)| gap * (-(t as f64) * rate.ln()).exp())
        .collect();
    Ok(EnvelopeCheck {
        pass: nonincreasing_within(&scaled, slack),
        max_ratio: max_ratio_to_first(&scaled),
        points_checked: scaled.len(),
    })
}
