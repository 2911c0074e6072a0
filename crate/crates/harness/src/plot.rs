//! Standalone SVG line plots of recorded trajectories.

use std::fmt::Write as _;
use std::str::FromStr;

use stp_core::trajectory::Trajectory;

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    GradVsIter,
    GradVsTime,
    RateCurve,
    FGapVsIter,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [
        PlotKind::GradVsIter,
        PlotKind::GradVsTime,
        PlotKind::RateCurve,
        PlotKind::FGapVsIter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::GradVsIter => "grad_vs_iter",
            PlotKind::GradVsTime => "grad_vs_time",
            PlotKind::RateCurve => "rate_curve",
            PlotKind::FGapVsIter => "fgap_vs_iter",
        }
    }

    fn axis_labels(self) -> (&'static str, &'static str) {
        match self {
            PlotKind::GradVsIter => ("iteration t", "log10 ‖∇f(θ_t)‖"),
            PlotKind::GradVsTime => ("time (s)", "log10 ‖∇f(θ_t)‖"),
            PlotKind::RateCurve => ("iteration T", "T^0.49 · min_{t≤T} ‖∇f(θ_t)‖"),
            PlotKind::FGapVsIter => ("iteration t", "log10 (f(θ_t) − f*)"),
        }
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown plot kind `{s}`"))
    }
}

/// One polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub points: Vec<(f64, f64)>,
}

/// Trajectories of one experiment, drawn in one color.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesGroup {
    pub label: String,
    pub series: Vec<Series>,
}

/// Converts a trajectory into plot coordinates, dropping points that have
/// no finite value (for instance a zero gap on a log axis).
pub fn series_for(kind: PlotKind, traj: &Trajectory, f_star: Option<f64>) -> Series {
    let points = traj
        .records
        .iter()
        .filter_map(|r| {
            let (x, y) = match kind {
                PlotKind::GradVsIter => (r.t as f64, r.grad_norm.log10()),
                PlotKind::GradVsTime => (r.elapsed_ns as f64 * 1e-9, r.grad_norm.log10()),
                PlotKind::RateCurve => (r.t as f64, (r.t as f64).powf(0.49) * r.min_grad_norm),
                PlotKind::FGapVsIter => (r.t as f64, (r.f_value - f_star?).log10()),
            };
            (x.is_finite() && y.is_finite()).then_some((x, y))
        })
        .collect();
    Series { points }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    let pad = if span > 0.0 {
        0.05 * span
    } else if lo != 0.0 {
        0.05 * lo.abs()
    } else {
        0.05
    };
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn render_svg(kind: PlotKind, groups: &[SeriesGroup]) -> Result<String, HarnessError> {
    let all = || {
        groups
            .iter()
            .flat_map(|g| &g.series)
            .flat_map(|s| &s.points)
    };
    if all().next().is_none() {
        return Err(HarnessError::EmptyPlot(format!(
            "no finite points for {}",
            kind.name()
        )));
    }
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in all() {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    let (x_lo, x_hi) = padded(x_lo, x_hi);
    let (y_lo, y_hi) = padded(y_lo, y_hi);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let fx = x_lo + (x_hi - x_lo) * i as f64 / 4.0;
        let fy = y_lo + (y_hi - y_lo) * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(fx),
            TOP + plot_h + 18.0,
            tick(fx)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            sy(fy) + 4.0,
            tick(fy)
        );
    }
    let (x_label, y_label) = kind.axis_labels();
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(y_label)
    );
    for (gi, group) in groups.iter().enumerate() {
        let color = PALETTE[gi % PALETTE.len()];
        for series in &group.series {
            if series.points.is_empty() {
                continue;
            }
            let coords: Vec<String> = series
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1" stroke-opacity="0.6" points="{}"/>"#,
                coords.join(" ")
            );
        }
        let ly = TOP + 16.0 + 16.0 * gi as f64;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{ly:.2}" fill="{color}" text-anchor="end">{}</text>"#,
            LEFT + plot_w - 8.0,
            escape(&group.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_is_flat_and_padded() {
        let groups = vec![SeriesGroup {
            label: "c".into(),
            series: vec![Series {
                points: vec![(1.0, 2.0), (2.0, 2.0), (3.0, 2.0)],
            }],
        }];
        let svg = render_svg(PlotKind::RateCurve, &groups).unwrap();
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let pts = line
            .split("points=\"")
            .nth(1)
            .unwrap()
            .trim_end_matches("\"/>");
        let ys: Vec<&str> = pts
            .split(' ')
            .map(|p| p.split(',').nth(1).unwrap())
            .collect();
        assert!(ys.iter().all(|y| *y == ys[0]));
        // ±5% of |y| around 2: [1.9, 2.1], so the line sits mid-frame.
        let mid = TOP + (HEIGHT - TOP - BOTTOM) / 2.0;
        assert!((ys[0].parse::<f64>().unwrap() - mid).abs() < 0.01);
    }

    #[test]
    fn empty_data_is_an_error() {
        let groups = vec![SeriesGroup {
            label: "x".into(),
            series: vec![Series { points: vec![] }],
        }];
        assert!(matches!(
            render_svg(PlotKind::GradVsIter, &groups),
            Err(HarnessError::EmptyPlot(_))
        ));
        assert!(render_svg(PlotKind::GradVsIter, &[]).is_err());
    }

    #[test]
    fn one_polyline_per_series_and_color_per_group() {
        let series = |k: f64| Series {
            points: (1..=10).map(|t| (t as f64, k / t as f64)).collect(),
        };
        let groups = vec![
            SeriesGroup {
                label: "stp".into(),
                series: vec![series(1.0), series(2.0)],
            },
            SeriesGroup {
                label: "gld".into(),
                series: vec![series(3.0)],
            },
        ];
        let svg = render_svg(PlotKind::GradVsIter, &groups).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches(PALETTE[0]).count(), 3);
        assert_eq!(svg.matches(PALETTE[1]).count(), 2);
        assert!(svg.contains("iteration t"));
    }

    #[test]
    fn kinds_parse() {
        for k in PlotKind::ALL {
            assert_eq!(k.name().parse::<PlotKind>().unwrap(), k);
        }
        assert!("histogram".parse::<PlotKind>().is_err());
    }
}
