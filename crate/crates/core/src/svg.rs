//! Deterministic SVG figures of a series and its fitted hyperbolas, either
//! as reciprocals (fits are straight lines) or as raw values (fits are
//! hyperbolic curves).
//!
//! Output depends only on the [`PlotSpec`]: coordinates are written with
//! six significant digits and a fixed `.` decimal separator.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::HyperbolicFit;
use crate::ingest::{window, TimeSeries, YearRange};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 770.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 430.0;

/// Largest spacing between consecutive samples of a fitted curve, in years.
pub const SAMPLE_STEP: i64 = 2;

const PALETTE: [&str; 6] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    Reciprocal,
    Direct,
}

impl std::str::FromStr for Space {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reciprocal" => Ok(Space::Reciprocal),
            "direct" => Ok(Space::Direct),
            other => Err(Error::InvalidArgument(format!(
                "unknown space {other:?} (expected reciprocal or direct)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Overlay {
    pub label: String,
    pub fit: HyperbolicFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub space: Space,
    pub series: TimeSeries,
    pub overlays: Vec<Overlay>,
    pub year_range: YearRange,
    /// Vertical markers, e.g. `(1820, "1820")`.
    pub annotations: Vec<(i64, String)>,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Logarithmic value axis; only meaningful in direct space.
    pub log_values: bool,
}

impl PlotSpec {
    /// Spec with default titles and axis labels derived from the series.
    pub fn new(space: Space, series: TimeSeries, year_range: YearRange) -> Self {
        let unit = if series.unit.is_empty() {
            String::new()
        } else {
            format!(" ({})", series.unit)
        };
        let (title, y_label) = match space {
            Space::Reciprocal => (
                format!("Reciprocal values: {}", series.name),
                format!("1 / value{unit}"),
            ),
            Space::Direct => (format!("Values: {}", series.name), format!("value{unit}")),
        };
        Self {
            space,
            series,
            overlays: Vec::new(),
            year_range,
            annotations: Vec::new(),
            title,
            x_label: "year".into(),
            y_label,
            log_values: false,
        }
    }
}

/// Formats with six significant digits and no superfluous zeros.
pub fn fmt_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return "0".into();
    }
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    let s = format!("{rounded}");
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

/// Axis ticks on a 1-2-5 grid.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if span <= 0.0 || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn unit(&self, v: f64) -> f64 {
        if self.log {
            (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }
}

struct Frame {
    x: Axis,
    y: Axis,
}

impl Frame {
    fn px(&self, year: f64) -> f64 {
        LEFT + self.x.unit(year) * (RIGHT - LEFT)
    }

    fn py(&self, v: f64) -> f64 {
        BOTTOM - self.y.unit(v) * (BOTTOM - TOP)
    }
}

/// Sample years across `span`, at most `SAMPLE_STEP` apart, ending exactly
/// at `span.end`.
fn sample_years(span: YearRange) -> Vec<f64> {
    let mut out: Vec<f64> = (span.start..=span.end)
        .step_by(SAMPLE_STEP as usize)
        .map(|t| t as f64)
        .collect();
    if out.last() != Some(&(span.end as f64)) {
        out.push(span.end as f64);
    }
    out
}

fn overlay_samples(space: Space, fit: &HyperbolicFit, span: YearRange) -> Vec<(f64, f64)> {
    let years = sample_years(span);
    match space {
        Space::Reciprocal => years.iter().map(|&t| (t, fit.line.line_at(t))).collect(),
        Space::Direct => years
            .iter()
            .enumerate()
            .take_while(|&(i, &t)| {
                // Stop one sample before the singularity.
                let next = years.get(i + 1).copied().unwrap_or(t + SAMPLE_STEP as f64);
                fit.singularity_year.is_none_or(|s| next < s)
            })
            .filter_map(|(_, &t)| fit.predict(t).ok().map(|v| (t, v)))
            .collect(),
    }
}

pub fn render_plot(spec: &PlotSpec) -> Result<String> {
    let data = window(&spec.series, spec.year_range);
    if data.is_empty() {
        return Err(Error::NothingToPlot(format!(
            "no observations of {:?} in {}",
            spec.series.name, spec.year_range
        )));
    }
    let log = spec.log_values && spec.space == Space::Direct;

    let mut curves = Vec::with_capacity(spec.overlays.len());
    for overlay in &spec.overlays {
        let span = overlay.fit.line.range.intersection(&spec.year_range).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "overlay {:?} covers {} which does not intersect {}",
                overlay.label, overlay.fit.line.range, spec.year_range
            ))
        })?;
        curves.push(overlay_samples(spec.space, &overlay.fit, span));
    }

    let values: Vec<f64> = data
        .observations()
        .iter()
        .map(|o| match spec.space {
            Space::Reciprocal => 1.0 / o.value,
            Space::Direct => o.value,
        })
        .collect();
    let data_max = values.iter().copied().fold(f64::MIN, f64::max);
    let data_min = values.iter().copied().fold(f64::MAX, f64::min);

    let y = match spec.space {
        Space::Reciprocal => {
            // Lines are bounded by their fit range, so include them fully.
            let line_vals = curves.iter().flatten().map(|&(_, v)| v);
            let hi = line_vals.clone().fold(data_max, f64::max);
            let lo = line_vals.fold(0f64, f64::min);
            Axis { lo, hi: hi * 1.05 - lo * 0.05, log: false }
        }
        Space::Direct if log => Axis {
            lo: 10f64.powf(data_min.log10().floor()),
            hi: 10f64.powf((data_max.log10() + 1e-9).ceil()),
            log: true,
        },
        // Curves may run off towards a singularity; they are clipped.
        Space::Direct => Axis { lo: 0.0, hi: data_max * 1.1, log: false },
    };
    let (x_lo, x_hi) = if spec.year_range.start == spec.year_range.end {
        (spec.year_range.start as f64 - 1.0, spec.year_range.end as f64 + 1.0)
    } else {
        (spec.year_range.start as f64, spec.year_range.end as f64)
    };
    let frame = Frame {
        x: Axis { lo: x_lo, hi: x_hi, log: false },
        y,
    };

    let mut svg = String::new();
    let w = &mut svg;
    let _ = writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif">"#,
        WIDTH, HEIGHT, WIDTH, HEIGHT
    );
    let _ = writeln!(w, "<title>{}</title>", escape(&spec.title));
    let _ = writeln!(
        w,
        "<metadata>space={} x-range={} {} y-range={} {} y-scale={} plot-area={} {} {} {}</metadata>",
        match spec.space {
            Space::Reciprocal => "reciprocal",
            Space::Direct => "direct",
        },
        fmt_sig(frame.x.lo),
        fmt_sig(frame.x.hi),
        fmt_sig(frame.y.lo),
        fmt_sig(frame.y.hi),
        if log { "log" } else { "linear" },
        LEFT,
        TOP,
        RIGHT,
        BOTTOM
    );
    let _ = writeln!(
        w,
        r#"<defs><clipPath id="plot-clip"><rect x="{LEFT}" y="{TOP}" width="{}" height="{}"/></clipPath></defs>"#,
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{}" y="28" font-size="16" text-anchor="middle">{}</text>"#,
        (LEFT + RIGHT) / 2.0,
        escape(&spec.title)
    );

    // Axes and ticks.
    let _ = writeln!(
        w,
        r#"<rect class="plot-area" x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        RIGHT - LEFT,
        BOTTOM - TOP
    );
    let _ = writeln!(w, r#"<g class="x-ticks" font-size="11" text-anchor="middle">"#);
    for t in nice_ticks(frame.x.lo, frame.x.hi, 8) {
        let x = fmt_sig(frame.px(t));
        let _ = writeln!(
            w,
            r#"<line x1="{x}" y1="{BOTTOM}" x2="{x}" y2="{}" stroke="black"/><text x="{x}" y="{}">{}</text>"#,
            BOTTOM + 5.0,
            BOTTOM + 18.0,
            fmt_sig(t)
        );
    }
    let _ = writeln!(w, "</g>");
    let y_ticks = if frame.y.log {
        let (lo, hi) = (frame.y.lo.log10().round() as i32, frame.y.hi.log10().round() as i32);
        (lo..=hi).map(|e| 10f64.powi(e)).collect()
    } else {
        nice_ticks(frame.y.lo, frame.y.hi, 6)
    };
    let _ = writeln!(w, r#"<g class="y-ticks" font-size="11" text-anchor="end">"#);
    for t in y_ticks {
        let y = fmt_sig(frame.py(t));
        let _ = writeln!(
            w,
            r#"<line x1="{}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/><text x="{}" y="{y}" dy="4">{}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            fmt_sig(t)
        );
    }
    let _ = writeln!(w, "</g>");
    let _ = writeln!(
        w,
        r#"<text x="{}" y="{}" font-size="13" text-anchor="middle">{}</text>"#,
        (LEFT + RIGHT) / 2.0,
        BOTTOM + 42.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="20" y="{}" font-size="13" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        (TOP + BOTTOM) / 2.0,
        (TOP + BOTTOM) / 2.0,
        escape(&spec.y_label)
    );

    let _ = writeln!(w, r#"<g clip-path="url(#plot-clip)">"#);
    for (year, label) in &spec.annotations {
        if !spec.year_range.contains(*year) {
            continue;
        }
        let x = fmt_sig(frame.px(*year as f64));
        let _ = writeln!(
            w,
            r##"<line class="annotation" x1="{x}" y1="{TOP}" x2="{x}" y2="{BOTTOM}" stroke="#777777" stroke-dasharray="4 3"/><text x="{x}" y="{}" font-size="11" text-anchor="middle" fill="#555555">{}</text>"##,
            TOP + 14.0,
            escape(label)
        );
    }
    for (i, (overlay, samples)) in spec.overlays.iter().zip(&curves).enumerate() {
        if samples.is_empty() {
            continue;
        }
        let pts: Vec<String> = samples
            .iter()
            .map(|&(t, v)| format!("{},{}", fmt_sig(frame.px(t)), fmt_sig(frame.py(v))))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline class="fit" fill="none" stroke="{}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            PALETTE[i % PALETTE.len()],
            pts.join(" "),
            escape(&overlay.label)
        );
    }
    for (obs, v) in data.observations().iter().zip(&values) {
        let _ = writeln!(
            w,
            r#"<circle class="obs" cx="{}" cy="{}" r="3.5" fill="black"><title>{}: {}</title></circle>"#,
            fmt_sig(frame.px(obs.year as f64)),
            fmt_sig(frame.py(*v)),
            obs.year,
            fmt_sig(obs.value)
        );
    }
    let _ = writeln!(w, "</g>");

    if !spec.overlays.is_empty() {
        let _ = writeln!(w, r#"<g class="legend" font-size="11">"#);
        for (i, overlay) in spec.overlays.iter().enumerate() {
            let y = TOP + 16.0 + 16.0 * i as f64;
            let _ = writeln!(
                w,
                r#"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="1.5"/><text x="{}" y="{}">{}</text>"#,
                RIGHT - 200.0,
                RIGHT - 180.0,
                PALETTE[i % PALETTE.len()],
                RIGHT - 175.0,
                y + 4.0,
                escape(&overlay.label)
            );
        }
        let _ = writeln!(w, "</g>");
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}
