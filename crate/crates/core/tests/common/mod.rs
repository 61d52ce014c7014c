//! Test-only oracles. Nothing here calls into the fitting code.

#![allow(dead_code)]

use std::path::PathBuf;

use hypergrowth::{parse_series_csv, TimeSeries};

pub fn fixture_path() -> PathBuf {
    match std::env::var_os("HYPERGROWTH_AFRICA_FIXTURE") {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/africa_gdp.csv"),
    }
}

pub fn africa() -> TimeSeries {
    let text = std::fs::read_to_string(fixture_path()).expect("fixture readable");
    parse_series_csv(&text)
        .expect("fixture parses")
        .with_name("Africa")
        .with_unit("billions of 1990 International Geary-Khamis dollars")
}

/// `(year, 1/value)` pairs within `[lo, hi]`, read straight from the series.
pub fn recip_pairs(series: &TimeSeries, lo: i64, hi: i64) -> Vec<(i64, f64)> {
    series
        .observations()
        .iter()
        .filter(|o| lo <= o.year && o.year <= hi)
        .map(|o| (o.year, 1.0 / o.value))
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct OracleLine {
    pub a: f64,
    pub k: f64,
    pub sse: f64,
}

/// Closed-form normal equations, solved by Cramer's rule. Year sums are
/// exact integer arithmetic.
pub fn normal_equations(points: &[(i64, f64)]) -> OracleLine {
    let n = points.len() as i128;
    let sx: i128 = points.iter().map(|&(x, _)| x as i128).sum();
    let sxx: i128 = points.iter().map(|&(x, _)| (x as i128) * (x as i128)).sum();
    let det = (n * sxx - sx * sx) as f64;
    let sy: f64 = points.iter().map(|&(_, y)| y).sum();
    let sxy: f64 = points.iter().map(|&(x, y)| x as f64 * y).sum();
    let slope = (n as f64 * sxy - sx as f64 * sy) / det;
    let intercept = (sy * sxx as f64 - sx as f64 * sxy) / det;
    let sse = points
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x as f64).powi(2))
        .sum();
    OracleLine {
        a: intercept,
        k: -slope,
        sse,
    }
}

/// Mean and squared deviations of a constant-level model.
pub fn constant_level(points: &[(i64, f64)]) -> (f64, f64) {
    let mean = points.iter().map(|&(_, y)| y).sum::<f64>() / points.len() as f64;
    let sse = points.iter().map(|&(_, y)| (y - mean).powi(2)).sum();
    (mean, sse)
}

/// Brute-force best single breakpoint over observation years: every split
/// leaving at least `min_points` on each side, scored with the normal
/// equations. Returns `(breakpoint, total_sse)` of the earliest minimiser.
pub fn brute_force_one_break(points: &[(i64, f64)], min_points: usize) -> Option<(i64, f64)> {
    let mut best: Option<(i64, f64)> = None;
    for cut in min_points..=points.len().saturating_sub(min_points) {
        if cut == 0 || cut >= points.len() {
            continue;
        }
        let sse = normal_equations(&points[..cut]).sse + normal_equations(&points[cut..]).sse;
        if best.is_none_or(|(_, b)| sse < b) {
            best = Some((points[cut - 1].0, sse));
        }
    }
    best
}

/// `|x - y| <= 10^(1-digits) * max(|x|, |y|)`: agreement to `digits`
/// significant digits.
pub fn agree_sig(x: f64, y: f64, digits: i32) -> bool {
    let scale = x.abs().max(y.abs());
    scale == 0.0 || (x - y).abs() <= 10f64.powi(1 - digits) * scale * 0.5
}
