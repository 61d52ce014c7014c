//! Reciprocal representation and single-segment hyperbolic fits.
//!
//! A hyperbolic trajectory `S(t) = 1 / (a - k t)` becomes the straight line
//! `1/S = a - k t` when plotted as reciprocals. Growth corresponds to
//! `k > 0`; the trajectory escapes to infinity at the singularity year `a/k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{TimeSeries, YearRange};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReciprocalPoint {
    pub year: i64,
    pub recip: f64,
}

/// Least-squares line `recip = a - k * year`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub a: f64,
    pub k: f64,
    pub r2: f64,
    pub sse: f64,
    pub n: usize,
    pub range: YearRange,
}

impl LinearFit {
    /// Value of the fitted line at `year`.
    pub fn line_at(&self, year: f64) -> f64 {
        self.a - self.k * year
    }

    pub fn rmse(&self) -> f64 {
        (self.sse / self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicFit {
    #[serde(flatten)]
    pub line: LinearFit,
    pub singularity_year: Option<f64>,
}

impl HyperbolicFit {
    pub fn from_line(line: LinearFit) -> Self {
        Self {
            line,
            singularity_year: singularity_year(&line),
        }
    }

    pub fn fit(points: &[ReciprocalPoint]) -> Result<Self> {
        fit_reciprocal_line(points).map(Self::from_line)
    }

    pub fn predict(&self, year: f64) -> Result<f64> {
        hyperbolic_predict(self, year)
    }
}

pub fn reciprocal_transform(series: &TimeSeries) -> Vec<ReciprocalPoint> {
    series
        .observations()
        .iter()
        .map(|o| ReciprocalPoint {
            year: o.year,
            recip: 1.0 / o.value,
        })
        .collect()
}

/// Unweighted ordinary least squares of reciprocal on year.
///
/// Sums are accumulated relative to the first point, which keeps exactly
/// constant targets exactly constant and avoids cancellation for large years.
pub fn fit_reciprocal_line(points: &[ReciprocalPoint]) -> Result<LinearFit> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "at least 2 points required for a line fit, got {n}"
        )));
    }
    let (x0, y0) = (points[0].year, points[0].recip);
    let nf = n as f64;

    let dx_sum: i128 = points.iter().map(|p| (p.year - x0) as i128).sum();
    let x_mean_off = dx_sum as f64 / nf;
    let y_mean_off = points.iter().map(|p| p.recip - y0).sum::<f64>() / nf;

    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for p in points {
        let dx = (p.year - x0) as f64 - x_mean_off;
        let dy = (p.recip - y0) - y_mean_off;
        sxx += dx * dx;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate("all years identical".into()));
    }

    let slope = sxy / sxx;
    let x_mean = x0 as f64 + x_mean_off;
    let y_mean = y0 + y_mean_off;
    let a = y_mean - slope * x_mean;
    let k = -slope;

    let mut sse = 0.0;
    let mut sst = 0.0;
    for p in points {
        let dx = (p.year - x0) as f64 - x_mean_off;
        let dy = (p.recip - y0) - y_mean_off;
        let r = dy - slope * dx;
        sse += r * r;
        sst += dy * dy;
    }
    let r2 = if sst == 0.0 { 1.0 } else { (1.0 - sse / sst).min(1.0) };

    let first = points.iter().map(|p| p.year).min().unwrap_or(x0);
    let last = points.iter().map(|p| p.year).max().unwrap_or(x0);

    Ok(LinearFit {
        a,
        k,
        r2,
        sse,
        n,
        range: YearRange {
            start: first,
            end: last,
        },
    })
}

/// `a / k` for a growing fit; `None` when `k <= 0`.
pub fn singularity_year(fit: &LinearFit) -> Option<f64> {
    (fit.k > 0.0).then(|| fit.a / fit.k)
}

pub fn hyperbolic_predict(fit: &HyperbolicFit, year: f64) -> Result<f64> {
    let denom = fit.line.line_at(year);
    if denom > 0.0 && denom.is_finite() {
        Ok(1.0 / denom)
    } else {
        Err(Error::Singularity {
            year,
            singularity: fit.singularity_year.unwrap_or(f64::NAN),
        })
    }
}

/// Observed minus fitted reciprocal. Positive means the observation grew
/// more slowly than the fitted hyperbola.
pub fn residuals_reciprocal(fit: &LinearFit, points: &[ReciprocalPoint]) -> Vec<(i64, f64)> {
    points
        .iter()
        .map(|p| (p.year, p.recip - fit.line_at(p.year as f64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Observation, TimeSeries};

    fn pts(v: &[(i64, f64)]) -> Vec<ReciprocalPoint> {
        v.iter()
            .map(|&(year, recip)| ReciprocalPoint { year, recip })
            .collect()
    }

    fn line(a: f64, k: f64) -> LinearFit {
        LinearFit {
            a,
            k,
            r2: 1.0,
            sse: 0.0,
            n: 2,
            range: YearRange { start: 0, end: 1 },
        }
    }

    #[test]
    fn transform_examples() {
        let s = TimeSeries::new(
            "t",
            "",
            vec![
                Observation { year: 1, value: 1.0 },
                Observation { year: 100, value: 2.0 },
            ],
        )
        .unwrap();
        let r = reciprocal_transform(&s);
        assert_eq!(r, pts(&[(1, 1.0), (100, 0.5)]));
    }

    #[test]
    fn constant_series_is_flat() {
        let obs = (0..10)
            .map(|i| Observation { year: i * 100, value: 7.0 })
            .collect();
        let s = TimeSeries::new("c", "", obs).unwrap();
        let r = reciprocal_transform(&s);
        assert!(r.iter().all(|p| p.recip == 1.0 / 7.0));
        let fit = fit_reciprocal_line(&r).unwrap();
        assert_eq!(fit.k, 0.0);
        assert_eq!(fit.sse, 0.0);
        assert_eq!(fit.r2, 1.0);
    }

    #[test]
    fn two_points_determine_the_line() {
        let fit = fit_reciprocal_line(&pts(&[(0, 10.0), (100, 9.0)])).unwrap();
        assert!((fit.a - 10.0).abs() < 1e-14);
        assert!((fit.k - 0.01).abs() < 1e-16);
        assert_eq!(fit.r2, 1.0);
        assert!(fit.sse < 1e-28);
        assert_eq!(fit.n, 2);
        assert_eq!(fit.range, YearRange { start: 0, end: 100 });
    }

    #[test]
    fn exact_line_is_recovered() {
        let p: Vec<_> = (0..=10)
            .map(|i| {
                let t = i * 100;
                ReciprocalPoint { year: t, recip: 12.0 - 0.005 * t as f64 }
            })
            .collect();
        let fit = fit_reciprocal_line(&p).unwrap();
        assert!((fit.a - 12.0).abs() < 1e-12);
        assert!((fit.k - 0.005).abs() < 1e-15);
        assert!(fit.sse < 1e-24);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_reciprocal_line(&[]), Err(Error::Degenerate(_))));
        assert!(matches!(
            fit_reciprocal_line(&pts(&[(5, 1.0)])),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            fit_reciprocal_line(&pts(&[(5, 1.0), (5, 2.0)])),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn fit_is_bitwise_deterministic() {
        let p = pts(&[(1, 0.14), (1000, 0.07), (1500, 0.05), (1820, 0.03)]);
        let a = fit_reciprocal_line(&p).unwrap();
        let b = fit_reciprocal_line(&p).unwrap();
        assert_eq!(a.a.to_bits(), b.a.to_bits());
        assert_eq!(a.k.to_bits(), b.k.to_bits());
        assert_eq!(a.sse.to_bits(), b.sse.to_bits());
    }

    #[test]
    fn predict_and_singularity() {
        let fit = HyperbolicFit::from_line(line(10.0, 0.01));
        assert_eq!(fit.singularity_year, Some(1000.0));
        assert!((fit.predict(0.0).unwrap() - 0.1).abs() < 1e-15);
        let near = fit.predict(999.999).unwrap();
        assert!(near > 1e4 && near.is_finite());
        match fit.predict(1000.0).unwrap_err() {
            Error::Singularity { singularity, .. } => assert_eq!(singularity, 1000.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn singularity_none_for_non_growth() {
        assert_eq!(singularity_year(&line(10.0, 0.0)), None);
        assert_eq!(singularity_year(&line(10.0, -0.002)), None);
    }

    #[test]
    fn residual_sign_convention() {
        let fit = line(0.015, 0.0);
        let r = residuals_reciprocal(&fit, &pts(&[(0, 0.02)]));
        assert!((r[0].1 - 0.005).abs() < 1e-15);

        let on = line(12.0, 0.005);
        let p: Vec<_> = (0..5)
            .map(|t| ReciprocalPoint { year: t, recip: on.line_at(t as f64) })
            .collect();
        assert!(residuals_reciprocal(&on, &p).iter().all(|&(_, r)| r == 0.0));
    }

    #[test]
    fn predict_round_trips_through_reciprocal() {
        let p = pts(&[(1, 0.1426), (1000, 0.0729), (1500, 0.0543), (1600, 0.0455)]);
        let fit = HyperbolicFit::fit(&p).unwrap();
        for q in &p {
            let v = fit.predict(q.year as f64).unwrap();
            let back = 1.0 / v;
            assert!((back - fit.line.line_at(q.year as f64)).abs() <= 1e-15);
        }
    }
}
