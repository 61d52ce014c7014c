//! Regime analysis on the reciprocal representation: piecewise fits,
//! exhaustive breakpoint search, a slope test against stagnation, detection
//! of sustained divergence from a baseline hyperbola, and AIC ranking of
//! named regime layouts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float_serde;
use crate::hyperbolic::{
    fit_reciprocal_line, reciprocal_transform, residuals_reciprocal, HyperbolicFit,
    ReciprocalPoint,
};
use crate::ingest::{window, TimeSeries, YearRange};

/// Tunable thresholds. Every report echoes the values used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Minimum observations per fitted segment.
    pub min_points: usize,
    /// One-sided critical value for the stagnation slope test.
    pub critical_value: f64,
    /// Consecutive exceedances that make a divergence sustained.
    pub run_length: usize,
    /// Divergence threshold as a multiple of the baseline residual RMSE.
    pub exceedance_factor: f64,
    /// Minimum relative SSE improvement for a breakpoint to count as supported.
    pub break_support_threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            min_points: 3,
            critical_value: 2.0,
            run_length: 3,
            exceedance_factor: 2.0,
            break_support_threshold: 1e-3,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_points < 2 {
            return Err(Error::InvalidArgument(format!(
                "min_points must be at least 2, got {}",
                self.min_points
            )));
        }
        if self.run_length == 0 {
            return Err(Error::InvalidArgument("run_length must be at least 1".into()));
        }
        for (name, v) in [
            ("critical_value", self.critical_value),
            ("exceedance_factor", self.exceedance_factor),
            ("break_support_threshold", self.break_support_threshold),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be a non-negative finite number, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// `n ln(sse/n) + 2p`; negative infinity for a zero-residual fit.
pub fn aic(sse: f64, n: usize, n_params: usize) -> f64 {
    if sse <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let n = n as f64;
    n * (sse / n).ln() + 2.0 * n_params as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseModel {
    pub breakpoints: Vec<i64>,
    pub segments: Vec<HyperbolicFit>,
    pub total_sse: f64,
    pub n_total: usize,
    /// Two per segment plus one per searched (free) breakpoint.
    pub n_params: usize,
    pub free_breakpoints: usize,
    #[serde(with = "float_serde")]
    pub aic: f64,
}

impl PiecewiseModel {
    fn assemble(breakpoints: Vec<i64>, segments: Vec<HyperbolicFit>, free_breakpoints: usize) -> Self {
        let total_sse = segments.iter().map(|s| s.line.sse).sum();
        let n_total = segments.iter().map(|s| s.line.n).sum();
        let n_params = 2 * segments.len() + free_breakpoints;
        Self {
            aic: aic(total_sse, n_total, n_params),
            breakpoints,
            segments,
            total_sse,
            n_total,
            n_params,
            free_breakpoints,
        }
    }
}

fn check_min_points(min_points: usize) -> Result<()> {
    if min_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "min_points must be at least 2, got {min_points}"
        )));
    }
    Ok(())
}

/// Splits year-sorted points at the breakpoints. A point whose year equals
/// a breakpoint goes to the earlier span.
fn split_at_breakpoints<'a>(points: &'a [ReciprocalPoint], breakpoints: &[i64]) -> Vec<&'a [ReciprocalPoint]> {
    let mut spans = Vec::with_capacity(breakpoints.len() + 1);
    let mut rest = points;
    for &b in breakpoints {
        let cut = rest.partition_point(|p| p.year <= b);
        let (head, tail) = rest.split_at(cut);
        spans.push(head);
        rest = tail;
    }
    spans.push(rest);
    spans
}

fn describe_span(i: usize, breakpoints: &[i64]) -> String {
    let lo = if i == 0 { "-inf".to_string() } else { breakpoints[i - 1].to_string() };
    let hi = breakpoints.get(i).map_or("+inf".to_string(), |b| b.to_string());
    format!("span {} ({lo}, {hi}]", i + 1)
}

/// Fits each span between fixed breakpoints independently.
pub fn fit_piecewise(series: &TimeSeries, breakpoints: &[i64], min_points: usize) -> Result<PiecewiseModel> {
    check_min_points(min_points)?;
    let span = series
        .year_span()
        .ok_or_else(|| Error::Infeasible("series is empty".into()))?;
    if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(format!(
            "breakpoints must be strictly increasing: {breakpoints:?}"
        )));
    }
    if let Some(b) = breakpoints.iter().find(|&&b| b <= span.start || b >= span.end) {
        return Err(Error::InvalidArgument(format!(
            "breakpoint {b} is not strictly inside the data range {span}"
        )));
    }

    let points = reciprocal_transform(series);
    let spans = split_at_breakpoints(&points, breakpoints);
    let mut segments = Vec::with_capacity(spans.len());
    for (i, pts) in spans.iter().enumerate() {
        if pts.len() < min_points {
            return Err(Error::Infeasible(format!(
                "{} has {} observations; at least {min_points} required",
                describe_span(i, breakpoints),
                pts.len()
            )));
        }
        segments.push(HyperbolicFit::fit(pts)?);
    }
    Ok(PiecewiseModel::assemble(breakpoints.to_vec(), segments, 0))
}

fn span_sse(points: &[ReciprocalPoint]) -> Result<f64> {
    fit_reciprocal_line(points).map(|f| f.sse)
}

/// Exhaustive search for `n_breaks` (1 or 2) breakpoints at observation
/// years, minimising total SSE. Ties go to the earliest breakpoint years.
pub fn search_breakpoints(series: &TimeSeries, n_breaks: usize, min_points: usize) -> Result<PiecewiseModel> {
    check_min_points(min_points)?;
    if !(1..=2).contains(&n_breaks) {
        return Err(Error::InvalidArgument(format!(
            "n_breaks must be 1 or 2, got {n_breaks}"
        )));
    }
    let points = reciprocal_transform(series);
    let n = points.len();
    // Index `i` as a breakpoint means points[..=i] end a segment.
    let first = min_points - 1;
    let last_end = n.checked_sub(min_points + 1);

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut consider = |sse: f64, idx: Vec<usize>| {
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, idx));
        }
    };

    if let Some(last) = last_end {
        match n_breaks {
            1 => {
                for i in first..=last {
                    let sse = span_sse(&points[..=i])? + span_sse(&points[i + 1..])?;
                    consider(sse, vec![i]);
                }
            }
            _ => {
                for i in first..=last {
                    let left = span_sse(&points[..=i])?;
                    for j in (i + min_points)..=last {
                        let sse = left + span_sse(&points[i + 1..=j])? + span_sse(&points[j + 1..])?;
                        consider(sse, vec![i, j]);
                    }
                }
            }
        }
    }

    let (_, idx) = best.ok_or_else(|| {
        Error::Infeasible(format!(
            "no placement of {n_breaks} breakpoint(s) leaves {min_points} observations per segment ({n} observations)"
        ))
    })?;
    let breakpoints: Vec<i64> = idx.iter().map(|&i| points[i].year).collect();
    let spans = split_at_breakpoints(&points, &breakpoints);
    let segments = spans
        .iter()
        .map(|s| HyperbolicFit::fit(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(PiecewiseModel::assemble(breakpoints, segments, n_breaks))
}

/// Comparison of a model against the best model with one fewer breakpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakSupport {
    pub reduced_breakpoints: Vec<i64>,
    pub reduced_sse: f64,
    pub model_sse: f64,
    pub relative_improvement: f64,
    pub threshold: f64,
    pub supported: bool,
}

/// Relative SSE improvement of `model` over the optimal model with one
/// fewer breakpoint. SSE values at the level of floating-point noise are
/// treated as zero, so an exact fit admits no improvement.
pub fn assess_break_support(series: &TimeSeries, model: &PiecewiseModel, config: &AnalysisConfig) -> Result<BreakSupport> {
    let reduced = match model.breakpoints.len() {
        0 => {
            return Err(Error::InvalidArgument(
                "a model without breakpoints has nothing to assess".into(),
            ))
        }
        1 => fit_piecewise(series, &[], config.min_points)?,
        n => search_breakpoints(series, n - 1, config.min_points)?,
    };
    let floor = sse_noise_floor(series);
    let relative_improvement = if reduced.total_sse <= floor {
        0.0
    } else {
        ((reduced.total_sse - model.total_sse) / reduced.total_sse).max(0.0)
    };
    Ok(BreakSupport {
        reduced_breakpoints: reduced.breakpoints,
        reduced_sse: reduced.total_sse,
        model_sse: model.total_sse,
        relative_improvement,
        threshold: config.break_support_threshold,
        supported: relative_improvement >= config.break_support_threshold,
    })
}

fn sse_noise_floor(series: &TimeSeries) -> f64 {
    let max_recip = series
        .observations()
        .iter()
        .map(|o| 1.0 / o.value)
        .fold(0.0, f64::max);
    let per_point = 64.0 * f64::EPSILON * max_recip;
    series.len() as f64 * per_point * per_point
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    StagnationCompatible,
    Growth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagnationVerdict {
    pub range: YearRange,
    pub n: usize,
    pub slope: f64,
    pub slope_stderr: f64,
    #[serde(with = "float_serde")]
    pub t_stat: f64,
    pub threshold: f64,
    pub verdict: Verdict,
}

/// One-sided t test of the reciprocal slope against a flat (stagnant)
/// trend. A zero standard error with positive slope counts as rejection.
pub fn test_stagnation(series: &TimeSeries, range: YearRange, config: &AnalysisConfig) -> Result<StagnationVerdict> {
    let points = reciprocal_transform(&window(series, range));
    let n = points.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "stagnation test on {range} needs at least 3 observations, found {n}"
        )));
    }
    let fit = fit_reciprocal_line(&points)?;

    let x_mean = points.iter().map(|p| p.year as f64).sum::<f64>() / n as f64;
    let sxx: f64 = points.iter().map(|p| (p.year as f64 - x_mean).powi(2)).sum();
    let slope_stderr = (fit.sse / (n as f64 - 2.0) / sxx).sqrt();

    let t_stat = if slope_stderr > 0.0 {
        fit.k / slope_stderr
    } else if fit.k > 0.0 {
        f64::INFINITY
    } else if fit.k < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    let verdict = if t_stat > config.critical_value {
        Verdict::Growth
    } else {
        Verdict::StagnationCompatible
    };
    Ok(StagnationVerdict {
        range,
        n,
        slope: fit.k,
        slope_stderr,
        t_stat,
        threshold: config.critical_value,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub year: i64,
    pub residual: f64,
    pub exceeds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub baseline: HyperbolicFit,
    pub baseline_rmse: f64,
    /// Absolute residual threshold, `exceedance_factor * baseline_rmse`.
    pub threshold: f64,
    pub search_from: i64,
    pub run_length: usize,
    pub exceedance_factor: f64,
    pub onset_year: Option<i64>,
    pub residual_trace: Vec<TracePoint>,
}

/// Finds the first year from `search_from` that starts a run of
/// `run_length` residuals above the baseline hyperbola by more than
/// `exceedance_factor` baseline RMSEs.
pub fn detect_divergence(
    series: &TimeSeries,
    baseline_range: YearRange,
    search_from: i64,
    config: &AnalysisConfig,
) -> Result<DivergenceReport> {
    if search_from < baseline_range.start {
        return Err(Error::InvalidArgument(format!(
            "search_from {search_from} precedes the baseline start {}",
            baseline_range.start
        )));
    }
    if config.run_length == 0 {
        return Err(Error::InvalidArgument("run_length must be at least 1".into()));
    }
    let baseline = HyperbolicFit::fit(&reciprocal_transform(&window(series, baseline_range)))?;
    let rmse = baseline.line.rmse();
    let threshold = config.exceedance_factor * rmse;

    let candidates: Vec<ReciprocalPoint> = reciprocal_transform(series)
        .into_iter()
        .filter(|p| p.year >= search_from)
        .collect();
    let residual_trace: Vec<TracePoint> = residuals_reciprocal(&baseline.line, &candidates)
        .into_iter()
        .map(|(year, residual)| {
            // Residuals within rounding distance of the line never count.
            let noise = 64.0 * f64::EPSILON * baseline.line.line_at(year as f64).abs();
            TracePoint {
                year,
                residual,
                exceeds: residual > threshold.max(noise),
            }
        })
        .collect();

    let onset_year = residual_trace
        .windows(config.run_length)
        .find(|run| run.iter().all(|t| t.exceeds))
        .map(|run| run[0].year);

    Ok(DivergenceReport {
        baseline,
        baseline_rmse: rmse,
        threshold,
        search_from,
        run_length: config.run_length,
        exceedance_factor: config.exceedance_factor,
        onset_year,
        residual_trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentKind {
    /// Constant reciprocal level, one parameter.
    Stagnation,
    /// Declining reciprocal line (`k > 0`), two parameters.
    Hyperbolic,
    /// Free-slope reciprocal line, two parameters.
    Unconstrained,
}

impl SegmentKind {
    pub fn n_params(self) -> usize {
        match self {
            SegmentKind::Stagnation => 1,
            SegmentKind::Hyperbolic | SegmentKind::Unconstrained => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegimeHypothesis {
    pub name: String,
    pub boundaries: Vec<i64>,
    pub segment_kinds: Vec<SegmentKind>,
}

pub const BUILTIN_HYPOTHESES: [&str; 2] = ["galor-ldc", "nielsen-africa"];

impl RegimeHypothesis {
    pub fn new(name: impl Into<String>, boundaries: Vec<i64>, segment_kinds: Vec<SegmentKind>) -> Result<Self> {
        let h = Self {
            name: name.into(),
            boundaries,
            segment_kinds,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "hypothesis {:?}: boundaries must be strictly increasing",
                self.name
            )));
        }
        if self.segment_kinds.len() != self.boundaries.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "hypothesis {:?}: {} boundaries need {} segment kinds, got {}",
                self.name,
                self.boundaries.len(),
                self.boundaries.len() + 1,
                self.segment_kinds.len()
            )));
        }
        Ok(())
    }

    /// Stagnation until 1900, then an unconstrained post-Malthusian span.
    /// The stagnation span nominally opens in 100,000 BC; it starts wherever
    /// the data start.
    pub fn galor_ldc() -> Self {
        Self {
            name: "galor-ldc".into(),
            boundaries: vec![1900],
            segment_kinds: vec![SegmentKind::Stagnation, SegmentKind::Unconstrained],
        }
    }

    /// Two hyperbolic epochs split at 1820, then a free trajectory from 1950.
    pub fn nielsen_africa() -> Self {
        Self {
            name: "nielsen-africa".into(),
            boundaries: vec![1820, 1950],
            segment_kinds: vec![
                SegmentKind::Hyperbolic,
                SegmentKind::Hyperbolic,
                SegmentKind::Unconstrained,
            ],
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "galor-ldc" => Some(Self::galor_ldc()),
            "nielsen-africa" => Some(Self::nielsen_africa()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFit {
    pub kind: SegmentKind,
    pub range: YearRange,
    pub n: usize,
    pub a: f64,
    pub k: f64,
    pub sse: f64,
    /// Set when a hyperbolic span came out non-declining and was refitted
    /// as a constant level.
    pub constrained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisFit {
    /// Boundaries left after dropping those outside the data range.
    pub effective_boundaries: Vec<i64>,
    pub segments: Vec<SegmentFit>,
    pub total_sse: f64,
    pub n_total: usize,
    pub n_params: usize,
    #[serde(with = "float_serde")]
    pub aic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisOutcome {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fit: Option<HypothesisFit>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

/// Mean and SSE about the mean, accumulated relative to the first value.
fn constant_fit(points: &[ReciprocalPoint]) -> (f64, f64) {
    let y0 = points[0].recip;
    let off = points.iter().map(|p| p.recip - y0).sum::<f64>() / points.len() as f64;
    let sse = points.iter().map(|p| (p.recip - y0 - off).powi(2)).sum();
    (y0 + off, sse)
}

fn fit_segment(kind: SegmentKind, points: &[ReciprocalPoint]) -> Result<SegmentFit> {
    let range = YearRange {
        start: points[0].year,
        end: points[points.len() - 1].year,
    };
    let constant = |constrained| {
        let (mean, sse) = constant_fit(points);
        SegmentFit {
            kind,
            range,
            n: points.len(),
            a: mean,
            k: 0.0,
            sse,
            constrained,
        }
    };
    if kind == SegmentKind::Stagnation {
        return Ok(constant(false));
    }
    let line = fit_reciprocal_line(points)?;
    if kind == SegmentKind::Hyperbolic && line.k <= 0.0 {
        return Ok(constant(true));
    }
    Ok(SegmentFit {
        kind,
        range,
        n: line.n,
        a: line.a,
        k: line.k,
        sse: line.sse,
        constrained: false,
    })
}

/// Fits one hypothesis. Boundaries before the first observation or at/after
/// the last one are dropped together with the span they cut off.
pub fn fit_hypothesis(series: &TimeSeries, hypothesis: &RegimeHypothesis, min_points: usize) -> Result<HypothesisFit> {
    check_min_points(min_points)?;
    hypothesis.validate()?;
    let span = series
        .year_span()
        .ok_or_else(|| Error::Infeasible("series is empty".into()))?;

    let mut boundaries = Vec::new();
    let mut kinds = Vec::new();
    for (i, &kind) in hypothesis.segment_kinds.iter().enumerate() {
        let upper = hypothesis.boundaries.get(i).copied();
        let lower = i.checked_sub(1).map(|j| hypothesis.boundaries[j]);
        let starts_after_data = lower.is_some_and(|b| b >= span.end);
        let ends_before_data = upper.is_some_and(|b| b < span.start);
        if starts_after_data || ends_before_data {
            continue;
        }
        if let Some(b) = upper.filter(|&b| b < span.end) {
            boundaries.push(b);
        }
        kinds.push(kind);
    }

    let points = reciprocal_transform(series);
    let spans = split_at_breakpoints(&points, &boundaries);
    let mut segments = Vec::with_capacity(spans.len());
    for (i, (pts, &kind)) in spans.iter().zip(&kinds).enumerate() {
        if pts.len() < min_points {
            return Err(Error::Infeasible(format!(
                "hypothesis {:?}: {} has {} observations; at least {min_points} required",
                hypothesis.name,
                describe_span(i, &boundaries),
                pts.len()
            )));
        }
        segments.push(fit_segment(kind, pts)?);
    }

    let total_sse = segments.iter().map(|s| s.sse).sum();
    let n_total = segments.iter().map(|s| s.n).sum();
    let n_params = segments.iter().map(|s| s.kind.n_params()).sum();
    Ok(HypothesisFit {
        effective_boundaries: boundaries,
        segments,
        total_sse,
        n_total,
        n_params,
        aic: aic(total_sse, n_total, n_params),
    })
}

/// Fits every hypothesis and ranks the feasible ones by ascending AIC
/// (then fewer parameters, then name). Infeasible hypotheses follow in
/// input order with their error recorded.
pub fn compare_hypotheses(series: &TimeSeries, hypotheses: &[RegimeHypothesis], min_points: usize) -> Vec<HypothesisOutcome> {
    let mut ranked = Vec::new();
    let mut failed = Vec::new();
    for h in hypotheses {
        match fit_hypothesis(series, h, min_points) {
            Ok(fit) => ranked.push(HypothesisOutcome {
                name: h.name.clone(),
                fit: Some(fit),
                error: None,
            }),
            Err(e) => failed.push(HypothesisOutcome {
                name: h.name.clone(),
                fit: None,
                error: Some(e.to_string()),
            }),
        }
    }
    ranked.sort_by(|x, y| {
        let (fx, fy) = (x.fit.as_ref().unwrap(), y.fit.as_ref().unwrap());
        fx.aic
            .total_cmp(&fy.aic)
            .then(fx.n_params.cmp(&fy.n_params))
            .then_with(|| x.name.cmp(&y.name))
    });
    ranked.extend(failed);
    ranked
}
