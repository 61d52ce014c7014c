//! Full-pipeline analysis reports: run settings (also the `--config` file
//! vocabulary), report assembly, JSON and plain-text output, and the four
//! standard figure layouts.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::float_serde;
use crate::hyperbolic::{reciprocal_transform, HyperbolicFit};
use crate::ingest::{window, TimeSeries, YearRange};
use crate::regime::{
    assess_break_support, compare_hypotheses, detect_divergence, fit_piecewise, search_breakpoints,
    test_stagnation, AnalysisConfig, BreakSupport, DivergenceReport, HypothesisOutcome, PiecewiseModel,
    RegimeHypothesis, StagnationVerdict, Verdict,
};
use crate::svg::{Overlay, PlotSpec, Space};

fn yr(start: i64, end: i64) -> YearRange {
    YearRange { start, end }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedBreaks {
    pub window: YearRange,
    pub breakpoints: Vec<i64>,
}

/// Everything besides the input file that determines a run's output.
/// Defaults reproduce the Africa analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub thresholds: AnalysisConfig,
    /// Applied to the input before any analysis.
    pub window: Option<YearRange>,
    pub fit_windows: Vec<YearRange>,
    pub stagnation_windows: Vec<YearRange>,
    pub breaks_window: YearRange,
    pub n_breaks: usize,
    pub fixed_breaks: Vec<FixedBreaks>,
    pub baseline: YearRange,
    pub search_from: i64,
    /// Built-in hypothesis names.
    pub hypotheses: Vec<String>,
    /// JSON file holding an array of custom hypotheses.
    pub hypothesis_file: Option<String>,
    pub custom_hypotheses: Vec<RegimeHypothesis>,
    /// Fits drawn on figures.
    pub overlay_windows: Vec<YearRange>,
    pub annotations: Vec<i64>,
    /// Year span of the zoomed figures.
    pub zoom_window: YearRange,
    pub log_values: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            thresholds: AnalysisConfig::default(),
            window: None,
            fit_windows: vec![yr(1, 1820), yr(1820, 1950)],
            stagnation_windows: vec![yr(1, 1820), yr(1820, 1950)],
            breaks_window: yr(1, 1913),
            n_breaks: 1,
            fixed_breaks: vec![FixedBreaks {
                window: yr(1820, 1950),
                breakpoints: vec![1900],
            }],
            baseline: yr(1820, 1950),
            search_from: 1920,
            hypotheses: vec!["galor-ldc".into(), "nielsen-africa".into()],
            hypothesis_file: None,
            custom_hypotheses: Vec::new(),
            overlay_windows: vec![yr(1, 1820), yr(1820, 1950)],
            annotations: vec![1820, 1900, 1950],
            zoom_window: yr(1500, 2008),
            log_values: false,
        }
    }
}

impl RunSettings {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: Some(e.column()),
            message: format!("config: {e}"),
        })
    }

    /// Built-in hypotheses by name followed by the custom ones.
    pub fn resolve_hypotheses(&self) -> Result<Vec<RegimeHypothesis>> {
        let mut out = Vec::new();
        for name in &self.hypotheses {
            let h = RegimeHypothesis::builtin(name).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown hypothesis {name:?}; built-in: {}",
                    crate::regime::BUILTIN_HYPOTHESES.join(", ")
                ))
            })?;
            out.push(h);
        }
        for h in &self.custom_hypotheses {
            h.validate()?;
            out.push(h.clone());
        }
        Ok(out)
    }
}

/// Parses a JSON array of hypotheses.
pub fn parse_hypotheses(text: &str) -> Result<Vec<RegimeHypothesis>> {
    let hs: Vec<RegimeHypothesis> = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: Some(e.column()),
        message: format!("hypotheses: {e}"),
    })?;
    for h in &hs {
        h.validate()?;
    }
    Ok(hs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub file: String,
    pub format: String,
    pub name: String,
    pub unit: String,
    pub n_observations: usize,
    pub first_year: Option<i64>,
    pub last_year: Option<i64>,
}

impl Provenance {
    pub fn describe(file: &str, format: &str, series: &TimeSeries) -> Self {
        let span = series.year_span();
        Self {
            file: file.into(),
            format: format.into(),
            name: series.name.clone(),
            unit: series.unit.clone(),
            n_observations: series.len(),
            first_year: span.map(|s| s.start),
            last_year: span.map(|s| s.end),
        }
    }
}

/// A result or the reason it could not be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome<T> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl<T> From<Result<T>> for Outcome<T> {
    fn from(r: Result<T>) -> Self {
        match r {
            Ok(v) => Outcome { result: Some(v), error: None },
            Err(e) => Outcome { result: None, error: Some(e.to_string()) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub window: YearRange,
    #[serde(flatten)]
    pub outcome: Outcome<HyperbolicFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub n_breaks: usize,
    pub breakpoints: Vec<i64>,
    pub total_sse: f64,
    pub n_params: usize,
    #[serde(with = "float_serde")]
    pub aic: f64,
}

impl From<&PiecewiseModel> for ModelSummary {
    fn from(m: &PiecewiseModel) -> Self {
        Self {
            n_breaks: m.breakpoints.len(),
            breakpoints: m.breakpoints.clone(),
            total_sse: m.total_sse,
            n_params: m.n_params,
            aic: m.aic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakAnalysis {
    pub model: PiecewiseModel,
    pub support: BreakSupport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub window: YearRange,
    pub n_breaks: usize,
    /// The best model for every break count from 0 up to `n_breaks`.
    pub by_break_count: Vec<ModelSummary>,
    #[serde(flatten)]
    pub outcome: Outcome<BreakAnalysis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedEntry {
    pub window: YearRange,
    pub breakpoints: Vec<i64>,
    #[serde(flatten)]
    pub outcome: Outcome<BreakAnalysis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakpointSection {
    pub search: SearchEntry,
    pub fixed: Vec<FixedEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagnationEntry {
    pub window: YearRange,
    #[serde(flatten)]
    pub outcome: Outcome<StagnationVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceSection {
    pub baseline_window: YearRange,
    pub search_from: i64,
    #[serde(flatten)]
    pub outcome: Outcome<DivergenceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisSection {
    pub definitions: Vec<RegimeHypothesis>,
    pub ranking: Vec<HypothesisOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub config: RunSettings,
    pub fits: Vec<FitEntry>,
    pub breakpoints: BreakpointSection,
    pub stagnation: Vec<StagnationEntry>,
    pub divergence: DivergenceSection,
    pub hypotheses: HypothesisSection,
}

impl AnalysisReport {
    /// Error messages of every section that could not be computed, not
    /// counting infeasible hypotheses (those are part of the ranking).
    pub fn section_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let mut push = |what: String, e: &Option<String>| {
            if let Some(e) = e {
                errs.push(format!("{what}: {e}"));
            }
        };
        for f in &self.fits {
            push(format!("fit {}", f.window), &f.outcome.error);
        }
        push(
            format!("breakpoint search {}", self.breakpoints.search.window),
            &self.breakpoints.search.outcome.error,
        );
        for f in &self.breakpoints.fixed {
            push(format!("fixed breakpoints {:?} on {}", f.breakpoints, f.window), &f.outcome.error);
        }
        for s in &self.stagnation {
            push(format!("stagnation {}", s.window), &s.outcome.error);
        }
        push(
            format!("divergence baseline {}", self.divergence.baseline_window),
            &self.divergence.outcome.error,
        );
        errs
    }
}

pub fn fit_window(series: &TimeSeries, range: YearRange) -> Result<HyperbolicFit> {
    HyperbolicFit::fit(&reciprocal_transform(&window(series, range)))
}

fn break_analysis(series: &TimeSeries, model: Result<PiecewiseModel>, cfg: &AnalysisConfig) -> Result<BreakAnalysis> {
    let model = model?;
    let support = assess_break_support(series, &model, cfg)?;
    Ok(BreakAnalysis { model, support })
}

/// Runs every analysis in `settings` against `series` (already windowed by
/// the caller if `settings.window` is set). Failures are recorded per
/// section; only invalid settings abort.
pub fn build_report(series: &TimeSeries, provenance: Provenance, settings: &RunSettings) -> Result<AnalysisReport> {
    let cfg = &settings.thresholds;
    cfg.validate()?;
    let hypotheses = settings.resolve_hypotheses()?;

    let fits = settings
        .fit_windows
        .iter()
        .map(|&w| FitEntry {
            window: w,
            outcome: fit_window(series, w).into(),
        })
        .collect();

    let search_series = window(series, settings.breaks_window);
    let mut by_break_count = Vec::new();
    if let Ok(m) = fit_piecewise(&search_series, &[], cfg.min_points) {
        by_break_count.push(ModelSummary::from(&m));
    }
    for n in 1..=settings.n_breaks.min(2) {
        if let Ok(m) = search_breakpoints(&search_series, n, cfg.min_points) {
            by_break_count.push(ModelSummary::from(&m));
        }
    }
    let search = SearchEntry {
        window: settings.breaks_window,
        n_breaks: settings.n_breaks,
        by_break_count,
        outcome: break_analysis(
            &search_series,
            search_breakpoints(&search_series, settings.n_breaks, cfg.min_points),
            cfg,
        )
        .into(),
    };
    let fixed = settings
        .fixed_breaks
        .iter()
        .map(|f| {
            let s = window(series, f.window);
            FixedEntry {
                window: f.window,
                breakpoints: f.breakpoints.clone(),
                outcome: break_analysis(&s, fit_piecewise(&s, &f.breakpoints, cfg.min_points), cfg).into(),
            }
        })
        .collect();

    let stagnation = settings
        .stagnation_windows
        .iter()
        .map(|&w| StagnationEntry {
            window: w,
            outcome: test_stagnation(series, w, cfg).into(),
        })
        .collect();

    let divergence = DivergenceSection {
        baseline_window: settings.baseline,
        search_from: settings.search_from,
        outcome: detect_divergence(series, settings.baseline, settings.search_from, cfg).into(),
    };

    let ranking = compare_hypotheses(series, &hypotheses, cfg.min_points);

    Ok(AnalysisReport {
        provenance,
        config: settings.clone(),
        fits,
        breakpoints: BreakpointSection { search, fixed },
        stagnation,
        divergence,
        hypotheses: HypothesisSection {
            definitions: hypotheses,
            ranking,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Pretty-printed JSON with a fixed key order.
    Structured,
    /// Plain-text summary.
    Human,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" | "structured" => Ok(ReportFormat::Structured),
            "text" | "human" => Ok(ReportFormat::Human),
            other => Err(Error::InvalidArgument(format!(
                "unknown report format {other:?} (expected json or text)"
            ))),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize infallibly");
    s.push('\n');
    s
}

pub fn write_report(report: &AnalysisReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => to_json(report),
        ReportFormat::Human => human_summary(report),
    }
}

fn g(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6e}")
    } else {
        format!("{v}")
    }
}

fn human_summary(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let o = &mut out;
    let p = &r.provenance;
    let _ = writeln!(o, "Analysis of {:?} ({}), {} observations", p.name, p.file, p.n_observations);
    if let (Some(a), Some(b)) = (p.first_year, p.last_year) {
        let _ = writeln!(o, "Years {a} to {b}; unit: {}", if p.unit.is_empty() { "-" } else { &p.unit });
    }
    let c = &r.config.thresholds;
    let _ = writeln!(
        o,
        "Settings: min_points={} critical_value={} run_length={} exceedance_factor={} break_support_threshold={}",
        c.min_points, c.critical_value, c.run_length, c.exceedance_factor, c.break_support_threshold
    );

    let _ = writeln!(o, "\nHyperbolic fits (1/S = a - k t):");
    for f in &r.fits {
        match (&f.outcome.result, &f.outcome.error) {
            (Some(fit), _) => {
                let sing = fit
                    .singularity_year
                    .map_or("none".to_string(), |s| format!("{s:.1}"));
                let _ = writeln!(
                    o,
                    "  [{}] a={} k={} r2={:.6} sse={} n={} singularity={}",
                    f.window,
                    g(fit.line.a),
                    g(fit.line.k),
                    fit.line.r2,
                    g(fit.line.sse),
                    fit.line.n,
                    sing
                );
            }
            (None, e) => {
                let _ = writeln!(o, "  [{}] not computed: {}", f.window, e.as_deref().unwrap_or("?"));
            }
        }
    }

    let _ = writeln!(o, "\nStagnation tests:");
    for s in &r.stagnation {
        match (&s.outcome.result, &s.outcome.error) {
            (Some(v), _) => {
                let words = match v.verdict {
                    Verdict::Growth => format!("no stagnation detected on [{}]: growth", s.window.to_string().replace(':', ",")),
                    Verdict::StagnationCompatible => format!(
                        "stagnation cannot be rejected on [{}]",
                        s.window.to_string().replace(':', ",")
                    ),
                };
                let _ = writeln!(o, "  {words} (k={}, t={:.3}, critical value {})", g(v.slope), v.t_stat, v.threshold);
            }
            (None, e) => {
                let _ = writeln!(o, "  [{}] not computed: {}", s.window, e.as_deref().unwrap_or("?"));
            }
        }
    }

    let _ = writeln!(o, "\nBreakpoints:");
    let search = &r.breakpoints.search;
    match (&search.outcome.result, &search.outcome.error) {
        (Some(b), _) => {
            let _ = writeln!(
                o,
                "  best {} break(s) on [{}]: {:?}, sse={}, aic={:.3}, {}",
                search.n_breaks,
                search.window,
                b.model.breakpoints,
                g(b.model.total_sse),
                b.model.aic,
                support_words(&b.support)
            );
            for (i, seg) in b.model.segments.iter().enumerate() {
                let _ = writeln!(
                    o,
                    "    segment {} [{}]: k={} ({} hyperbolic growth)",
                    i + 1,
                    seg.line.range,
                    g(seg.line.k),
                    if i == 0 { "reference" } else if seg.line.k > b.model.segments[i - 1].line.k { "faster" } else { "slower" }
                );
            }
        }
        (None, e) => {
            let _ = writeln!(o, "  search on [{}] not computed: {}", search.window, e.as_deref().unwrap_or("?"));
        }
    }
    for m in &search.by_break_count {
        let _ = writeln!(o, "    {} break(s): sse={} aic={:.3}", m.n_breaks, g(m.total_sse), m.aic);
    }
    for f in &r.breakpoints.fixed {
        match (&f.outcome.result, &f.outcome.error) {
            (Some(b), _) => {
                let _ = writeln!(
                    o,
                    "  fixed {:?} on [{}]: relative sse improvement {} -> {}",
                    f.breakpoints,
                    f.window,
                    g(b.support.relative_improvement),
                    support_words(&b.support)
                );
            }
            (None, e) => {
                let _ = writeln!(
                    o,
                    "  fixed {:?} on [{}] not computed: {}",
                    f.breakpoints,
                    f.window,
                    e.as_deref().unwrap_or("?")
                );
            }
        }
    }

    let _ = writeln!(o, "\nDivergence from the hyperbola fitted on [{}]:", r.divergence.baseline_window);
    match (&r.divergence.outcome.result, &r.divergence.outcome.error) {
        (Some(d), _) => match d.onset_year {
            Some(y) => {
                let _ = writeln!(o, "  diverted to a slower trajectory from {y} (residuals above {} for {} observations)", g(d.threshold), d.run_length);
            }
            None => {
                let _ = writeln!(o, "  no sustained divergence from {} onward", d.search_from);
            }
        },
        (None, e) => {
            let _ = writeln!(o, "  not computed: {}", e.as_deref().unwrap_or("?"));
        }
    }

    let _ = writeln!(o, "\nHypothesis ranking (ascending AIC):");
    if r.hypotheses.ranking.is_empty() {
        let _ = writeln!(o, "  (none)");
    }
    for (i, h) in r.hypotheses.ranking.iter().enumerate() {
        match (&h.fit, &h.error) {
            (Some(f), _) => {
                let _ = writeln!(
                    o,
                    "  {}. {}: aic={:.3} sse={} params={}",
                    i + 1,
                    h.name,
                    f.aic,
                    g(f.total_sse),
                    f.n_params
                );
            }
            (None, e) => {
                let _ = writeln!(o, "  -  {}: infeasible: {}", h.name, e.as_deref().unwrap_or("?"));
            }
        }
    }
    out
}

fn support_words(s: &BreakSupport) -> &'static str {
    if s.supported {
        "supported"
    } else {
        "not supported"
    }
}

/// File name and spec for the four standard figures: reciprocal and direct
/// space, each over the full span and over the zoom window.
pub fn figure_specs(series: &TimeSeries, settings: &RunSettings) -> Result<Vec<(String, PlotSpec)>> {
    let full = series
        .year_span()
        .ok_or_else(|| Error::NothingToPlot("series is empty".into()))?;
    let mut out = Vec::new();
    for (space, tag) in [(Space::Reciprocal, "reciprocal"), (Space::Direct, "direct")] {
        for (range, suffix) in [(full, "full"), (settings.zoom_window, "zoom")] {
            let spec = plot_spec(series, space, range, settings);
            out.push((format!("{tag}_{suffix}.svg"), spec));
        }
    }
    Ok(out)
}

/// A figure of `series` over `range` with the configured overlays and
/// annotations. Overlays that cannot be fitted or fall outside `range` are
/// left out.
pub fn plot_spec(series: &TimeSeries, space: Space, range: YearRange, settings: &RunSettings) -> PlotSpec {
    let mut spec = PlotSpec::new(space, series.clone(), range);
    spec.log_values = settings.log_values;
    spec.annotations = settings
        .annotations
        .iter()
        .map(|&y| (y, y.to_string()))
        .collect();
    spec.overlays = settings
        .overlay_windows
        .iter()
        .filter_map(|&w| {
            let fit = fit_window(series, w).ok()?;
            fit.line.range.intersects(&range).then(|| Overlay {
                label: format!("hyperbola fitted on {w}"),
                fit,
            })
        })
        .collect();
    spec
}
