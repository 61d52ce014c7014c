//! Analysis of hyperbolic growth in historical time series through the
//! reciprocal representation, in which a hyperbola `S(t) = 1/(a - k t)`
//! becomes the straight line `1/S = a - k t`.
//!
//! - [`ingest`]: canonical CSV and Maddison horizontal tables, year windows.
//! - [`hyperbolic`]: reciprocal transform, line fits, prediction, singularity.
//! - [`regime`]: piecewise fits, breakpoint search, stagnation test,
//!   divergence detection, hypothesis ranking.
//! - [`svg`] and [`report`]: figures and analysis reports.
//! - [`cli`]: the `hypergrowth` command.

pub mod cli;
pub mod error;
mod float_serde;
pub mod hyperbolic;
pub mod ingest;
pub mod regime;
pub mod report;
pub mod svg;

pub use error::{Error, Result};
pub use hyperbolic::{
    fit_reciprocal_line, hyperbolic_predict, reciprocal_transform, residuals_reciprocal, singularity_year,
    HyperbolicFit, LinearFit, ReciprocalPoint,
};
pub use ingest::{parse_maddison_horizontal, parse_series_csv, window, Delimiter, Observation, TimeSeries, YearRange};
pub use regime::{
    assess_break_support, compare_hypotheses, detect_divergence, fit_hypothesis, fit_piecewise, search_breakpoints,
    test_stagnation, AnalysisConfig, DivergenceReport, PiecewiseModel, RegimeHypothesis, SegmentKind,
    StagnationVerdict, Verdict,
};
