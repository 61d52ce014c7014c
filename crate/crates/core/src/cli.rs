//! Command-line front end. `run` takes the full argv and returns the exit
//! status: 0 on success, 1 on bad input or usage, 2 when the requested
//! analysis is infeasible on valid input.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::{parse_maddison_horizontal, parse_series_csv, window, Delimiter, TimeSeries, YearRange};
use crate::regime::{compare_hypotheses, detect_divergence, fit_piecewise, search_breakpoints, test_stagnation};
use crate::report::{
    build_report, figure_specs, fit_window, parse_hypotheses, plot_spec, to_json, write_report, BreakAnalysis,
    Provenance, ReportFormat, RunSettings,
};
use crate::svg::{render_plot, Space};

#[derive(Debug, Parser)]
#[command(name = "hypergrowth", version, about = "Reciprocal-space analysis of hyperbolic growth in historical GDP series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one hyperbola to the (windowed) series.
    Fit(Common),
    /// Search for breakpoints, or assess fixed ones given with --at.
    Breaks(BreaksArgs),
    /// Slope test of the (windowed) series against stagnation.
    Stagnation(Common),
    /// Detect where the series bends away from a baseline hyperbola.
    Diverge(DivergeArgs),
    /// Rank regime hypotheses by AIC.
    Compare(CompareArgs),
    /// Render one figure; --window selects the plotted span.
    Plot(PlotArgs),
    /// Run the full analysis and write the report and all four figures.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Input data file.
    #[arg(long)]
    input: PathBuf,
    /// `canonical` (year,value CSV) or `maddison:<row label>`.
    #[arg(long, default_value = "canonical")]
    format: String,
    /// Delimiter of a Maddison table: comma or tab.
    #[arg(long, default_value = "comma")]
    delimiter: String,
    /// Series name (defaults to the file stem or row label).
    #[arg(long)]
    name: Option<String>,
    /// Unit of the values.
    #[arg(long)]
    unit: Option<String>,
    /// Inclusive year window START:END.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<YearRange>,
    /// JSON run description; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    min_points: Option<usize>,
    #[arg(long)]
    critical_value: Option<f64>,
    #[arg(long)]
    run_length: Option<usize>,
    #[arg(long)]
    exceedance_factor: Option<f64>,
    #[arg(long)]
    break_support_threshold: Option<f64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BreaksArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n_breaks: Option<usize>,
    /// Fixed breakpoint years (comma separated) instead of a search.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    at: Option<Vec<i64>>,
}

#[derive(Debug, Args)]
struct DivergeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    baseline: Option<YearRange>,
    #[arg(long, allow_hyphen_values = true)]
    search_from: Option<i64>,
}

#[derive(Debug, Args)]
struct HypothesisArgs {
    /// Built-in hypothesis names, comma separated.
    #[arg(long, value_delimiter = ',')]
    hypotheses: Option<Vec<String>>,
    /// JSON file with an array of custom hypotheses.
    #[arg(long)]
    hypothesis_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    hyp: HypothesisArgs,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "reciprocal")]
    space: Space,
    /// Windows whose fitted hyperbolas are drawn, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    overlay: Option<Vec<YearRange>>,
    /// Draw no fitted hyperbolas.
    #[arg(long, conflicts_with = "overlay")]
    no_overlays: bool,
    /// Years marked with vertical lines, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    annotate: Option<Vec<i64>>,
    /// Logarithmic value axis (direct space).
    #[arg(long)]
    log_values: bool,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    hyp: HypothesisArgs,
    /// Directory for report.json, report.txt and the figures.
    #[arg(long, default_value = "report")]
    out_dir: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    breaks_window: Option<YearRange>,
    #[arg(long)]
    n_breaks: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    baseline: Option<YearRange>,
    #[arg(long, allow_hyphen_values = true)]
    search_from: Option<i64>,
    #[arg(long)]
    log_values: bool,
}

#[derive(Serialize)]
struct CommandOutput<'a, T: Serialize> {
    command: &'a str,
    provenance: Provenance,
    config: &'a RunSettings,
    result: T,
}

/// Loaded input plus the settings after applying config file and flags.
struct Context {
    series: TimeSeries,
    provenance: Provenance,
    settings: RunSettings,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load(common: &Common) -> Result<Context> {
    let mut settings = match &common.config {
        Some(path) => RunSettings::from_json(&read_text(path)?)?,
        None => RunSettings::default(),
    };
    let t = &mut settings.thresholds;
    if let Some(v) = common.min_points {
        t.min_points = v;
    }
    if let Some(v) = common.critical_value {
        t.critical_value = v;
    }
    if let Some(v) = common.run_length {
        t.run_length = v;
    }
    if let Some(v) = common.exceedance_factor {
        t.exceedance_factor = v;
    }
    if let Some(v) = common.break_support_threshold {
        t.break_support_threshold = v;
    }
    settings.thresholds.validate()?;
    if common.window.is_some() {
        settings.window = common.window;
    }

    let text = read_text(&common.input)?;
    let series = if common.format == "canonical" {
        let stem = common
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "series".into());
        parse_series_csv(&text)?.with_name(stem)
    } else if let Some(label) = common.format.strip_prefix("maddison:") {
        let delimiter: Delimiter = common.delimiter.parse()?;
        parse_maddison_horizontal(&text, label, delimiter)?
    } else {
        return Err(Error::InvalidArgument(format!(
            "unknown input format {:?} (expected canonical or maddison:<row label>)",
            common.format
        )));
    };
    let mut series = match &common.name {
        Some(n) => series.with_name(n.clone()),
        None => series,
    };
    if let Some(u) = &common.unit {
        series = series.with_unit(u.clone());
    }

    if let (Some(w), Some(span)) = (settings.window, series.year_span()) {
        if !w.intersects(&span) {
            return Err(Error::Validation(format!(
                "window {w} contains no observations (data cover {span})"
            )));
        }
    }
    let provenance = Provenance::describe(&common.input.display().to_string(), &common.format, &series);
    Ok(Context {
        series,
        provenance,
        settings,
    })
}

impl Context {
    /// The series restricted to the configured window, if any.
    fn windowed(&self) -> TimeSeries {
        match self.settings.window {
            Some(w) => window(&self.series, w),
            None => self.series.clone(),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn emit_result<T: Serialize>(command: &str, ctx: &Context, out: Option<&Path>, result: T) -> Result<()> {
    let doc = CommandOutput {
        command,
        provenance: ctx.provenance.clone(),
        config: &ctx.settings,
        result,
    };
    emit(out, &to_json(&doc))
}

fn apply_hypotheses(settings: &mut RunSettings, hyp: &HypothesisArgs) -> Result<()> {
    if let Some(names) = &hyp.hypotheses {
        settings.hypotheses = names.clone();
    }
    if let Some(path) = &hyp.hypothesis_file {
        settings.hypothesis_file = Some(path.display().to_string());
    }
    if let Some(path) = settings.hypothesis_file.clone() {
        settings.custom_hypotheses = parse_hypotheses(&read_text(Path::new(&path))?)?;
    }
    Ok(())
}

fn whole_span(series: &TimeSeries) -> Result<YearRange> {
    series
        .year_span()
        .ok_or_else(|| Error::InsufficientData("series is empty".into()))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Fit(common) => {
            let ctx = load(&common)?;
            let s = ctx.windowed();
            let fit = fit_window(&s, whole_span(&s)?)?;
            emit_result("fit", &ctx, common.out.as_deref(), fit)
        }
        Command::Breaks(args) => {
            let mut ctx = load(&args.common)?;
            if let Some(n) = args.n_breaks {
                ctx.settings.n_breaks = n;
            }
            let s = ctx.windowed();
            let cfg = &ctx.settings.thresholds;
            let model = match &args.at {
                Some(years) => fit_piecewise(&s, years, cfg.min_points)?,
                None => search_breakpoints(&s, ctx.settings.n_breaks, cfg.min_points)?,
            };
            let support = crate::regime::assess_break_support(&s, &model, cfg)?;
            emit_result("breaks", &ctx, args.common.out.as_deref(), BreakAnalysis { model, support })
        }
        Command::Stagnation(common) => {
            let ctx = load(&common)?;
            let s = ctx.windowed();
            let verdict = test_stagnation(&s, whole_span(&s)?, &ctx.settings.thresholds)?;
            emit_result("stagnation", &ctx, common.out.as_deref(), verdict)
        }
        Command::Diverge(args) => {
            let mut ctx = load(&args.common)?;
            if let Some(b) = args.baseline {
                ctx.settings.baseline = b;
            }
            if let Some(y) = args.search_from {
                ctx.settings.search_from = y;
            }
            let report = detect_divergence(
                &ctx.windowed(),
                ctx.settings.baseline,
                ctx.settings.search_from,
                &ctx.settings.thresholds,
            )?;
            emit_result("diverge", &ctx, args.common.out.as_deref(), report)
        }
        Command::Compare(args) => {
            let mut ctx = load(&args.common)?;
            apply_hypotheses(&mut ctx.settings, &args.hyp)?;
            let hypotheses = ctx.settings.resolve_hypotheses()?;
            let ranking = compare_hypotheses(&ctx.windowed(), &hypotheses, ctx.settings.thresholds.min_points);
            for h in ranking.iter().filter(|h| h.error.is_some()) {
                eprintln!("warning: hypothesis {}: {}", h.name, h.error.as_deref().unwrap_or(""));
            }
            emit_result("compare", &ctx, args.common.out.as_deref(), ranking)
        }
        Command::Plot(args) => {
            let mut ctx = load(&args.common)?;
            if let Some(o) = &args.overlay {
                ctx.settings.overlay_windows = o.clone();
            }
            if args.no_overlays {
                ctx.settings.overlay_windows.clear();
            }
            if let Some(a) = &args.annotate {
                ctx.settings.annotations = a.clone();
            }
            ctx.settings.log_values |= args.log_values;
            let range = match ctx.settings.window {
                Some(w) => w,
                None => whole_span(&ctx.series)?,
            };
            let mut spec = plot_spec(&ctx.series, args.space, range, &ctx.settings);
            if let Some(t) = &args.title {
                spec.title = t.clone();
            }
            emit(args.common.out.as_deref(), &render_plot(&spec)?)
        }
        Command::Report(args) => {
            let mut ctx = load(&args.common)?;
            apply_hypotheses(&mut ctx.settings, &args.hyp)?;
            let st = &mut ctx.settings;
            if let Some(w) = args.breaks_window {
                st.breaks_window = w;
            }
            if let Some(n) = args.n_breaks {
                st.n_breaks = n;
            }
            if let Some(b) = args.baseline {
                st.baseline = b;
            }
            if let Some(y) = args.search_from {
                st.search_from = y;
            }
            st.log_values |= args.log_values;

            let series = ctx.windowed();
            let report = build_report(&series, ctx.provenance.clone(), &ctx.settings)?;
            for e in report.section_errors() {
                eprintln!("warning: {e}");
            }
            fs::create_dir_all(&args.out_dir)
                .map_err(|e| Error::Io(format!("{}: {e}", args.out_dir.display())))?;
            let mut written = Vec::new();
            let mut write = |name: &str, text: &str| -> Result<()> {
                let path = args.out_dir.join(name);
                emit(Some(&path), text)?;
                written.push(path);
                Ok(())
            };
            write("report.json", &write_report(&report, ReportFormat::Structured))?;
            write("report.txt", &write_report(&report, ReportFormat::Human))?;
            for (name, spec) in figure_specs(&series, &ctx.settings)? {
                match render_plot(&spec) {
                    Ok(svg) => write(&name, &svg)?,
                    Err(e) => eprintln!("warning: figure {name}: {e}"),
                }
            }
            for p in written {
                eprintln!("wrote {}", p.display());
            }
            Ok(())
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
