mod common;

use std::path::Path;
use std::process::{Command, Output};

use hypergrowth::report::fit_window;
use hypergrowth::{search_breakpoints, YearRange};
use serde_json::Value;

use common::{africa, agree_sig, fixture_path};

fn hypergrowth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypergrowth"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture() -> String {
    fixture_path().display().to_string()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn fit_prints_a_fit_record() {
    let out = hypergrowth(&["fit", "--input", &fixture(), "--window", "1:1820"]);
    let doc = stdout_json(&out);
    assert_eq!(doc["command"], "fit");
    let expected = fit_window(&africa(), YearRange::new(1, 1820).unwrap()).unwrap();
    let r = &doc["result"];
    assert!(agree_sig(r["a"].as_f64().unwrap(), expected.line.a, 15));
    assert!(agree_sig(r["k"].as_f64().unwrap(), expected.line.k, 15));
    assert_eq!(r["n"].as_u64().unwrap() as usize, expected.line.n);
    assert!(r["singularity_year"].as_f64().is_some());
    assert_eq!(doc["config"]["window"], "1:1820");
    assert_eq!(doc["provenance"]["n_observations"].as_u64().unwrap() as usize, africa().len());
}

#[test]
fn breaks_reports_the_exhaustive_optimum() {
    let out = hypergrowth(&["breaks", "--input", &fixture(), "--window", "1:1913", "--n-breaks", "1"]);
    let doc = stdout_json(&out);
    let s = hypergrowth::window(&africa(), YearRange::new(1, 1913).unwrap());
    let best = search_breakpoints(&s, 1, 3).unwrap();
    assert_eq!(doc["result"]["model"]["breakpoints"][0].as_i64().unwrap(), best.breakpoints[0]);
    assert!(doc["result"]["support"]["relative_improvement"].as_f64().is_some());
}

#[test]
fn plot_writes_an_svg_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig2.svg");
    let out = hypergrowth(&[
        "plot",
        "--input",
        &fixture(),
        "--space",
        "reciprocal",
        "--window",
        "1500:2008",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let svg = std::fs::read_to_string(&path).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    let in_window = hypergrowth::window(&africa(), YearRange::new(1500, 2008).unwrap()).len();
    assert_eq!(svg.matches("<circle class=\"obs\"").count(), in_window);
}

#[test]
fn usage_errors_exit_1() {
    let out = hypergrowth(&["fit", "--input", &fixture(), "--bogus"]);
    assert_eq!(code(&out), 1);
    assert!(!out.stderr.is_empty());
    assert_eq!(code(&hypergrowth(&["frobnicate"])), 1);
    assert_eq!(code(&hypergrowth(&[])), 1);
    assert_eq!(code(&hypergrowth(&["--help"])), 0);
}

#[test]
fn bad_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "year,value\n1,5\n2,-3\n").unwrap();
    let out = hypergrowth(&["fit", "--input", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains('2'));
    assert!(out.stdout.is_empty());

    assert_eq!(code(&hypergrowth(&["fit", "--input", "/nonexistent/x.csv"])), 1);
    assert_eq!(code(&hypergrowth(&["fit", "--input", &fixture(), "--window", "3000:4000"])), 1);
    assert_eq!(code(&hypergrowth(&["fit", "--input", &fixture(), "--window", "1820:1"])), 1);
    assert_eq!(code(&hypergrowth(&["fit", "--input", &fixture(), "--format", "nope"])), 1);
}

#[test]
fn infeasible_analysis_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("small.csv");
    std::fs::write(&small, "year,value\n1,5\n2,6\n3,7\n4,8\n5,9\n").unwrap();
    let out = hypergrowth(&["breaks", "--input", small.to_str().unwrap(), "--n-breaks", "2"]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"window": "1:1820", "thresholds": {"critical_value": 50.0}}"#).unwrap();
    let base = ["stagnation", "--input", &fixture(), "--config", cfg.to_str().unwrap()];
    let doc = stdout_json(&hypergrowth(&base));
    assert_eq!(doc["config"]["window"], "1:1820");
    assert_eq!(doc["result"]["threshold"].as_f64(), Some(50.0));
    assert_eq!(doc["result"]["verdict"], "stagnation-compatible");

    let mut with_flag = base.to_vec();
    with_flag.extend(["--critical-value", "2"]);
    let doc = stdout_json(&hypergrowth(&with_flag));
    assert_eq!(doc["result"]["verdict"], "growth");

    std::fs::write(&cfg, r#"{"no_such_key": 1}"#).unwrap();
    assert_eq!(code(&hypergrowth(&base)), 1);
}

#[test]
fn config_echo_is_accepted_as_config() {
    let dir = tempfile::tempdir().unwrap();
    let doc = stdout_json(&hypergrowth(&["fit", "--input", &fixture(), "--window", "1:1700"]));
    let cfg = dir.path().join("echo.json");
    std::fs::write(&cfg, serde_json::to_string(&doc["config"]).unwrap()).unwrap();
    let again = stdout_json(&hypergrowth(&["fit", "--input", &fixture(), "--config", cfg.to_str().unwrap()]));
    assert_eq!(doc, again);
}

fn write_maddison(dir: &Path) -> std::path::PathBuf {
    let s = africa();
    let mut header = String::from("Region");
    let mut row = String::from("\"Total Africa\"");
    let mut other = String::from("Egypt");
    for o in s.observations() {
        header.push_str(&format!(",{}", o.year));
        row.push_str(&format!(",\"{}\"", o.value));
        other.push_str(",1");
    }
    let path = dir.join("maddison.csv");
    std::fs::write(&path, format!("{header}\n{other}\n{row}\n")).unwrap();
    path
}

#[test]
fn maddison_input_matches_canonical() {
    let dir = tempfile::tempdir().unwrap();
    let m = write_maddison(dir.path());
    let args = |input: &str, format: &str| {
        stdout_json(&hypergrowth(&["fit", "--input", input, "--format", format, "--window", "1:1820", "--name", "Africa"]))
    };
    let a = args(m.to_str().unwrap(), "maddison:Total Africa");
    let b = args(&fixture(), "canonical");
    assert_eq!(a["result"], b["result"]);

    let out = hypergrowth(&["fit", "--input", m.to_str().unwrap(), "--format", "maddison:Atlantis"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Total Africa"));
}

#[test]
fn diverge_and_compare_emit_results() {
    let d = hypergrowth(&["diverge", "--input", &fixture(), "--baseline", "1:1820", "--search-from", "1000"]);
    let doc = stdout_json(&d);
    assert!(doc["result"]["residual_trace"].as_array().is_some());

    let c = hypergrowth(&["compare", "--input", &fixture(), "--hypotheses", "galor-ldc"]);
    let doc = stdout_json(&c);
    assert_eq!(doc["result"][0]["name"], "galor-ldc");

    let out = hypergrowth(&["compare", "--input", &fixture(), "--hypotheses", "no-such"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn unit_flag_is_recorded() {
    let doc = stdout_json(&hypergrowth(&["fit", "--input", &fixture(), "--unit", "GK$ bn"]));
    assert_eq!(doc["provenance"]["unit"], "GK$ bn");
}
