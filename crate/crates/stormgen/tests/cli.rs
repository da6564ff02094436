use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn stormgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stormgen"))
        .args(args)
        .env_remove("STORMGEN_LOG")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_single_line_diagnostic(out: &Output) {
    let text = stderr(out);
    assert_eq!(text.lines().count(), 1, "{text}");
    assert!(text.starts_with("stormgen: error["), "{text}");
}

#[test]
fn missing_bundle_exits_two_and_names_the_path() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = stormgen(&["generate", "--out", out_dir]);
    assert_eq!(out.status.code(), Some(2));
    assert_single_line_diagnostic(&out);
    assert!(stderr(&out).contains(&dir.path().join("bundle.json").display().to_string()));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = stormgen(&["fit", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    assert_single_line_diagnostic(&out);
    assert!(stderr(&out).contains("error[usage]"));
}

#[test]
fn bad_probability_text_is_a_usage_error() {
    let out = stormgen(&["generate", "--p-extreme", "from:nowhere"]);
    assert_eq!(out.status.code(), Some(2));
    assert_single_line_diagnostic(&out);
}

#[test]
fn malformed_input_row_is_a_domain_error() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bad.csv");
    std::fs::write(&input, "date,precip_mm\n2001-01-01,1.0\n2001-01-02,-3\n").unwrap();
    let out = stormgen(&["fit", "--input", input.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_single_line_diagnostic(&out);
    assert!(stderr(&out).contains("negative precipitation at line 2"), "{}", stderr(&out));
}

#[test]
fn infeasible_conditioning_exits_nonzero_with_diagnostic() {
    let dir = TempDir::new().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    // threshold_2001 has no extreme day in January, so no January scenario
    // can hold one.
    let input = fixture("threshold_2001.csv");
    let fit = stormgen(&["fit", "--input", input.to_str().unwrap(), "--out", out_dir]);
    assert!(fit.status.success(), "{}", stderr(&fit));
    let out = stormgen(&["generate", "--out", out_dir, "--p-extreme", "1", "--period", "--01", "--scenarios", "5"]);
    assert_ne!(out.status.code(), Some(0));
    assert_single_line_diagnostic(&out);
}

#[test]
fn full_run_with_flags_and_config() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        format!(
            r#"{{
  "input": {:?},
  "output_dir": "run",
  "workers": 2,
  "ensemble": {{ "n_scenarios": 20, "p_extreme": 0.5, "target_period": "--01", "master_seed": 3 }}
}}"#,
            fixture("synthetic_1949_2010.csv")
        ),
    )
    .unwrap();
    let config = config.to_str().unwrap();
    for cmd in ["fit", "generate", "evaluate", "report"] {
        let out = stormgen(&[cmd, "--config", config, "--scenarios", "200", "--seed", "7"]);
        assert!(out.status.success(), "{cmd}: {}", stderr(&out));
    }
    let run = dir.path().join("run");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("scenarios/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["extreme_count"], 100);
    assert_eq!(manifest["regular_count"], 100);
    assert_eq!(manifest["spec"]["master_seed"], 7);
    assert!(run.join("report.txt").is_file());
}
