//! Human-readable roll-up of the files written by `evaluate`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{PipelineError, Result};
use crate::evaluate::{EvaluationSummary, Score, QQ_FILE, SPELLS_FILE, SUMMARY_FILE};
use crate::output::sig9;

pub const REPORT_FILE: &str = "report.txt";

fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))
}

fn score_line(name: &str, score: &Score, unit: &str) -> String {
    match score {
        Score::Computed { value, n_observations } => {
            format!("{name}: {}{unit} over {n_observations} held-out periods", sig9(*value))
        }
        Score::Skipped { reason } => format!("{name}: skipped ({reason})"),
    }
}

fn table(out: &mut String, csv_text: &str) {
    let rows: Vec<Vec<&str>> = csv_text.lines().map(|l| l.split(',').collect()).collect();
    let cols = rows.iter().map(|r| r.len()).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.len()).max().unwrap_or(0))
        .collect();
    for row in rows {
        let cells: Vec<String> = row.iter().enumerate().map(|(c, s)| format!("{s:>w$}", w = widths[c])).collect();
        let _ = writeln!(out, "  {}", cells.join("  "));
    }
}

/// Builds the report text from an evaluation directory.
pub fn render(evaluation_dir: &Path) -> Result<String> {
    let summary_path = evaluation_dir.join(SUMMARY_FILE);
    let summary: EvaluationSummary = serde_json::from_str(&read(evaluation_dir, SUMMARY_FILE)?)
        .map_err(|e| PipelineError::format(&summary_path, e.to_string()))?;
    let qq = read(evaluation_dir, QQ_FILE)?;
    let spells = read(evaluation_dir, SPELLS_FILE)?;

    let mut out = String::new();
    let _ = writeln!(out, "stormgen evaluation report");
    let _ = writeln!(out, "target period: {}", summary.target_period);
    let _ = writeln!(
        out,
        "scenarios: {} ({} with an extreme day, {} without)",
        summary.n_scenarios,
        summary.extreme_scenarios,
        summary.n_scenarios - summary.extreme_scenarios
    );
    let _ = writeln!(
        out,
        "pooled days: simulated {}, historical {} ({})",
        summary.pool.simulated,
        summary.pool.historical,
        if summary.pool.wet_only { "wet days only" } else { "all days" }
    );
    let _ = writeln!(out, "KS distance: {}", sig9(summary.ks));
    let _ = writeln!(out, "{}", score_line("CRPS", &summary.crps, " mm"));
    let _ = writeln!(out, "{}", score_line("Brier", &summary.brier, ""));
    let _ = writeln!(out);
    let _ = writeln!(out, "quantiles (mm/day):");
    table(&mut out, &qq);
    let _ = writeln!(out);
    let _ = writeln!(out, "spells (days):");
    table(&mut out, &spells);
    Ok(out)
}

pub fn write_report(evaluation_dir: &Path, path: &Path) -> Result<String> {
    let text = render(evaluation_dir)?;
    fs::write(path, &text).map_err(|e| PipelineError::io(path, e))?;
    Ok(text)
}
