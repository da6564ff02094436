//! Scenario-set persistence: a directory of CSVs with a manifest, or one
//! newline-delimited JSON stream.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use stormgen_core::ensemble::CalibrationReport;
use stormgen_core::generator::SYNTHETIC_STATION;
use stormgen_core::{DailySeries, EnsembleSpec, Scenario, ScenarioMeta, ScenarioSet};

use crate::error::{PipelineError, Result};
use crate::ingest::{read_daily, CsvOptions};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

/// Rounds to 9 significant digits. Zero and non-finite values pass through.
pub fn round9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Decimal text with at most 9 significant digits.
pub fn sig9(x: f64) -> String {
    format!("{}", round9(x))
}

pub fn scenario_file_name(index: usize) -> String {
    format!("scenario_{index:05}.csv")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    #[serde(flatten)]
    pub meta: ScenarioMeta,
    pub total_mm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub bundle_fingerprint: String,
    pub spec: EnsembleSpec,
    pub extreme_count: usize,
    pub regular_count: usize,
    pub forced_count: usize,
    pub calibration: Option<CalibrationReport>,
    pub scenarios: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(set: &ScenarioSet, bundle_fingerprint: &str) -> Manifest {
        let extreme = set.extreme_count();
        Manifest {
            schema_version: MANIFEST_VERSION,
            bundle_fingerprint: bundle_fingerprint.to_string(),
            spec: set.spec.clone(),
            extreme_count: extreme,
            regular_count: set.len() - extreme,
            forced_count: set.scenarios.iter().filter(|s| s.meta.forced).count(),
            calibration: set.calibration.clone(),
            scenarios: set
                .scenarios
                .iter()
                .map(|s| ManifestEntry {
                    file: scenario_file_name(s.meta.scenario_index),
                    meta: s.meta.clone(),
                    total_mm: round9(s.series.total()),
                })
                .collect(),
        }
    }
}

fn json_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable")
}

/// Writes `dir/scenario_NNNNN.csv` per scenario and `dir/manifest.json`.
/// Stale scenario files from an earlier run are removed first.
pub fn write_scenario_dir(dir: &Path, set: &ScenarioSet, bundle_fingerprint: &str) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    for entry in fs::read_dir(dir).map_err(|e| PipelineError::io(dir, e))? {
        let path = entry.map_err(|e| PipelineError::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if (name.starts_with("scenario_") && name.ends_with(".csv")) || name == MANIFEST_FILE {
            fs::remove_file(&path).map_err(|e| PipelineError::io(&path, e))?;
        }
    }
    for s in &set.scenarios {
        crate::ingest::write_daily_csv(&dir.join(scenario_file_name(s.meta.scenario_index)), &s.series)?;
    }
    let manifest = Manifest::new(set, bundle_fingerprint);
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::format(&path, e.to_string()))
}

pub fn read_scenario_dir(dir: &Path) -> Result<(ScenarioSet, Manifest)> {
    let manifest = read_manifest(dir)?;
    let options = CsvOptions::default();
    let mut scenarios = Vec::with_capacity(manifest.scenarios.len());
    for entry in &manifest.scenarios {
        let path = dir.join(&entry.file);
        let bytes = fs::read(&path).map_err(|e| PipelineError::io(&path, e))?;
        let series = read_daily(bytes.as_slice(), &options, SYNTHETIC_STATION)
            .map_err(|source| PipelineError::Ingest { path: path.clone(), source })?
            .series;
        scenarios.push(Scenario {
            meta: entry.meta.clone(),
            series,
        });
    }
    let set = ScenarioSet {
        spec: manifest.spec.clone(),
        scenarios,
        calibration: manifest.calibration.clone(),
    };
    Ok((set, manifest))
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum Record {
    Header {
        schema_version: u32,
        bundle_fingerprint: String,
        spec: EnsembleSpec,
        extreme_count: usize,
        calibration: Option<CalibrationReport>,
    },
    Scenario {
        #[serde(flatten)]
        meta: ScenarioMeta,
        start_date: NaiveDate,
        values: Vec<f64>,
    },
}

/// One header record, then one record per scenario, one JSON object per line.
pub fn write_ndjson<W: Write>(writer: W, set: &ScenarioSet, bundle_fingerprint: &str) -> std::io::Result<()> {
    let mut out = BufWriter::new(writer);
    let header = Record::Header {
        schema_version: MANIFEST_VERSION,
        bundle_fingerprint: bundle_fingerprint.to_string(),
        spec: set.spec.clone(),
        extreme_count: set.extreme_count(),
        calibration: set.calibration.clone(),
    };
    writeln!(out, "{}", json_line(&header))?;
    for s in &set.scenarios {
        let record = Record::Scenario {
            meta: s.meta.clone(),
            start_date: s.series.start_date(),
            values: s.series.values().to_vec(),
        };
        writeln!(out, "{}", json_line(&record))?;
    }
    out.flush()
}

pub fn write_ndjson_file(path: &Path, set: &ScenarioSet, bundle_fingerprint: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| PipelineError::io(path, e))?;
    write_ndjson(file, set, bundle_fingerprint).map_err(|e| PipelineError::io(path, e))
}

pub fn read_ndjson_file(path: &Path) -> Result<(ScenarioSet, String)> {
    let file = fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let bad = |line: usize, m: String| PipelineError::format(path, format!("line {line}: {m}"));
    let mut header = None;
    let mut scenarios = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Record>(&line).map_err(|e| bad(i + 1, e.to_string()))? {
            Record::Header {
                bundle_fingerprint,
                spec,
                calibration,
                ..
            } => header = Some((bundle_fingerprint, spec, calibration)),
            Record::Scenario { meta, start_date, values } => {
                let series = DailySeries::new(start_date, values, SYNTHETIC_STATION).map_err(|e| bad(i + 1, e.to_string()))?;
                scenarios.push(Scenario { meta, series });
            }
        }
    }
    let (fingerprint, spec, calibration) = header.ok_or_else(|| bad(1, "missing header record".into()))?;
    Ok((
        ScenarioSet {
            spec,
            scenarios,
            calibration,
        },
        fingerprint,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.0), "0");
        assert_eq!(sig9(-0.0), "0");
        assert_eq!(sig9(1.0), "1");
        assert_eq!(sig9(0.1), "0.1");
        assert_eq!(sig9(12.345678949), "12.3456789");
        assert_eq!(sig9(123456789012.0), "123456789000");
        assert_eq!(sig9(2.0 / 3.0), "0.666666667");
        assert_eq!(sig9(-1.5e-7), "-0.00000015");
    }
}
