//! Pipeline configuration: a JSON document plus command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use stormgen_core::extremes::BlockLength;
use stormgen_core::{Period, Tercile};

use crate::error::{PipelineError, Result};
use crate::ingest::CsvOptions;

/// Where the ensemble's extreme-scenario probability comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PSource {
    Fixed(f64),
    /// Historical frequency of extreme-containing periods.
    Empirical,
    Gpd,
    Gev,
}

impl FromStr for PSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "from:empirical" => Ok(PSource::Empirical),
            "from:gpd" => Ok(PSource::Gpd),
            "from:gev" => Ok(PSource::Gev),
            _ => s
                .parse::<f64>()
                .map(PSource::Fixed)
                .map_err(|_| format!("invalid p_extreme {s:?}; expected a number or from:empirical|from:gpd|from:gev")),
        }
    }
}

impl fmt::Display for PSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PSource::Fixed(p) => write!(f, "{p}"),
            PSource::Empirical => f.write_str("from:empirical"),
            PSource::Gpd => f.write_str("from:gpd"),
            PSource::Gev => f.write_str("from:gev"),
        }
    }
}

impl Serialize for PSource {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PSource::Fixed(p) => s.serialize_f64(*p),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for PSource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(p) => Ok(PSource::Fixed(p)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Source of the calibration target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CalibrationSource {
    None,
    Climatology,
    ArModel,
    Tercile(Tercile),
}

impl FromStr for CalibrationSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "none" => CalibrationSource::None,
            "climatology" => CalibrationSource::Climatology,
            "ar_model" => CalibrationSource::ArModel,
            "tercile:below" => CalibrationSource::Tercile(Tercile::Below),
            "tercile:near" => CalibrationSource::Tercile(Tercile::Near),
            "tercile:above" => CalibrationSource::Tercile(Tercile::Above),
            _ => {
                return Err(format!(
                    "invalid calibration {s:?}; expected none|climatology|ar_model|tercile:below|tercile:near|tercile:above"
                ))
            }
        })
    }
}

impl fmt::Display for CalibrationSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CalibrationSource::None => "none",
            CalibrationSource::Climatology => "climatology",
            CalibrationSource::ArModel => "ar_model",
            CalibrationSource::Tercile(Tercile::Below) => "tercile:below",
            CalibrationSource::Tercile(Tercile::Near) => "tercile:near",
            CalibrationSource::Tercile(Tercile::Above) => "tercile:above",
        })
    }
}

macro_rules! text_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_string())
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

text_serde!(CalibrationSource);

mod period_text {
    use super::*;

    pub fn serialize<S: Serializer>(p: &Period, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&p.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Period, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    /// One CSV per scenario plus `manifest.json`.
    #[default]
    Directory,
    /// A single newline-delimited JSON stream.
    Ndjson,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSettings {
    pub knn_k: Option<usize>,
    pub smoothing: f64,
    pub bandwidth: Option<f64>,
}

impl Default for GeneratorSettings {
    fn default() -> Self {
        GeneratorSettings {
            knn_k: None,
            smoothing: stormgen_core::markov::DEFAULT_SMOOTHING,
            bandwidth: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArSettings {
    pub order: usize,
    pub differencing: u8,
}

impl Default for ArSettings {
    fn default() -> Self {
        ArSettings {
            order: 1,
            differencing: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSettings {
    pub n_scenarios: usize,
    pub p_extreme: PSource,
    #[serde(with = "period_text")]
    pub target_period: Period,
    pub master_seed: u64,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        EnsembleSettings {
            n_scenarios: 100,
            p_extreme: PSource::Empirical,
            target_period: Period::MonthOfYear {
                month: stormgen_core::Month::JANUARY,
            },
            master_seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationSettings {
    pub qq_points: usize,
    /// Pool only days at or above the wet threshold.
    pub wet_only: bool,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        EvaluationSettings {
            qq_points: 19,
            wet_only: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    /// Held-out observations for CRPS and Brier scores.
    pub holdout: Option<PathBuf>,
    pub csv: CsvOptions,
    pub extreme_percentile: f64,
    pub wet_threshold: f64,
    pub monthly_thresholds: bool,
    pub generator: GeneratorSettings,
    pub ar: ArSettings,
    pub gev_block: BlockLength,
    pub ensemble: EnsembleSettings,
    pub calibration: CalibrationSource,
    pub output_dir: PathBuf,
    /// Defaults to `<output_dir>/bundle.json`.
    pub bundle: Option<PathBuf>,
    pub output_format: OutputFormat,
    /// Defaults to the number of available cores.
    pub workers: Option<usize>,
    pub evaluation: EvaluationSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            holdout: None,
            csv: CsvOptions::default(),
            extreme_percentile: 0.95,
            wet_threshold: stormgen_core::series::DEFAULT_WET_THRESHOLD,
            monthly_thresholds: false,
            generator: GeneratorSettings::default(),
            ar: ArSettings::default(),
            gev_block: BlockLength::default(),
            ensemble: EnsembleSettings::default(),
            calibration: CalibrationSource::None,
            output_dir: PathBuf::from("out"),
            bundle: None,
            output_format: OutputFormat::default(),
            workers: None,
            evaluation: EvaluationSettings::default(),
        }
    }
}

/// Values given on the command line; each one replaces the config value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub holdout: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub bundle: Option<PathBuf>,
    pub workers: Option<usize>,
    pub n_scenarios: Option<usize>,
    pub p_extreme: Option<PSource>,
    pub target_period: Option<Period>,
    pub calibration: Option<CalibrationSource>,
}

impl PipelineConfig {
    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut config: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| PipelineError::format(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        config.input.as_mut().map(rebase);
        config.holdout.as_mut().map(rebase);
        config.bundle.as_mut().map(rebase);
        rebase(&mut config.output_dir);
        Ok(config)
    }

    pub fn apply(&mut self, o: Overrides) {
        if o.input.is_some() {
            self.input = o.input;
        }
        if o.holdout.is_some() {
            self.holdout = o.holdout;
        }
        if let Some(seed) = o.seed {
            self.ensemble.master_seed = seed;
        }
        if let Some(out) = o.out {
            self.output_dir = out;
        }
        if o.bundle.is_some() {
            self.bundle = o.bundle;
        }
        if o.workers.is_some() {
            self.workers = o.workers;
        }
        if let Some(n) = o.n_scenarios {
            self.ensemble.n_scenarios = n;
        }
        if let Some(p) = o.p_extreme {
            self.ensemble.p_extreme = p;
        }
        if let Some(t) = o.target_period {
            self.ensemble.target_period = t;
        }
        if let Some(c) = o.calibration {
            self.calibration = c;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(PipelineError::Usage(format!("config: {m}")));
        if !(self.extreme_percentile > 0.0 && self.extreme_percentile < 1.0) {
            return fail(format!("extreme_percentile {} outside (0, 1)", self.extreme_percentile));
        }
        if !(self.wet_threshold > 0.0 && self.wet_threshold.is_finite()) {
            return fail(format!("wet_threshold {} must be positive", self.wet_threshold));
        }
        if !(self.generator.smoothing > 0.0 && self.generator.smoothing.is_finite()) {
            return fail(format!("generator.smoothing {} must be positive", self.generator.smoothing));
        }
        if self.generator.knn_k == Some(0) {
            return fail("generator.knn_k must be at least 1".into());
        }
        if let Some(h) = self.generator.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return fail(format!("generator.bandwidth {h} must be positive"));
            }
        }
        if self.ar.order == 0 || self.ar.differencing > 1 {
            return fail("ar.order must be >= 1 and ar.differencing 0 or 1".into());
        }
        if let BlockLength::Days { days: 0 } = self.gev_block {
            return fail("gev_block.days must be at least 1".into());
        }
        if self.ensemble.n_scenarios == 0 {
            return fail("ensemble.n_scenarios must be at least 1".into());
        }
        if let PSource::Fixed(p) = self.ensemble.p_extreme {
            if !(0.0..=1.0).contains(&p) {
                return fail(format!("ensemble.p_extreme {p} outside [0, 1]"));
            }
        }
        if self.workers == Some(0) {
            return fail("workers must be at least 1".into());
        }
        if self.evaluation.qq_points < 2 {
            return fail("evaluation.qq_points must be at least 2".into());
        }
        Ok(())
    }

    pub fn bundle_path(&self) -> PathBuf {
        self.bundle.clone().unwrap_or_else(|| self.output_dir.join("bundle.json"))
    }

    pub fn scenario_path(&self) -> PathBuf {
        match self.output_format {
            OutputFormat::Directory => self.output_dir.join("scenarios"),
            OutputFormat::Ndjson => self.output_dir.join("scenarios.ndjson"),
        }
    }

    pub fn evaluation_dir(&self) -> PathBuf {
        self.output_dir.join("evaluation")
    }

    pub fn input_path(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| PipelineError::Usage("no input file; set \"input\" in the config or pass --input".into()))
    }
}
