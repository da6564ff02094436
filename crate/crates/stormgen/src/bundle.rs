//! Fitted-model bundle: one JSON document holding every fitted component and
//! the fingerprint of the data it was fitted on.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use stormgen_core::extremes::{BlockLength, GevFit, GpdFit};
use stormgen_core::generator::FittedBaseline;
use stormgen_core::{AnnualArModel, ClimatologyModel, ExtremeDefinition, MonthlyMarkovModel};

use crate::error::{PipelineError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub station_id: String,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub n_days: usize,
    pub filled_days: usize,
}

/// Settings the bundle was fitted with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSettings {
    pub extreme_percentile: f64,
    pub wet_threshold: f64,
    pub monthly_thresholds: bool,
    pub smoothing: f64,
    pub knn_k: Option<usize>,
    pub bandwidth: Option<f64>,
    pub ar_order: usize,
    pub ar_differencing: u8,
    pub gev_block: BlockLength,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub schema_version: u32,
    /// SHA-256 of the input file bytes, hex encoded.
    pub fingerprint: String,
    pub input: InputSummary,
    pub settings: FitSettings,
    pub definition: ExtremeDefinition,
    pub markov: MonthlyMarkovModel,
    pub intensity: stormgen_core::IntensityModel,
    pub climatology: ClimatologyModel,
    /// Absent when there are too few complete years.
    pub annual_ar: Option<AnnualArModel>,
    pub gpd: Option<GpdFit>,
    pub gev: Option<GevFit>,
    /// Historical fraction of complete months of each calendar month that
    /// contain an extreme day; `None` for months never seen complete.
    pub empirical_monthly: [Option<f64>; 12],
    pub empirical_annual: Option<f64>,
    pub warnings: Vec<String>,
}

impl ModelBundle {
    pub fn baseline(&self) -> FittedBaseline {
        FittedBaseline {
            markov: self.markov.clone(),
            intensity: self.intensity.clone(),
            definition: self.definition.clone(),
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        self.definition.validate().map_err(|e| format!("definition: {e}"))?;
        self.markov.validate().map_err(|e| format!("markov: {e}"))?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("bundle serializes");
        text.push('\n');
        text
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
        }
        std::fs::write(path, self.to_json()).map_err(|e| PipelineError::io(path, e))
    }

    /// Reads and validates a bundle.
    pub fn load(path: &Path) -> Result<ModelBundle> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let bundle: ModelBundle =
            serde_json::from_str(&text).map_err(|e| PipelineError::format(path, e.to_string()))?;
        bundle.validate().map_err(|m| PipelineError::format(path, m))?;
        Ok(bundle)
    }
}
