//! The `fit`, `generate`, `evaluate` and `report` commands.

use log::{info, warn};
use stormgen_core::calendar::REFERENCE_YEAR;
use stormgen_core::extremes::{
    default_gpd_threshold, define_extreme_monthly, degenerate_warning, empirical_annual_extreme_probability,
    prob_extreme_from_gev,
};
use stormgen_core::generator::FittedBaseline;
use stormgen_core::intensity::IntensityConfig;
use stormgen_core::{
    calibrate, classify, define_extreme, empirical_extreme_probability, fit_annual_ar, fit_climatology, fit_gev,
    fit_gpd, forecast_annual, prob_extreme_from_fit, tercile_to_target, EnsembleSpec, MeanForecast, Month,
    OccurrenceState, Period, ScenarioSet,
};

use crate::bundle::{FitSettings, InputSummary, ModelBundle, SCHEMA_VERSION};
use crate::config::{CalibrationSource, OutputFormat, PSource, PipelineConfig};
use crate::error::{PipelineError, Result};
use crate::evaluate::{evaluate, write_evaluation, Evaluation, EvaluationOptions};
use crate::ingest::load_input;
use crate::output::{read_ndjson_file, read_scenario_dir, write_ndjson_file, write_scenario_dir};
use crate::parallel::{default_workers, generate_ensemble_parallel};
use crate::report::{write_report, REPORT_FILE};

fn domain(component: &'static str) -> impl FnOnce(stormgen_core::Error) -> PipelineError {
    PipelineError::domain(component)
}

/// Fits every component on the configured input and writes the bundle.
pub fn cmd_fit(config: &PipelineConfig) -> Result<ModelBundle> {
    config.validate()?;
    let input_path = config.input_path()?;
    let input = load_input(input_path, &config.csv)?;
    let series = &input.ingested.series;
    let mut warnings = Vec::new();
    if !input.ingested.filled.is_empty() {
        warnings.push(format!("{} missing days filled with 0 mm", input.ingested.filled.len()));
    }

    let definition = if config.monthly_thresholds {
        define_extreme_monthly(series, config.extreme_percentile, config.wet_threshold)
    } else {
        define_extreme(series, config.extreme_percentile, config.wet_threshold)
    }
    .map_err(domain("extreme definition"))?;
    warnings.extend(degenerate_warning(&definition));

    let baseline = FittedBaseline::fit(
        series,
        definition.clone(),
        config.generator.smoothing,
        &IntensityConfig {
            knn_k: config.generator.knn_k,
            bandwidth: config.generator.bandwidth,
        },
    );
    baseline.markov.validate().map_err(domain("markov"))?;
    for month in Month::all() {
        if !baseline.markov.is_fit(month) {
            warnings.push(format!("month {month} absent from the record; occurrence model unfit"));
            continue;
        }
        for state in [OccurrenceState::Wet, OccurrenceState::Extreme] {
            match baseline.intensity.pool(month, state) {
                Some(pool) if pool.borrowed && !pool.is_empty() => {
                    warnings.push(format!("month {month}: no {state:?} days, amounts borrowed from other months"))
                }
                Some(pool) if pool.is_empty() && !definition.degenerate => {
                    warnings.push(format!("month {month}: no {state:?} analogues anywhere in the record"))
                }
                _ => {}
            }
        }
    }

    let climatology = fit_climatology(series).map_err(domain("climatology"))?;
    let annual_ar = match fit_annual_ar(&climatology.annual_totals, config.ar.order, config.ar.differencing) {
        Ok(m) => Some(m),
        Err(e) => {
            warnings.push(format!("annual AR model not fitted: {e}"));
            None
        }
    };
    let gpd = match default_gpd_threshold(series, config.wet_threshold).and_then(|u| fit_gpd(series, u)) {
        Ok(f) => Some(f),
        Err(e) => {
            warnings.push(format!("GPD not fitted: {e}"));
            None
        }
    };
    let gev = match fit_gev(series, config.gev_block) {
        Ok(f) => Some(f),
        Err(e) => {
            warnings.push(format!("GEV not fitted: {e}"));
            None
        }
    };

    let states = classify(series, &definition);
    let empirical_monthly: [Option<f64>; 12] = std::array::from_fn(|i| {
        empirical_extreme_probability(&states, Month::from_index(i).expect("month index")).ok().map(|p| p.p)
    });
    let empirical_annual = empirical_annual_extreme_probability(&states).ok();

    for w in &warnings {
        warn!("{w}");
    }
    let bundle = ModelBundle {
        schema_version: SCHEMA_VERSION,
        fingerprint: input.fingerprint.clone(),
        input: InputSummary {
            station_id: series.station_id().to_string(),
            start_date: series.start_date(),
            end_date: series.end_date(),
            n_days: series.len(),
            filled_days: input.ingested.filled.len(),
        },
        settings: FitSettings {
            extreme_percentile: config.extreme_percentile,
            wet_threshold: config.wet_threshold,
            monthly_thresholds: config.monthly_thresholds,
            smoothing: config.generator.smoothing,
            knn_k: config.generator.knn_k,
            bandwidth: config.generator.bandwidth,
            ar_order: config.ar.order,
            ar_differencing: config.ar.differencing,
            gev_block: config.gev_block,
        },
        definition,
        markov: baseline.markov,
        intensity: baseline.intensity,
        climatology,
        annual_ar,
        gpd,
        gev,
        empirical_monthly,
        empirical_annual,
        warnings,
    };
    let path = config.bundle_path();
    bundle.save(&path)?;
    info!("wrote {}", path.display());
    Ok(bundle)
}

/// Extreme-scenario probability for the target period.
pub fn resolve_p(source: PSource, bundle: &ModelBundle, period: &Period) -> Result<f64> {
    let missing = |what: &str| PipelineError::domain("probability")(stormgen_core::Error::InsufficientData(what.into()));
    let days = period.span().1;
    match source {
        PSource::Fixed(p) => Ok(p),
        PSource::Empirical => match period.month() {
            Some(m) => bundle.empirical_monthly[m.index()]
                .ok_or_else(|| missing(&format!("no complete month {m} in the record"))),
            None => bundle.empirical_annual.ok_or_else(|| missing("no complete year in the record")),
        },
        PSource::Gpd => {
            let fit = bundle.gpd.as_ref().ok_or_else(|| missing("bundle has no GPD fit"))?;
            prob_extreme_from_fit(fit, &bundle.definition, days)
                .map(|p| p.p)
                .map_err(domain("probability"))
        }
        PSource::Gev => {
            let fit = bundle.gev.as_ref().ok_or_else(|| missing("bundle has no GEV fit"))?;
            Ok(prob_extreme_from_gev(fit, &bundle.definition, days).p)
        }
    }
}

/// Scales an annual forecast to a monthly target by the month's
/// climatological share of the annual total.
fn to_period(annual: MeanForecast, bundle: &ModelBundle, period: Period) -> MeanForecast {
    let share = match period.month() {
        Some(m) => bundle.climatology.monthly_share(m, period.year().unwrap_or(REFERENCE_YEAR)),
        None => 1.0,
    };
    MeanForecast {
        target_period: period,
        mean: annual.mean * share,
        sd: annual.sd * share,
        ..annual
    }
}

/// Calibration target for the ensemble's period, if calibration is on.
pub fn calibration_target(source: CalibrationSource, bundle: &ModelBundle, period: Period) -> Result<Option<MeanForecast>> {
    let clim = &bundle.climatology;
    Ok(match source {
        CalibrationSource::None => None,
        CalibrationSource::Climatology => Some(clim.target(period)),
        CalibrationSource::ArModel => {
            let model = bundle.annual_ar.as_ref().ok_or_else(|| {
                PipelineError::domain("calibration")(stormgen_core::Error::InsufficientData(
                    "bundle has no annual AR model".into(),
                ))
            })?;
            let history = &clim.annual_totals;
            let last = history.last().map(|&(y, _)| y).unwrap_or(REFERENCE_YEAR);
            let year = period.year().unwrap_or(last + 1);
            if year <= last {
                return Err(PipelineError::Usage(format!(
                    "ar_model calibration needs a target year after {last}, the last fitted year"
                )));
            }
            let forecasts =
                forecast_annual(model, history, (year - last) as usize).map_err(domain("calibration"))?;
            let annual = forecasts.last().cloned().expect("horizon >= 1");
            Some(to_period(annual, bundle, period))
        }
        CalibrationSource::Tercile(category) => Some(to_period(tercile_to_target(category, clim), bundle, period)),
    })
}

pub struct Generated {
    pub set: ScenarioSet,
    pub extreme_count: usize,
}

/// Loads the bundle, generates (and optionally calibrates) the ensemble and
/// writes it.
pub fn cmd_generate(config: &PipelineConfig, force: bool) -> Result<Generated> {
    config.validate()?;
    let bundle = ModelBundle::load(&config.bundle_path())?;
    match config.input.as_deref() {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
            let input = crate::ingest::fingerprint(&bytes);
            if input != bundle.fingerprint {
                if !force {
                    return Err(PipelineError::FingerprintMismatch {
                        bundle: bundle.fingerprint.clone(),
                        input,
                    });
                }
                warn!("bundle fingerprint mismatch ignored (--force)");
            }
        }
        None => info!("no input configured; fingerprint not checked"),
    }

    let period = config.ensemble.target_period;
    let p = resolve_p(config.ensemble.p_extreme, &bundle, &period)?;
    let mut spec = EnsembleSpec::new(config.ensemble.n_scenarios, p, period, config.ensemble.master_seed)
        .map_err(domain("ensemble"))?;
    let target = calibration_target(config.calibration, &bundle, period)?;
    spec.calibration_target = target.clone();

    let baseline = bundle.baseline();
    let generator = baseline.generator().map_err(domain("generator"))?;
    let workers = config.workers.unwrap_or_else(default_workers);
    let mut set = generate_ensemble_parallel(&spec, &generator, workers).map_err(domain("ensemble"))?;
    if let Some(target) = &target {
        set = calibrate(&set, target, &generator).map_err(domain("calibration"))?;
    }

    let path = config.scenario_path();
    match config.output_format {
        OutputFormat::Directory => {
            write_scenario_dir(&path, &set, &bundle.fingerprint)?;
        }
        OutputFormat::Ndjson => write_ndjson_file(&path, &set, &bundle.fingerprint)?,
    }
    info!(
        "wrote {} scenarios ({} extreme) to {}",
        set.len(),
        set.extreme_count(),
        path.display()
    );
    Ok(Generated {
        extreme_count: set.extreme_count(),
        set,
    })
}

pub fn read_scenarios(config: &PipelineConfig) -> Result<ScenarioSet> {
    let path = config.scenario_path();
    Ok(match config.output_format {
        OutputFormat::Directory => read_scenario_dir(&path)?.0,
        OutputFormat::Ndjson => read_ndjson_file(&path)?.0,
    })
}

/// Scores the written scenarios and writes the evaluation files.
pub fn cmd_evaluate(config: &PipelineConfig) -> Result<Evaluation> {
    config.validate()?;
    let bundle = ModelBundle::load(&config.bundle_path())?;
    let historical = load_input(config.input_path()?, &config.csv)?.ingested.series;
    let holdout = match config.holdout.as_deref() {
        Some(path) => Some(load_input(path, &config.csv)?.ingested.series),
        None => None,
    };
    let set = read_scenarios(config)?;
    let evaluation = evaluate(
        &set,
        &historical,
        holdout.as_ref(),
        &bundle.definition,
        &EvaluationOptions {
            qq_points: config.evaluation.qq_points,
            wet_only: config.evaluation.wet_only,
        },
    )?;
    write_evaluation(&config.evaluation_dir(), &evaluation)?;
    Ok(evaluation)
}

/// Renders `report.txt` from the evaluation files and returns its text.
pub fn cmd_report(config: &PipelineConfig) -> Result<String> {
    write_report(&config.evaluation_dir(), &config.output_dir.join(REPORT_FILE))
}
