//! Verification of a generated ensemble against the historical record and,
//! when available, held-out observations.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stormgen_core::series::month_runs;
use stormgen_core::{
    annual_totals, brier_score, classify, crps_ensemble, ks_statistic, qq_data, spell_stats, DailySeries,
    ExtremeDefinition, Month, OccurrenceState, Period, QqData, ScenarioSet, SpellStats, StateSequence,
};

use crate::error::{PipelineError, Result};
use crate::output::{round9, sig9};

pub const SUMMARY_FILE: &str = "summary.json";
pub const QQ_FILE: &str = "qq.csv";
pub const SPELLS_FILE: &str = "spells.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Score {
    Computed { value: f64, n_observations: usize },
    Skipped { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolSizes {
    pub simulated: usize,
    pub historical: usize,
    pub wet_only: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub target_period: String,
    pub n_scenarios: usize,
    pub extreme_scenarios: usize,
    pub pool: PoolSizes,
    pub ks: f64,
    /// Ensemble of period totals against held-out period totals.
    pub crps: Score,
    /// Extreme-occurrence forecast against held-out outcomes.
    pub brier: Score,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub summary: EvaluationSummary,
    pub qq: QqData,
    pub simulated_spells: SpellStats,
    pub historical_spells: SpellStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationOptions {
    pub qq_points: usize,
    pub wet_only: bool,
}

/// Merges per-segment spell statistics. Spells never join across segments.
pub fn combine_spells(parts: &[SpellStats]) -> SpellStats {
    let dry: usize = parts.iter().map(|s| s.dry_spells).sum();
    let wet: usize = parts.iter().map(|s| s.wet_spells).sum();
    let weighted = |count: fn(&SpellStats) -> usize, mean: fn(&SpellStats) -> f64, n: usize| {
        if n == 0 {
            0.0
        } else {
            parts.iter().map(|s| count(s) as f64 * mean(s)).sum::<f64>() / n as f64
        }
    };
    SpellStats {
        dry_spells: dry,
        mean_dry_spell: weighted(|s| s.dry_spells, |s| s.mean_dry_spell, dry),
        max_dry_spell: parts.iter().map(|s| s.max_dry_spell).max().unwrap_or(0),
        wet_spells: wet,
        mean_wet_spell: weighted(|s| s.wet_spells, |s| s.mean_wet_spell, wet),
        max_wet_spell: parts.iter().map(|s| s.max_wet_spell).max().unwrap_or(0),
        extreme_days: parts.iter().map(|s| s.extreme_days).sum(),
    }
}

/// Contiguous pieces of `series` that fall in the target period's month, or
/// the whole series for a yearly target.
fn target_segments(series: &DailySeries, period: &Period) -> Vec<std::ops::Range<usize>> {
    match period.month() {
        None => core::iter::once(0..series.len()).collect(),
        Some(m) => month_runs(series.start_date(), series.len())
            .into_iter()
            .filter(|r| r.month == m)
            .map(|r| r.range())
            .collect(),
    }
}

/// Complete instances of the target period in `series`, as index ranges.
fn complete_instances(series: &DailySeries, period: &Period) -> Vec<std::ops::Range<usize>> {
    match period.month() {
        Some(m) => month_runs(series.start_date(), series.len())
            .into_iter()
            .filter(|r| r.month == m && !r.partial)
            .map(|r| r.range())
            .collect(),
        None => {
            let Ok(totals) = annual_totals(series) else {
                return Vec::new();
            };
            totals
                .totals
                .iter()
                .map(|&(year, _)| {
                    let first = chrono::NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
                    let start = (first - series.start_date()).num_days() as usize;
                    start..start + stormgen_core::calendar::days_in_year(year)
                })
                .collect()
        }
    }
}

fn sub_states(states: &StateSequence, range: std::ops::Range<usize>) -> StateSequence {
    let start = states.start_date + chrono::Days::new(range.start as u64);
    StateSequence::new(start, states.states[range].to_vec())
}

fn domain(component: &'static str) -> impl FnOnce(stormgen_core::Error) -> PipelineError {
    PipelineError::domain(component)
}

pub fn evaluate(
    set: &ScenarioSet,
    historical: &DailySeries,
    holdout: Option<&DailySeries>,
    def: &ExtremeDefinition,
    options: &EvaluationOptions,
) -> Result<Evaluation> {
    let period = set.spec.target_period;
    let keep = |v: f64| !options.wet_only || v >= def.wet_threshold;

    let simulated: Vec<f64> = set
        .scenarios
        .iter()
        .flat_map(|s| s.series.values().iter().copied())
        .filter(|&v| keep(v))
        .collect();
    let segments = target_segments(historical, &period);
    let hist_pool: Vec<f64> = segments
        .iter()
        .flat_map(|r| historical.values()[r.clone()].iter().copied())
        .filter(|&v| keep(v))
        .collect();
    let qq = qq_data(&simulated, &hist_pool, options.qq_points).map_err(domain("qq"))?;
    let ks = ks_statistic(&simulated, &hist_pool).map_err(domain("ks"))?;

    let simulated_spells = combine_spells(
        &set.scenarios
            .iter()
            .map(|s| spell_stats(&classify(&s.series, def)))
            .collect::<Vec<_>>(),
    );
    let hist_states = classify(historical, def);
    let historical_spells = combine_spells(
        &segments
            .iter()
            .map(|r| spell_stats(&sub_states(&hist_states, r.clone())))
            .collect::<Vec<_>>(),
    );

    let (crps, brier) = match holdout {
        None => {
            let skipped = Score::Skipped {
                reason: "no holdout data".into(),
            };
            (skipped.clone(), skipped)
        }
        Some(holdout) => {
            let instances = complete_instances(holdout, &period);
            if instances.is_empty() {
                let skipped = Score::Skipped {
                    reason: format!("holdout has no complete {period} period"),
                };
                (skipped.clone(), skipped)
            } else {
                let totals: Vec<f64> = set.scenarios.iter().map(|s| s.series.total()).collect();
                let mut crps_sum = 0.0;
                for r in &instances {
                    let obs: f64 = holdout.values()[r.clone()].iter().sum();
                    crps_sum += crps_ensemble(&totals, obs).map_err(domain("crps"))?;
                }
                let f = set.extreme_count() as f64 / set.len() as f64;
                let outcomes: Vec<bool> = instances
                    .iter()
                    .map(|r| {
                        let start = holdout.date_at(r.start);
                        holdout.values()[r.clone()]
                            .iter()
                            .enumerate()
                            .any(|(i, &v)| {
                                let date = start + chrono::Days::new(i as u64);
                                def.classify_value(v, Month::of(date)) == OccurrenceState::Extreme
                            })
                    })
                    .collect();
                let forecasts = vec![f; outcomes.len()];
                let b = brier_score(&forecasts, &outcomes).map_err(domain("brier"))?;
                (
                    Score::Computed {
                        value: round9(crps_sum / instances.len() as f64),
                        n_observations: instances.len(),
                    },
                    Score::Computed {
                        value: round9(b),
                        n_observations: instances.len(),
                    },
                )
            }
        }
    };

    Ok(Evaluation {
        summary: EvaluationSummary {
            target_period: period.to_string(),
            n_scenarios: set.len(),
            extreme_scenarios: set.extreme_count(),
            pool: PoolSizes {
                simulated: simulated.len(),
                historical: hist_pool.len(),
                wet_only: options.wet_only,
            },
            ks: round9(ks),
            crps,
            brier,
        },
        qq,
        simulated_spells,
        historical_spells,
    })
}

pub fn qq_csv(qq: &QqData) -> String {
    let mut out = String::from("prob,simulated_mm,historical_mm\n");
    for ((p, s), h) in qq.probs.iter().zip(&qq.sim_q).zip(&qq.hist_q) {
        let _ = writeln!(out, "{},{},{}", sig9(*p), sig9(*s), sig9(*h));
    }
    out
}

pub const SPELLS_HEADER: &str =
    "source,dry_spells,mean_dry_spell,max_dry_spell,wet_spells,mean_wet_spell,max_wet_spell,extreme_days";

pub fn spells_csv(simulated: &SpellStats, historical: &SpellStats) -> String {
    let mut out = format!("{SPELLS_HEADER}\n");
    for (name, s) in [("simulated", simulated), ("historical", historical)] {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{},{},{}",
            s.dry_spells,
            sig9(s.mean_dry_spell),
            s.max_dry_spell,
            s.wet_spells,
            sig9(s.mean_wet_spell),
            s.max_wet_spell,
            s.extreme_days
        );
    }
    out
}

pub fn write_evaluation(dir: &Path, evaluation: &Evaluation) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| PipelineError::io(&path, e))
    };
    write(QQ_FILE, qq_csv(&evaluation.qq))?;
    write(
        SPELLS_FILE,
        spells_csv(&evaluation.simulated_spells, &evaluation.historical_spells),
    )?;
    let mut summary = serde_json::to_string_pretty(&evaluation.summary).expect("summary serializes");
    summary.push('\n');
    write(SUMMARY_FILE, summary)
}
