//! Conditioned ensembles: exactly `round_half_even(P * N)` of `N` scenarios
//! contain at least one extreme day.
//!
//! Scenario `i` is assigned the extreme class when `i < round_half_even(P N)`.
//! Each scenario is drawn by rejection: attempt `a` uses the seed
//! `derive_seed(master_seed, i, a)` and is kept when its extreme content
//! matches its class. After [`MAX_ATTEMPTS`] failures the last attempt is
//! edited into its class and flagged `forced`. Because every seed depends
//! only on `(master_seed, i, a)`, scenarios can be produced in any order or
//! in parallel with identical results.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::calendar::{Month, Period};
use crate::error::{Error, Result};
use crate::generator::ScenarioGenerator;
use crate::means::MeanForecast;
use crate::series::{DailySeries, OccurrenceState};

/// Rejection attempts per scenario before the class is forced.
pub const MAX_ATTEMPTS: u32 = 1000;

/// Scale-then-check rounds allowed in [`calibrate`].
pub const MAX_CALIBRATION_ROUNDS: u32 = 5;

/// Relative agreement between the calibrated ensemble mean and its target.
pub const CALIBRATION_TOLERANCE: f64 = 1e-9;

// Calibration round `r` draws replacement seeds from attempt numbers
// starting at `(r + 1) << CALIBRATION_ATTEMPT_SHIFT`.
const CALIBRATION_ATTEMPT_SHIFT: u32 = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n_scenarios: usize,
    /// Probability that a scenario contains at least one extreme day.
    pub p_extreme: f64,
    pub target_period: Period,
    pub calibration_target: Option<MeanForecast>,
    pub master_seed: u64,
}

impl EnsembleSpec {
    pub fn new(n_scenarios: usize, p_extreme: f64, target_period: Period, master_seed: u64) -> Result<Self> {
        let spec = EnsembleSpec {
            n_scenarios,
            p_extreme,
            target_period,
            calibration_target: None,
            master_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_scenarios == 0 {
            return Err(Error::OutOfRange {
                name: "scenario count",
                range: ">= 1",
                value: 0.0,
            });
        }
        if !(0.0..=1.0).contains(&self.p_extreme) {
            return Err(Error::OutOfRange {
                name: "extreme probability",
                range: "[0, 1]",
                value: self.p_extreme,
            });
        }
        Ok(())
    }

    /// Number of extreme-containing scenarios, `round_half_even(P * N)`.
    pub fn extreme_count(&self) -> usize {
        round_half_even(self.p_extreme * self.n_scenarios as f64).min(self.n_scenarios)
    }

    pub fn assigned_extreme(&self, index: usize) -> bool {
        index < self.extreme_count()
    }
}

/// Rounds to the nearest integer, ties to even. Negative input gives 0.
pub fn round_half_even(x: f64) -> usize {
    if !(x > 0.0) {
        return 0;
    }
    let floor = libm::floor(x);
    let diff = x - floor;
    let base = floor as usize;
    if diff > 0.5 || (diff == 0.5 && base % 2 == 1) {
        base + 1
    } else {
        base
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit seed for attempt `attempt` of scenario `index`.
pub fn derive_seed(master_seed: u64, index: u64, attempt: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ index) ^ attempt)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub scenario_index: usize,
    /// Seed of the attempt that produced the kept series.
    pub seed: u64,
    pub contains_extreme: bool,
    /// Class the scenario was assigned by the `P * N` split.
    pub assigned_extreme: bool,
    pub rejections_used: u32,
    pub forced: bool,
    #[serde(default)]
    pub calibration_regenerated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub meta: ScenarioMeta,
    pub series: DailySeries,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub target: MeanForecast,
    /// Product of the per-round scale factors.
    pub factor: f64,
    pub rounds: u32,
    pub regenerated: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub spec: EnsembleSpec,
    pub scenarios: Vec<Scenario>,
    pub calibration: Option<CalibrationReport>,
}

impl ScenarioSet {
    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn extreme_count(&self) -> usize {
        self.scenarios.iter().filter(|s| s.meta.contains_extreme).count()
    }

    /// Mean over scenarios of the period total, mm.
    pub fn mean_total(&self) -> f64 {
        if self.scenarios.is_empty() {
            return 0.0;
        }
        self.scenarios.iter().map(|s| s.series.total()).sum::<f64>() / self.scenarios.len() as f64
    }
}

fn span_months(period: &Period) -> Vec<Month> {
    let (start, n) = period.span();
    let mut months: Vec<Month> = start.iter_days().take(n).map(Month::of).collect();
    months.dedup();
    months
}

/// Rejects specs the generator cannot satisfy before any work is done.
pub fn check_feasible<G: ScenarioGenerator + ?Sized>(spec: &EnsembleSpec, generator: &G) -> Result<()> {
    spec.validate()?;
    if spec.extreme_count() > 0
        && !span_months(&spec.target_period)
            .into_iter()
            .any(|m| generator.supports(m, OccurrenceState::Extreme))
    {
        return Err(Error::ImpossibleClass(format!(
            "{} extreme scenarios requested for {} but no month in the period has extreme analogues",
            spec.extreme_count(),
            spec.target_period
        )));
    }
    Ok(())
}

/// Produces scenario `index` of the ensemble.
pub fn generate_member<G: ScenarioGenerator + ?Sized>(generator: &G, spec: &EnsembleSpec, index: usize) -> Result<Scenario> {
    member(generator, spec, index, 1.0, 0)
}

fn member<G: ScenarioGenerator + ?Sized>(
    generator: &G,
    spec: &EnsembleSpec,
    index: usize,
    scale: f64,
    attempt_base: u64,
) -> Result<Scenario> {
    let (start, n_days) = spec.target_period.span();
    let want = spec.assigned_extreme(index);
    let def = generator.definition();
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let seed = derive_seed(spec.master_seed, index as u64, attempt_base + u64::from(attempt));
        let series = generator.generate(start, n_days, seed, scale)?;
        if def.contains_extreme(&series) == want {
            return Ok(Scenario {
                meta: ScenarioMeta {
                    scenario_index: index,
                    seed,
                    contains_extreme: want,
                    assigned_extreme: want,
                    rejections_used: attempt,
                    forced: false,
                    calibration_regenerated: false,
                },
                series,
            });
        }
        last = Some((seed, series));
    }
    let (seed, series) = last.expect("at least one attempt");
    let force_seed = derive_seed(spec.master_seed, index as u64, attempt_base + u64::from(MAX_ATTEMPTS));
    let forced = generator.force_class(&series, want, force_seed, scale)?;
    let contains = def.contains_extreme(&forced);
    if contains != want {
        return Err(Error::ImpossibleClass(format!(
            "scenario {index} could not be forced into the {} class",
            if want { "extreme" } else { "non-extreme" }
        )));
    }
    Ok(Scenario {
        meta: ScenarioMeta {
            scenario_index: index,
            seed,
            contains_extreme: contains,
            assigned_extreme: want,
            rejections_used: MAX_ATTEMPTS,
            forced: true,
            calibration_regenerated: false,
        },
        series: forced,
    })
}

/// Generates the whole ensemble sequentially.
pub fn generate_ensemble<G: ScenarioGenerator + ?Sized>(spec: &EnsembleSpec, generator: &G) -> Result<ScenarioSet> {
    check_feasible(spec, generator)?;
    let scenarios = (0..spec.n_scenarios)
        .map(|i| generate_member(generator, spec, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioSet {
        spec: spec.clone(),
        scenarios,
        calibration: None,
    })
}

fn scaled(series: &DailySeries, factor: f64) -> Result<DailySeries> {
    let values = series
        .values()
        .iter()
        .map(|&v| if v != 0.0 { v * factor } else { 0.0 })
        .collect();
    series.with_values(values)
}

/// Rescales non-zero daily values so the ensemble mean period total matches
/// `target.mean`, keeping the extreme/non-extreme split intact.
///
/// The first round multiplies every scenario by `f = target / mean`. A
/// scenario whose class the scaling breaks is regenerated with the
/// cumulative factor applied inside the intensity sampler and is then held
/// fixed; later rounds rescale only the untouched scenarios so the total
/// still meets the target. Fails if a round cannot be completed without
/// breaking a class within [`MAX_CALIBRATION_ROUNDS`] rounds.
pub fn calibrate<G: ScenarioGenerator + ?Sized>(set: &ScenarioSet, target: &MeanForecast, generator: &G) -> Result<ScenarioSet> {
    let mean = set.mean_total();
    if !(target.mean > 0.0) || !(mean > 0.0) {
        return Err(Error::NonPositiveMean {
            target: target.mean,
            ensemble: mean,
        });
    }
    let def = generator.definition();
    let n = set.len() as f64;
    let mut current = set.clone();
    let mut frozen = alloc::vec![false; set.len()];
    let mut cumulative = 1.0;
    let mut regenerated = 0usize;

    for round in 0..MAX_CALIBRATION_ROUNDS {
        let (mut free_total, mut frozen_total) = (0.0, 0.0);
        for (s, &fixed) in current.scenarios.iter().zip(&frozen) {
            if fixed {
                frozen_total += s.series.total();
            } else {
                free_total += s.series.total();
            }
        }
        let factor = (target.mean - frozen_total / n) / (free_total / n);
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::CalibrationConflict);
        }
        cumulative *= factor;
        let mut offenders = Vec::new();
        for (i, scenario) in current.scenarios.iter_mut().enumerate() {
            if frozen[i] {
                continue;
            }
            scenario.series = scaled(&scenario.series, factor)?;
            scenario.meta.contains_extreme = def.contains_extreme(&scenario.series);
            if scenario.meta.contains_extreme != scenario.meta.assigned_extreme {
                offenders.push(i);
            }
        }
        if offenders.is_empty() {
            current.calibration = Some(CalibrationReport {
                target: target.clone(),
                factor: cumulative,
                rounds: round + 1,
                regenerated,
            });
            return Ok(current);
        }
        let base = u64::from(round + 1) << CALIBRATION_ATTEMPT_SHIFT;
        for i in offenders {
            let mut fresh = member(generator, &current.spec, current.scenarios[i].meta.scenario_index, cumulative, base)?;
            fresh.meta.calibration_regenerated = true;
            current.scenarios[i] = fresh;
            frozen[i] = true;
            regenerated += 1;
        }
    }
    Err(Error::CalibrationConflict)
}
