//! Conditioned stochastic generation of daily precipitation scenarios.
//!
//! The crate is organised around four interchangeable components:
//!
//! * [`means`]: climatology and an autoregressive annual forecaster that
//!   provide calibration targets, including tercile-category targets.
//! * [`extremes`]: extreme-event definitions and occurrence probabilities,
//!   from empirical frequencies and from L-moment GPD/GEV fits.
//! * [`markov`], [`intensity`], [`generator`] and [`ensemble`]: the baseline
//!   weather generator (per-month three-state Markov occurrence plus
//!   KNN-weighted kernel resampling of amounts) and ensemble generation
//!   that honours a prescribed fraction of extreme-containing scenarios.
//! * [`metrics`]: Brier score, CRPS, QQ data, KS distance and spell stats.
//!
//! Everything here is pure computation over in-memory data and builds
//! without `std`; file formats and the command line live in the
//! `stormgen` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod calendar;
pub mod ensemble;
pub mod error;
pub mod extremes;
pub mod generator;
pub mod intensity;
pub mod markov;
pub mod means;
pub mod metrics;
pub mod series;
mod stats;

pub use calendar::{Month, Period};
pub use ensemble::{
    calibrate, derive_seed, generate_ensemble, generate_member, round_half_even, EnsembleSpec,
    Scenario, ScenarioMeta, ScenarioSet,
};
pub use error::{Error, Result};
pub use extremes::{
    define_extreme, empirical_extreme_probability, fit_gev, fit_gpd, prob_extreme_from_fit,
    ExtremeProbability, GevFit, GpdFit,
};
pub use generator::{generate_scenario, BaselineGenerator, ScenarioGenerator};
pub use intensity::{sample_intensity, IntensityModel};
pub use markov::{fit_markov, simulate_occurrence, MonthlyMarkovModel};
pub use means::{
    fit_annual_ar, fit_climatology, forecast_annual, tercile_to_target, AnnualArModel,
    ClimatologyModel, MeanForecast, Tercile,
};
pub use metrics::{brier_score, crps_ensemble, ks_statistic, qq_data, spell_stats, QqData, SpellStats};
pub use series::{
    annual_totals, classify, empirical_quantile, monthly_slices, DailySeries, ExtremeDefinition,
    OccurrenceState, StateSequence,
};
