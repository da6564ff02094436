//! Extreme-event definitions and occurrence probabilities.
//!
//! Probabilities come either from the observed frequency of extreme-containing
//! months or from stationary extreme-value fits: a generalized Pareto
//! distribution on threshold exceedances and a GEV on block maxima. Both fits
//! use L-moment estimators and the shape convention
//! `F(x) = 1 - (1 + xi (x - u) / sigma)^(-1/xi)` (GPD) and
//! `F(x) = exp(-(1 + xi (x - mu) / sigma)^(-1/xi))` (GEV), so a positive
//! shape is heavy tailed.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::calendar::{Month, Period};
use crate::error::{Error, Result};
use crate::series::{
    month_runs, DailySeries, ExtremeDefinition, OccurrenceState, StateSequence, DEFAULT_WET_THRESHOLD,
};
use crate::stats;

/// Below this absolute shape the exponential/Gumbel limit is used.
pub const SHAPE_LIMIT_EPS: f64 = 1e-6;

/// Default wet-day quantile for the GPD threshold when none is given.
pub const DEFAULT_GPD_WET_QUANTILE: f64 = 0.9;

/// Extreme threshold at `percentile` of all daily values.
///
/// When every value is equal the definition is flagged degenerate and every
/// day classifies as Extreme. When the percentile does not exceed the wet
/// threshold (a mostly dry record) no day can be extreme: the threshold is
/// set to `f64::MAX` and the definition is flagged degenerate.
pub fn define_extreme(series: &DailySeries, percentile: f64, wet_threshold: f64) -> Result<ExtremeDefinition> {
    check_percentile(percentile)?;
    let sorted = stats::sorted(series.values());
    let q = stats::quantile_sorted(&sorted, percentile);
    let all_equal = sorted.first() == sorted.last();
    let (threshold, degenerate) = if q > wet_threshold {
        (q, all_equal)
    } else {
        (f64::MAX, true)
    };
    let def = ExtremeDefinition {
        wet_threshold,
        extreme_threshold: threshold,
        percentile_used: Some(percentile),
        monthly_extreme: None,
        degenerate,
    };
    def.validate()?;
    Ok(def)
}

/// Like [`define_extreme`] but with one threshold per calendar month, each
/// from that month's daily values. Months absent from the record use the
/// global threshold.
pub fn define_extreme_monthly(
    series: &DailySeries,
    percentile: f64,
    wet_threshold: f64,
) -> Result<ExtremeDefinition> {
    let mut def = define_extreme(series, percentile, wet_threshold)?;
    let mut by_month: [Vec<f64>; 12] = core::array::from_fn(|_| Vec::new());
    for (date, value) in series.iter() {
        by_month[Month::of(date).index()].push(value);
    }
    let mut monthly = [def.extreme_threshold; 12];
    for (i, values) in by_month.iter().enumerate() {
        if values.is_empty() {
            continue;
        }
        let q = stats::quantile_sorted(&stats::sorted(values), percentile);
        if q > wet_threshold {
            monthly[i] = q;
        } else {
            monthly[i] = f64::MAX;
            def.degenerate = true;
        }
    }
    def.monthly_extreme = Some(monthly);
    def.validate()?;
    Ok(def)
}

fn check_percentile(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "percentile",
            range: "(0, 1)",
            value: p,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationMethod {
    Empirical,
    Gpd,
    Gev,
}

/// What an [`ExtremeProbability`] refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProbabilityPeriod {
    Calendar { period: Period },
    Days { days: usize },
}

/// Probability that a period contains at least one extreme day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremeProbability {
    pub period: ProbabilityPeriod,
    pub p: f64,
    /// Per-day probability, for fit-based estimates.
    pub p_day: Option<f64>,
    pub method: EstimationMethod,
    /// The threshold lies beyond the fitted distribution's upper endpoint.
    #[serde(default)]
    pub bounded_support: bool,
}

/// Fraction of complete historical instances of `month` that contain at
/// least one Extreme day.
pub fn empirical_extreme_probability(states: &StateSequence, month: Month) -> Result<ExtremeProbability> {
    let runs: Vec<_> = month_runs(states.start_date, states.len())
        .into_iter()
        .filter(|r| r.month == month && !r.partial)
        .collect();
    if runs.is_empty() {
        return Err(Error::MonthAbsent { month });
    }
    let hits = runs
        .iter()
        .filter(|r| states.states[r.range()].contains(&OccurrenceState::Extreme))
        .count();
    Ok(ExtremeProbability {
        period: ProbabilityPeriod::Calendar {
            period: Period::MonthOfYear { month },
        },
        p: hits as f64 / runs.len() as f64,
        p_day: None,
        method: EstimationMethod::Empirical,
        bounded_support: false,
    })
}

/// Fraction of complete calendar years that contain at least one Extreme day.
pub fn empirical_annual_extreme_probability(states: &StateSequence) -> Result<f64> {
    let mut years: Vec<(i32, usize, bool)> = Vec::new();
    for (date, state) in states.iter() {
        let year = chrono::Datelike::year(&date);
        match years.last_mut() {
            Some((y, n, hit)) if *y == year => {
                *n += 1;
                *hit |= state == OccurrenceState::Extreme;
            }
            _ => years.push((year, 1, state == OccurrenceState::Extreme)),
        }
    }
    let complete: Vec<_> = years
        .into_iter()
        .filter(|&(y, n, _)| n == crate::calendar::days_in_year(y))
        .collect();
    if complete.is_empty() {
        return Err(Error::NoCompleteYears);
    }
    Ok(complete.iter().filter(|c| c.2).count() as f64 / complete.len() as f64)
}

/// First three sample L-moments from unbiased probability-weighted moments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LMoments {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

impl LMoments {
    pub fn from_sample(values: &[f64]) -> Option<LMoments> {
        let n = values.len();
        if n < 2 {
            return None;
        }
        let x = stats::sorted(values);
        let nf = n as f64;
        let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
        for (i, &v) in x.iter().enumerate() {
            let i = i as f64;
            b0 += v;
            b1 += v * i / (nf - 1.0);
            if n > 2 {
                b2 += v * i * (i - 1.0) / ((nf - 1.0) * (nf - 2.0));
            }
        }
        b0 /= nf;
        b1 /= nf;
        b2 /= nf;
        Some(LMoments {
            l1: b0,
            l2: 2.0 * b1 - b0,
            l3: 6.0 * b2 - 6.0 * b1 + b0,
        })
    }

    pub fn tau3(&self) -> f64 {
        self.l3 / self.l2
    }
}

/// Generalized Pareto fit to exceedances of a threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpdFit {
    pub threshold: f64,
    pub shape: f64,
    pub scale: f64,
    /// Exceedances per day.
    pub exceedance_rate: f64,
    pub n_exceedances: usize,
}

impl GpdFit {
    /// `P(X > x | X > u)` for `x >= u`, and whether `x` lies past a finite
    /// upper endpoint.
    pub fn conditional_survival(&self, x: f64) -> (f64, bool) {
        let y = (x - self.threshold).max(0.0);
        if self.shape.abs() < SHAPE_LIMIT_EPS {
            return (libm::exp(-y / self.scale), false);
        }
        let base = 1.0 + self.shape * y / self.scale;
        if base <= 0.0 {
            return (0.0, true);
        }
        (libm::pow(base, -1.0 / self.shape), false)
    }
}

/// Default GPD threshold: the wet-day 90th percentile.
pub fn default_gpd_threshold(series: &DailySeries, wet_threshold: f64) -> Result<f64> {
    let wet: Vec<f64> = series.values().iter().copied().filter(|&v| v >= wet_threshold).collect();
    crate::series::empirical_quantile(&wet, DEFAULT_GPD_WET_QUANTILE)
}

/// L-moment GPD fit to the values of `series` that exceed `threshold`.
pub fn fit_gpd(series: &DailySeries, threshold: f64) -> Result<GpdFit> {
    let excesses: Vec<f64> = series
        .values()
        .iter()
        .filter(|&&v| v > threshold)
        .map(|&v| v - threshold)
        .collect();
    fit_gpd_excesses(&excesses, threshold, series.len())
}

/// L-moment GPD fit to positive excesses over `threshold`, observed over
/// `n_days` days. With `l1`, `l2` the excess L-moments,
/// `xi = 2 - l1 / l2` and `sigma = l1 (1 - xi)`.
pub fn fit_gpd_excesses(excesses: &[f64], threshold: f64, n_days: usize) -> Result<GpdFit> {
    if excesses.len() < 2 {
        return Err(Error::InsufficientExceedances {
            found: excesses.len(),
        });
    }
    let lm = LMoments::from_sample(excesses).ok_or(Error::DegenerateExceedances)?;
    if !(lm.l2 > 0.0) {
        return Err(Error::DegenerateExceedances);
    }
    let shape = 2.0 - lm.l1 / lm.l2;
    let scale = lm.l1 * (1.0 - shape);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::DegenerateExceedances);
    }
    Ok(GpdFit {
        threshold,
        shape,
        scale,
        exceedance_rate: excesses.len() as f64 / n_days.max(excesses.len()) as f64,
        n_exceedances: excesses.len(),
    })
}

/// How a series is cut into blocks for block maxima.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockLength {
    /// Consecutive non-overlapping blocks of this many days from the start;
    /// a trailing partial block is dropped.
    Days { days: usize },
    /// Complete calendar months.
    #[default]
    CalendarMonth,
}

impl BlockLength {
    /// Mean block length in days.
    pub fn mean_days(&self) -> f64 {
        match *self {
            BlockLength::Days { days } => days as f64,
            BlockLength::CalendarMonth => 365.2425 / 12.0,
        }
    }
}

/// GEV fit to block maxima.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GevFit {
    pub block_length: BlockLength,
    pub location: f64,
    pub scale: f64,
    pub shape: f64,
    pub n_blocks: usize,
}

impl GevFit {
    /// `P(block maximum >= x)`, and whether `x` lies past a finite upper endpoint.
    pub fn block_exceedance(&self, x: f64) -> (f64, bool) {
        let s = (x - self.location) / self.scale;
        if self.shape.abs() < SHAPE_LIMIT_EPS {
            return (-libm::expm1(-libm::exp(-s)), false);
        }
        let base = 1.0 + self.shape * s;
        if base <= 0.0 {
            // Below the lower endpoint (xi > 0) every block exceeds; past the
            // upper endpoint (xi < 0) none does.
            return if self.shape > 0.0 { (1.0, false) } else { (0.0, true) };
        }
        (-libm::expm1(-libm::pow(base, -1.0 / self.shape)), false)
    }
}

pub fn block_maxima(series: &DailySeries, block: BlockLength) -> Vec<f64> {
    let values = series.values();
    match block {
        BlockLength::Days { days } if days > 0 => values
            .chunks_exact(days)
            .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect(),
        BlockLength::Days { .. } => Vec::new(),
        BlockLength::CalendarMonth => month_runs(series.start_date(), series.len())
            .into_iter()
            .filter(|r| !r.partial)
            .map(|r| values[r.range()].iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect(),
    }
}

pub fn fit_gev(series: &DailySeries, block: BlockLength) -> Result<GevFit> {
    fit_gev_maxima(&block_maxima(series, block), block)
}

/// L-moment GEV fit (Hosking's rational approximation for the shape).
///
/// With `c = 2 / (3 + t3) - ln 2 / ln 3`, Hosking's `k = 7.8590 c + 2.9554 c^2`
/// and the shape here is `xi = -k`. Then
/// `sigma = l2 k / ((1 - 2^-k) Gamma(1 + k))` and
/// `mu = l1 - sigma (1 - Gamma(1 + k)) / k`, with the Gumbel limits
/// `sigma = l2 / ln 2`, `mu = l1 - gamma_E sigma` as `k -> 0`.
pub fn fit_gev_maxima(maxima: &[f64], block: BlockLength) -> Result<GevFit> {
    if maxima.len() < 3 {
        return Err(Error::InsufficientBlocks { found: maxima.len() });
    }
    let lm = LMoments::from_sample(maxima).ok_or(Error::DegenerateBlockMaxima)?;
    if !(lm.l2 > 0.0) {
        return Err(Error::DegenerateBlockMaxima);
    }
    let c = 2.0 / (3.0 + lm.tau3()) - core::f64::consts::LN_2 / libm::log(3.0);
    let k = 7.8590 * c + 2.9554 * c * c;
    let (scale, location) = if k.abs() < SHAPE_LIMIT_EPS {
        let scale = lm.l2 / core::f64::consts::LN_2;
        (scale, lm.l1 - EULER_GAMMA * scale)
    } else {
        let g = libm::tgamma(1.0 + k);
        let scale = lm.l2 * k / ((1.0 - libm::pow(2.0, -k)) * g);
        (scale, lm.l1 - scale * (1.0 - g) / k)
    };
    if !(scale > 0.0) || !scale.is_finite() || !location.is_finite() {
        return Err(Error::DegenerateBlockMaxima);
    }
    Ok(GevFit {
        block_length: block,
        location,
        scale,
        shape: -k,
        n_blocks: maxima.len(),
    })
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Probability of at least one extreme day in `period_days` days from a GPD
/// fit, assuming independent days:
/// `p_day = zeta S(T)`, `p = 1 - (1 - p_day)^period_days`.
pub fn prob_extreme_from_fit(fit: &GpdFit, def: &ExtremeDefinition, period_days: usize) -> Result<ExtremeProbability> {
    let t = def.extreme_threshold;
    if t < fit.threshold {
        return Err(Error::ThresholdBelowFit {
            threshold: t,
            fit_threshold: fit.threshold,
        });
    }
    let (survival, bounded) = fit.conditional_survival(t);
    let p_day = (fit.exceedance_rate * survival).clamp(0.0, 1.0);
    Ok(ExtremeProbability {
        period: ProbabilityPeriod::Days { days: period_days },
        p: aggregate(p_day, period_days as f64),
        p_day: Some(p_day),
        method: EstimationMethod::Gpd,
        bounded_support: bounded,
    })
}

/// Probability of at least one extreme day in `period_days` days from a GEV
/// fit, treating the period as `period_days / block` independent blocks.
pub fn prob_extreme_from_gev(fit: &GevFit, def: &ExtremeDefinition, period_days: usize) -> ExtremeProbability {
    let (p_block, bounded) = fit.block_exceedance(def.extreme_threshold);
    let blocks = period_days as f64 / fit.block_length.mean_days();
    ExtremeProbability {
        period: ProbabilityPeriod::Days { days: period_days },
        p: aggregate(p_block, blocks),
        p_day: None,
        method: EstimationMethod::Gev,
        bounded_support: bounded,
    }
}

/// `1 - (1 - p)^n`, evaluated without cancellation for small `p`.
fn aggregate(p: f64, n: f64) -> f64 {
    if p >= 1.0 {
        return if n > 0.0 { 1.0 } else { 0.0 };
    }
    (-libm::expm1(n * libm::log1p(-p))).clamp(0.0, 1.0)
}

/// Human-readable warning for a degenerate definition, if any.
pub fn degenerate_warning(def: &ExtremeDefinition) -> Option<String> {
    if !def.degenerate {
        return None;
    }
    Some(if def.extreme_threshold == f64::MAX {
        String::from("degenerate extreme definition: the percentile does not exceed the wet threshold, no day can be extreme")
    } else {
        String::from("degenerate extreme definition: all values are equal, every day classifies as extreme")
    })
}

/// Wet threshold used when a caller has no configuration.
pub fn default_definition(series: &DailySeries, percentile: f64) -> Result<ExtremeDefinition> {
    define_extreme(series, percentile, DEFAULT_WET_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use chrono::NaiveDate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn start() -> NaiveDate {
        NaiveDate::from_ymd_opt(1900, 1, 1).unwrap()
    }

    fn series(values: Vec<f64>) -> DailySeries {
        DailySeries::new(start(), values, "t").unwrap()
    }

    // Independent inverse-CDF samplers.
    fn gpd_sample(rng: &mut ChaCha8Rng, xi: f64, sigma: f64) -> f64 {
        let u: f64 = rng.random();
        if xi == 0.0 {
            -sigma * libm::log(1.0 - u)
        } else {
            sigma / xi * (libm::pow(1.0 - u, -xi) - 1.0)
        }
    }

    fn gev_sample(rng: &mut ChaCha8Rng, mu: f64, sigma: f64, xi: f64) -> f64 {
        let u: f64 = rng.random();
        let y = -libm::log(u);
        if xi == 0.0 {
            mu - sigma * libm::log(y)
        } else {
            mu + sigma / xi * (libm::pow(y, -xi) - 1.0)
        }
    }

    #[test]
    fn define_extreme_on_ladder() {
        let s = series((1..=100).map(f64::from).collect());
        let def = define_extreme(&s, 0.95, 0.1).unwrap();
        assert!((def.extreme_threshold - 95.05).abs() < 1e-12);
        assert_eq!(def.percentile_used, Some(0.95));
        assert!(!def.degenerate);
    }

    #[test]
    fn define_extreme_all_equal_is_degenerate() {
        let s = series(vec![5.0; 40]);
        let def = define_extreme(&s, 0.95, 0.1).unwrap();
        assert_eq!(def.extreme_threshold, 5.0);
        assert!(def.degenerate);
        let states = crate::series::classify(&s, &def);
        assert_eq!(states.count(OccurrenceState::Extreme), 40);
        assert!(degenerate_warning(&def).is_some());
    }

    #[test]
    fn define_extreme_on_dry_record_has_no_extremes() {
        let mut v = vec![0.0; 100];
        v[3] = 4.0;
        let s = series(v);
        let def = define_extreme(&s, 0.95, 0.1).unwrap();
        assert!(def.degenerate);
        assert_eq!(crate::series::classify(&s, &def).count(OccurrenceState::Extreme), 0);
    }

    #[test]
    fn monthly_definition() {
        // Jan 1900 values 1..31, Feb 1900 values 101..128.
        let mut v: Vec<f64> = (1..=31).map(f64::from).collect();
        v.extend((101..=128).map(f64::from));
        let s = series(v);
        let def = define_extreme_monthly(&s, 0.5, 0.1).unwrap();
        let m = def.monthly_extreme.unwrap();
        assert_eq!(m[0], 16.0);
        assert_eq!(m[1], 114.5);
        // Absent months keep the global threshold.
        assert_eq!(m[5], def.extreme_threshold);
    }

    #[test]
    fn empirical_probability_counts_complete_months() {
        // Ten consecutive Januaries (1990..1999) via a full-record series.
        let first = NaiveDate::from_ymd_opt(1990, 1, 1).unwrap();
        let last = NaiveDate::from_ymd_opt(1999, 12, 31).unwrap();
        let n = (last - first).num_days() as usize + 1;
        let mut states = vec![OccurrenceState::Dry; n];
        for year in [1990, 1993, 1997] {
            let d = NaiveDate::from_ymd_opt(year, 1, 15).unwrap();
            states[(d - first).num_days() as usize] = OccurrenceState::Extreme;
        }
        let seq = StateSequence::new(first, states);
        let p = empirical_extreme_probability(&seq, Month::JANUARY).unwrap();
        assert!((p.p - 0.3).abs() < 1e-15);
        assert_eq!(p.method, EstimationMethod::Empirical);
        let jul = empirical_extreme_probability(&seq, Month::new(7).unwrap()).unwrap();
        assert_eq!(jul.p, 0.0);
        assert!((empirical_annual_extreme_probability(&seq).unwrap() - 0.3).abs() < 1e-15);

        let all = StateSequence::new(first, vec![OccurrenceState::Extreme; n]);
        assert_eq!(empirical_extreme_probability(&all, Month::JANUARY).unwrap().p, 1.0);

        let short = StateSequence::new(first, vec![OccurrenceState::Dry; 20]);
        assert!(matches!(
            empirical_extreme_probability(&short, Month::JANUARY),
            Err(Error::MonthAbsent { .. })
        ));
    }

    #[test]
    fn gpd_recovers_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ex: Vec<f64> = (0..100_000).map(|_| gpd_sample(&mut rng, 0.0, 5.0)).collect();
        let fit = fit_gpd_excesses(&ex, 10.0, 1_000_000).unwrap();
        assert!(fit.shape.abs() < 0.02, "{}", fit.shape);
        assert!((fit.scale - 5.0).abs() < 0.1, "{}", fit.scale);
        assert!((fit.exceedance_rate - 0.1).abs() < 1e-15);
    }

    #[test]
    fn gpd_recovers_heavy_tail_from_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let values: Vec<f64> = (0..100_000).map(|_| 20.0 + gpd_sample(&mut rng, 0.2, 10.0)).collect();
        let fit = fit_gpd(&series(values), 20.0).unwrap();
        assert!((fit.shape - 0.2).abs() < 0.02, "{}", fit.shape);
        assert!((fit.scale - 10.0).abs() < 0.3, "{}", fit.scale);
    }

    #[test]
    fn gpd_error_paths() {
        assert_eq!(
            fit_gpd_excesses(&[1.0], 0.0, 10).unwrap_err(),
            Error::InsufficientExceedances { found: 1 }
        );
        let err = fit_gpd_excesses(&[2.0, 2.0], 0.0, 10).unwrap_err();
        assert_eq!(err.to_string(), "degenerate exceedance sample");
    }

    #[test]
    fn gev_recovers_gumbel_and_bounded_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let maxima: Vec<f64> = (0..50_000).map(|_| gev_sample(&mut rng, 30.0, 8.0, 0.0)).collect();
        let fit = fit_gev_maxima(&maxima, BlockLength::CalendarMonth).unwrap();
        assert!(fit.shape.abs() < 0.02, "{}", fit.shape);
        assert!((fit.location - 30.0).abs() < 0.2, "{}", fit.location);
        assert!((fit.scale - 8.0).abs() < 0.2, "{}", fit.scale);

        let maxima: Vec<f64> = (0..50_000).map(|_| gev_sample(&mut rng, 30.0, 8.0, -0.1)).collect();
        let fit = fit_gev_maxima(&maxima, BlockLength::CalendarMonth).unwrap();
        assert!((fit.shape + 0.1).abs() < 0.02, "{}", fit.shape);
    }

    #[test]
    fn gev_error_paths() {
        assert_eq!(
            fit_gev_maxima(&[1.0, 2.0], BlockLength::CalendarMonth).unwrap_err(),
            Error::InsufficientBlocks { found: 2 }
        );
        assert_eq!(
            fit_gev_maxima(&[3.0; 10], BlockLength::CalendarMonth).unwrap_err(),
            Error::DegenerateBlockMaxima
        );
    }

    #[test]
    fn block_maxima_by_days_and_months() {
        let s = series((0..10).map(f64::from).collect());
        assert_eq!(block_maxima(&s, BlockLength::Days { days: 3 }), vec![2.0, 5.0, 8.0]);
        // 1900-01-01 + 59 days covers Jan and Feb 1900 exactly (not a leap year).
        let s = series((0..59).map(f64::from).collect());
        assert_eq!(block_maxima(&s, BlockLength::CalendarMonth), vec![30.0, 58.0]);
        let s = series((0..50).map(f64::from).collect());
        assert_eq!(block_maxima(&s, BlockLength::CalendarMonth), vec![30.0]);
    }

    fn gpd(shape: f64, scale: f64, rate: f64) -> GpdFit {
        GpdFit {
            threshold: 10.0,
            shape,
            scale,
            exceedance_rate: rate,
            n_exceedances: 100,
        }
    }

    fn def_at(t: f64) -> ExtremeDefinition {
        ExtremeDefinition::new(0.1, t).unwrap()
    }

    #[test]
    fn fit_probability_examples() {
        let p = prob_extreme_from_fit(&gpd(0.3, 5.0, 0.05), &def_at(10.0), 30).unwrap();
        assert_eq!(p.p_day, Some(0.05));

        let p = prob_extreme_from_fit(&gpd(0.0, 5.0, 0.05), &def_at(15.0), 30).unwrap();
        let p_day = 0.05 * libm::exp(-1.0);
        assert!((p.p_day.unwrap() - p_day).abs() < 1e-15);
        assert!((p.p_day.unwrap() - 0.018394).abs() < 1e-6);
        assert!((p.p - (1.0 - libm::pow(1.0 - p_day, 30.0))).abs() < 1e-12);
        assert!((p.p - 0.4270).abs() < 1e-4);

        let p = prob_extreme_from_fit(&gpd(-0.5, 5.0, 0.05), &def_at(21.0), 30).unwrap();
        assert_eq!((p.p_day, p.p, p.bounded_support), (Some(0.0), 0.0, true));

        assert!(matches!(
            prob_extreme_from_fit(&gpd(0.0, 5.0, 0.05), &def_at(5.0), 30),
            Err(Error::ThresholdBelowFit { .. })
        ));
    }

    #[test]
    fn shape_limit_branch_is_continuous() {
        // One scale above the threshold, either side of the branch cut.
        let x = 15.0;
        for sign in [-1.0, 1.0] {
            let inside = gpd(sign * 0.999e-6, 5.0, 1.0).conditional_survival(x).0;
            let outside = gpd(sign * 1.001e-6, 5.0, 1.0).conditional_survival(x).0;
            let exponential = libm::exp(-1.0);
            assert_eq!(inside, exponential);
            assert!(((outside - exponential) / exponential).abs() < 1e-6);
        }
    }

    #[test]
    fn gev_probability() {
        let fit = GevFit {
            block_length: BlockLength::Days { days: 30 },
            location: 20.0,
            scale: 5.0,
            shape: 0.0,
            n_blocks: 100,
        };
        let p = prob_extreme_from_gev(&fit, &def_at(25.0), 30);
        assert!((p.p - (1.0 - libm::exp(-libm::exp(-1.0)))).abs() < 1e-12);
        let p2 = prob_extreme_from_gev(&fit, &def_at(25.0), 60);
        assert!((p2.p - (1.0 - (1.0 - p.p) * (1.0 - p.p))).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn fit_probability_monotone(shape in -0.4..0.6f64, scale in 0.5..20.0f64, rate in 0.0..=1.0f64,
                                    t1 in 10.0..80.0f64, dt in 0.0..30.0f64, n1 in 1usize..400, dn in 0usize..400) {
            let fit = gpd(shape, scale, rate);
            let lo = prob_extreme_from_fit(&fit, &def_at(t1), n1).unwrap();
            let hi_t = prob_extreme_from_fit(&fit, &def_at(t1 + dt), n1).unwrap();
            let long = prob_extreme_from_fit(&fit, &def_at(t1), n1 + dn).unwrap();
            proptest::prop_assert!(hi_t.p <= lo.p + 1e-15);
            proptest::prop_assert!(long.p + 1e-15 >= lo.p);
            proptest::prop_assert!((0.0..=1.0).contains(&lo.p));
        }

        #[test]
        fn empirical_probability_matches_recount(raw in proptest::collection::vec(0u8..3, 365..1500)) {
            let first = NaiveDate::from_ymd_opt(2001, 1, 1).unwrap();
            let states: Vec<OccurrenceState> = raw.iter().map(|&i| OccurrenceState::from_index(i as usize).unwrap()).collect();
            let seq = StateSequence::new(first, states.clone());
            for month in Month::all() {
                // Brute force: walk day by day, group by (year, month).
                let mut groups: Vec<((i32, u32), usize, bool)> = Vec::new();
                let mut d = first;
                for s in &states {
                    let key = (chrono::Datelike::year(&d), chrono::Datelike::month(&d));
                    match groups.last_mut() {
                        Some((k, n, hit)) if *k == key => { *n += 1; *hit |= *s == OccurrenceState::Extreme; }
                        _ => groups.push((key, 1, *s == OccurrenceState::Extreme)),
                    }
                    d = d.succ_opt().unwrap();
                }
                let complete: Vec<_> = groups.iter()
                    .filter(|(k, n, _)| k.1 == month.number() && *n == crate::calendar::days_in_month(k.0, month))
                    .collect();
                match empirical_extreme_probability(&seq, month) {
                    Ok(p) => {
                        let expected = complete.iter().filter(|g| g.2).count() as f64 / complete.len() as f64;
                        proptest::prop_assert_eq!(p.p, expected);
                    }
                    Err(_) => proptest::prop_assert!(complete.is_empty()),
                }
            }
        }
    }
}
