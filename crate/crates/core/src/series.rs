//! Daily precipitation series, occurrence states and the threshold rule
//! that maps one onto the other.

use alloc::string::String;
use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::calendar::{days_in_month, days_in_year, Month};
use crate::error::{Error, Result};
use crate::stats;

/// Trace-precipitation cutoff used when no wet threshold is configured, mm/day.
pub const DEFAULT_WET_THRESHOLD: f64 = 0.1;

/// A dated record of daily precipitation depths in mm/day.
///
/// Day `i` falls on `start_date + i`. Values are finite and non-negative and
/// there is at least one of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    start_date: NaiveDate,
    values: Vec<f64>,
    station_id: String,
}

#[allow(clippy::len_without_is_empty)]
impl DailySeries {
    pub fn new(start_date: NaiveDate, values: Vec<f64>, station_id: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidValue { index, value });
        }
        if start_date.checked_add_days(chrono::Days::new(values.len() as u64 - 1)).is_none() {
            return Err(Error::InsufficientData(String::from("series runs past the calendar range")));
        }
        Ok(DailySeries {
            start_date,
            values,
            station_id: station_id.into(),
        })
    }

    /// A series over the same days and station with different values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                left: self.values.len(),
                right: values.len(),
            });
        }
        DailySeries::new(self.start_date, values, self.station_id.clone())
    }

    pub fn start_date(&self) -> NaiveDate {
        self.start_date
    }

    pub fn end_date(&self) -> NaiveDate {
        self.date_at(self.values.len() - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn station_id(&self) -> &str {
        &self.station_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start_date + chrono::Days::new(index as u64)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `(date, value)` pairs in calendar order.
    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.start_date.iter_days().zip(self.values.iter().copied())
    }
}

/// Occurrence state of a single day. Ordered Dry < Wet < Extreme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccurrenceState {
    Dry,
    Wet,
    Extreme,
}

impl OccurrenceState {
    pub const ALL: [OccurrenceState; 3] = [
        OccurrenceState::Dry,
        OccurrenceState::Wet,
        OccurrenceState::Extreme,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn is_dry(self) -> bool {
        self == OccurrenceState::Dry
    }
}

/// Threshold rule that classifies a day as Dry, Wet or Extreme.
///
/// A day is Wet when its value is at least `wet_threshold` and Extreme when
/// it is at least the extreme threshold for its month. Both comparisons are
/// inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremeDefinition {
    pub wet_threshold: f64,
    pub extreme_threshold: f64,
    /// Percentile the extreme threshold was derived from, if any.
    pub percentile_used: Option<f64>,
    /// Per-month extreme thresholds overriding `extreme_threshold`.
    #[serde(default)]
    pub monthly_extreme: Option<[f64; 12]>,
    /// Set when the record could not support a meaningful extreme class.
    #[serde(default)]
    pub degenerate: bool,
}

impl ExtremeDefinition {
    pub fn new(wet_threshold: f64, extreme_threshold: f64) -> Result<Self> {
        let def = ExtremeDefinition {
            wet_threshold,
            extreme_threshold,
            percentile_used: None,
            monthly_extreme: None,
            degenerate: false,
        };
        def.validate()?;
        Ok(def)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |extreme: f64| {
            let ok = self.wet_threshold.is_finite()
                && extreme.is_finite()
                && self.wet_threshold >= 0.0
                && self.wet_threshold < extreme;
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidDefinition {
                    wet: self.wet_threshold,
                    extreme,
                })
            }
        };
        check(self.extreme_threshold)?;
        if let Some(monthly) = &self.monthly_extreme {
            monthly.iter().try_for_each(|&t| check(t))?;
        }
        if let Some(p) = self.percentile_used {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::OutOfRange {
                    name: "percentile",
                    range: "(0, 1)",
                    value: p,
                });
            }
        }
        Ok(())
    }

    pub fn extreme_threshold_for(&self, month: Month) -> f64 {
        match &self.monthly_extreme {
            Some(monthly) => monthly[month.index()],
            None => self.extreme_threshold,
        }
    }

    pub fn classify_value(&self, value: f64, month: Month) -> OccurrenceState {
        if value >= self.extreme_threshold_for(month) {
            OccurrenceState::Extreme
        } else if value >= self.wet_threshold {
            OccurrenceState::Wet
        } else {
            OccurrenceState::Dry
        }
    }

    /// Half-open value interval `[lo, hi)` of a state in a given month; `hi`
    /// is `None` for the unbounded Extreme class.
    pub fn interval(&self, state: OccurrenceState, month: Month) -> (f64, Option<f64>) {
        let extreme = self.extreme_threshold_for(month);
        match state {
            OccurrenceState::Dry => (0.0, Some(self.wet_threshold)),
            OccurrenceState::Wet => (self.wet_threshold, Some(extreme)),
            OccurrenceState::Extreme => (extreme, None),
        }
    }

    pub fn contains_extreme(&self, series: &DailySeries) -> bool {
        series
            .iter()
            .any(|(d, v)| v >= self.extreme_threshold_for(Month::of(d)))
    }
}

/// Occurrence states on consecutive days, starting at `start_date`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSequence {
    pub start_date: NaiveDate,
    pub states: Vec<OccurrenceState>,
}

impl StateSequence {
    pub fn new(start_date: NaiveDate, states: Vec<OccurrenceState>) -> Self {
        StateSequence { start_date, states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, OccurrenceState)> + '_ {
        self.start_date.iter_days().zip(self.states.iter().copied())
    }

    pub fn count(&self, state: OccurrenceState) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }
}

/// Element-wise classification of a series under a threshold rule.
pub fn classify(series: &DailySeries, def: &ExtremeDefinition) -> StateSequence {
    let states = series
        .iter()
        .map(|(d, v)| def.classify_value(v, Month::of(d)))
        .collect();
    StateSequence::new(series.start_date(), states)
}

/// Linear-interpolation (type 7) quantile: `h = (n - 1) q` on the sorted
/// sample, interpolating between `floor(h)` and `ceil(h)`.
pub fn empirical_quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::OutOfRange {
            name: "quantile level",
            range: "[0, 1]",
            value: q,
        });
    }
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidValue { index, value });
    }
    Ok(stats::quantile_sorted(&stats::sorted(values), q))
}

/// One maximal run of consecutive days inside a single calendar month.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonthRun {
    pub year: i32,
    pub month: Month,
    /// Index of the run's first day in the source series.
    pub start: usize,
    pub len: usize,
    /// The run does not cover the whole calendar month.
    pub partial: bool,
}

impl MonthRun {
    pub fn range(&self) -> core::ops::Range<usize> {
        self.start..self.start + self.len
    }

    pub fn values<'a>(&self, series: &'a DailySeries) -> &'a [f64] {
        &series.values()[self.range()]
    }
}

/// Month runs in chronological order for `len` days from `start`.
pub fn month_runs(start: NaiveDate, len: usize) -> Vec<MonthRun> {
    let mut runs: Vec<MonthRun> = Vec::new();
    for (i, date) in start.iter_days().take(len).enumerate() {
        let month = Month::of(date);
        match runs.last_mut() {
            Some(run) if run.month == month && run.year == date.year() => run.len += 1,
            _ => runs.push(MonthRun {
                year: date.year(),
                month,
                start: i,
                len: 1,
                partial: date.day() != 1,
            }),
        }
    }
    for run in &mut runs {
        run.partial |= run.len < days_in_month(run.year, run.month);
    }
    runs
}

/// Month-of-year to the runs of that month, each list chronological.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonthlySlices {
    runs: [Vec<MonthRun>; 12],
}

impl MonthlySlices {
    pub fn month(&self, month: Month) -> &[MonthRun] {
        &self.runs[month.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Month, &[MonthRun])> {
        Month::all().map(move |m| (m, self.month(m)))
    }
}

pub fn monthly_slices(series: &DailySeries) -> MonthlySlices {
    let mut runs: [Vec<MonthRun>; 12] = core::array::from_fn(|_| Vec::new());
    for run in month_runs(series.start_date(), series.len()) {
        runs[run.month.index()].push(run);
    }
    MonthlySlices { runs }
}

/// Per-year totals over complete calendar years.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnualTotals {
    pub totals: Vec<(i32, f64)>,
    /// Boundary years only partly covered by the series.
    pub excluded: Vec<i32>,
}

pub fn annual_totals(series: &DailySeries) -> Result<AnnualTotals> {
    let mut totals = Vec::new();
    let mut excluded = Vec::new();
    let mut current: Option<(i32, f64, usize)> = None;
    for (date, value) in series.iter() {
        match &mut current {
            Some((year, sum, days)) if *year == date.year() => {
                *sum += value;
                *days += 1;
            }
            _ => {
                if let Some(done) = current.take() {
                    push_year(done, &mut totals, &mut excluded);
                }
                current = Some((date.year(), value, 1));
            }
        }
    }
    if let Some(done) = current {
        push_year(done, &mut totals, &mut excluded);
    }
    if totals.is_empty() {
        return Err(Error::NoCompleteYears);
    }
    Ok(AnnualTotals { totals, excluded })
}

fn push_year((year, sum, days): (i32, f64, usize), totals: &mut Vec<(i32, f64)>, excluded: &mut Vec<i32>) {
    if days == days_in_year(year) {
        totals.push((year, sum));
    } else {
        excluded.push(year);
    }
}
