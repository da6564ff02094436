//! Precipitation amounts for non-dry days by KNN-weighted kernel resampling
//! of historical values.
//!
//! For each calendar month and state (Wet, Extreme) the model keeps the pool
//! of historical amounts observed in that month and state. A draw picks one
//! of the `k` pool values nearest to the context amount with weights
//! proportional to `1/rank`, perturbs it with Gaussian noise of the pool's
//! Silverman bandwidth and reflects the result back into the state's value
//! interval, so the drawn amount always classifies as the requested state.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::calendar::Month;
use crate::error::{Error, Result};
use crate::series::{DailySeries, ExtremeDefinition, OccurrenceState};
use crate::stats;

/// Bandwidth used for a pool of two or more identical values, mm/day.
pub const ZERO_SPREAD_BANDWIDTH: f64 = 0.01;

/// Minimum neighbour count of the default `k = max(5, ceil(sqrt(n)))` rule.
pub const MIN_NEIGHBOURS: usize = 5;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntensityConfig {
    /// Fixed neighbour count; `None` uses `max(5, ceil(sqrt(pool size)))`.
    pub knn_k: Option<usize>,
    /// Fixed kernel bandwidth for every pool; `None` uses Silverman's rule.
    pub bandwidth: Option<f64>,
}

/// Historical amounts for one (month, state) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatePool {
    /// Ascending.
    pub values: Vec<f64>,
    pub bandwidth: f64,
    /// Inclusive lower bound of the state's interval.
    pub lower: f64,
    /// Exclusive upper bound, `None` for the unbounded Extreme class.
    pub upper: Option<f64>,
    /// The month had no values of its own and the pool was drawn from the
    /// other months' values that fit this month's interval.
    #[serde(default)]
    pub borrowed: bool,
}

impl StatePool {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn neighbours(&self, knn_k: Option<usize>) -> usize {
        let n = self.values.len();
        let k = knn_k.unwrap_or_else(|| MIN_NEIGHBOURS.max(libm::ceil(libm::sqrt(n as f64)) as usize));
        k.clamp(1, n.max(1))
    }

    /// Picks the pool value of a given 1-based nearness rank to `context`.
    /// Ties in distance go to the smaller value.
    fn ranked(&self, context: f64, rank: usize) -> f64 {
        let v = &self.values;
        let mut right = v.partition_point(|&x| x < context);
        let mut left = right; // candidates are v[left - 1] and v[right]
        let mut picked = v[right.min(v.len() - 1)];
        for _ in 0..rank {
            let take_left = match (left > 0, right < v.len()) {
                (true, true) => context - v[left - 1] <= v[right] - context,
                (true, false) => true,
                (false, true) => false,
                (false, false) => break,
            };
            if take_left {
                left -= 1;
                picked = v[left];
            } else {
                picked = v[right];
                right += 1;
            }
        }
        picked
    }
}

/// Per-month, per-state amount pools plus the neighbour rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntensityModel {
    /// `pools[month][0]` is Wet, `pools[month][1]` is Extreme.
    pub pools: [[StatePool; 2]; 12],
    pub knn_k: Option<usize>,
}

fn slot(state: OccurrenceState) -> Option<usize> {
    match state {
        OccurrenceState::Dry => None,
        OccurrenceState::Wet => Some(0),
        OccurrenceState::Extreme => Some(1),
    }
}

impl IntensityModel {
    pub fn pool(&self, month: Month, state: OccurrenceState) -> Option<&StatePool> {
        slot(state).map(|s| &self.pools[month.index()][s])
    }

    pub fn has_analogue(&self, month: Month, state: OccurrenceState) -> bool {
        self.pool(month, state).is_some_and(|p| !p.is_empty())
    }
}

/// Builds the pools from a historical record classified under `def`.
pub fn fit_intensity(series: &DailySeries, def: &ExtremeDefinition, config: &IntensityConfig) -> IntensityModel {
    let mut raw: [[Vec<f64>; 2]; 12] = core::array::from_fn(|_| [Vec::new(), Vec::new()]);
    for (date, value) in series.iter() {
        let month = Month::of(date);
        if let Some(s) = slot(def.classify_value(value, month)) {
            raw[month.index()][s].push(value);
        }
    }

    let pools = core::array::from_fn(|m| {
        let month = Month::from_index(m).expect("month index");
        core::array::from_fn(|s| {
            let state = OccurrenceState::ALL[s + 1];
            let (lower, upper) = def.interval(state, month);
            let mut values = stats::sorted(&raw[m][s]);
            let mut borrowed = false;
            if values.is_empty() {
                let within = |v: f64| v >= lower && upper.is_none_or(|u| v < u);
                values = stats::sorted(
                    &raw.iter()
                        .flat_map(|pair| pair[s].iter().copied())
                        .filter(|&v| within(v))
                        .collect::<Vec<_>>(),
                );
                borrowed = !values.is_empty();
            }
            let bandwidth = config.bandwidth.unwrap_or_else(|| silverman_bandwidth(&values));
            StatePool {
                values,
                bandwidth,
                lower,
                upper,
                borrowed,
            }
        })
    });
    IntensityModel {
        pools,
        knn_k: config.knn_k,
    }
}

/// Silverman's rule of thumb, `0.9 min(sd, IQR / 1.34) n^(-1/5)`, on an
/// ascending sample. Zero for fewer than two values.
pub fn silverman_bandwidth(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n < 2 {
        return 0.0;
    }
    let sd = stats::sample_sd(sorted);
    let iqr = stats::quantile_sorted(sorted, 0.75) - stats::quantile_sorted(sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        (false, true) => iqr / 1.34,
        (false, false) => return ZERO_SPREAD_BANDWIDTH,
    };
    0.9 * spread * libm::pow(n as f64, -0.2)
}

/// Draws one amount for a Wet or Extreme day.
///
/// `context` is the previous day's amount; `None` samples the whole pool
/// uniformly.
pub fn sample_intensity<R: Rng + ?Sized>(
    model: &IntensityModel,
    month: Month,
    state: OccurrenceState,
    context: Option<f64>,
    rng: &mut R,
) -> Result<f64> {
    sample_intensity_scaled(model, month, state, context, 1.0, rng)
}

/// As [`sample_intensity`], with the resampled amount multiplied by `scale`
/// before it is reflected into the state's interval.
pub fn sample_intensity_scaled<R: Rng + ?Sized>(
    model: &IntensityModel,
    month: Month,
    state: OccurrenceState,
    context: Option<f64>,
    scale: f64,
    rng: &mut R,
) -> Result<f64> {
    let pool = model
        .pool(month, state)
        .filter(|p| !p.is_empty())
        .ok_or(Error::NoHistoricalAnalogue { month, state })?;

    let base = match context {
        Some(c) => {
            let k = pool.neighbours(model.knn_k);
            pool.ranked(c, draw_rank(k, rng))
        }
        None => pool.values[rng.random_range(0..pool.len())],
    };
    let noisy = if pool.bandwidth > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        base + pool.bandwidth * z
    } else {
        base
    };
    Ok(reflect(noisy * scale, pool.lower, pool.upper))
}

/// Rank in `1..=k` with probability proportional to `1/rank`.
fn draw_rank<R: Rng + ?Sized>(k: usize, rng: &mut R) -> usize {
    let harmonic: f64 = (1..=k).map(|r| 1.0 / r as f64).sum();
    let target = rng.random::<f64>() * harmonic;
    let mut acc = 0.0;
    for r in 1..=k {
        acc += 1.0 / r as f64;
        if target < acc {
            return r;
        }
    }
    k
}

/// Folds `x` into `[lower, upper)` by repeated reflection at the bounds.
pub fn reflect(x: f64, lower: f64, upper: Option<f64>) -> f64 {
    let Some(upper) = upper else {
        return if x < lower { 2.0 * lower - x } else { x };
    };
    let width = upper - lower;
    if !(width > 0.0) {
        return lower;
    }
    let period = 2.0 * width;
    let mut y = libm::fmod(x - lower, period);
    if y < 0.0 {
        y += period;
    }
    if y > width {
        y = period - y;
    }
    let r = (lower + y).max(lower);
    if r >= upper {
        upper.next_down().max(lower)
    } else {
        r
    }
}
