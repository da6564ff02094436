//! Seasonal-mean forecasts used as calibration targets: climatology, an
//! autoregressive annual-total forecaster, and tercile-category targets.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::calendar::{days_in_month, Month, Period};
use crate::error::{Error, Result};
use crate::series::{annual_totals, DailySeries};
use crate::stats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastSource {
    Climatology,
    ArModel,
    TercileCategory,
}

/// Mean precipitation expected over a target period, in mm per period.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanForecast {
    pub target_period: Period,
    pub mean: f64,
    pub sd: f64,
    pub source: ForecastSource,
    /// The raw forecast was negative and has been floored at zero.
    #[serde(default)]
    pub anomalous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClimatologyModel {
    /// Mean daily precipitation per calendar month, mm/day.
    pub monthly_mean: [f64; 12],
    /// Standard deviation of daily precipitation per calendar month, mm/day.
    pub monthly_sd: [f64; 12],
    /// Mean and standard deviation of complete-year totals, mm/year.
    pub annual_mean: f64,
    pub annual_sd: f64,
    /// Type-7 quantiles of the annual totals at 1/3 and 2/3.
    pub terciles_annual: (f64, f64),
    pub annual_totals: Vec<(i32, f64)>,
    /// Only one complete year was available, so annual spread is undefined.
    pub degenerate: bool,
}

impl ClimatologyModel {
    /// Climatological total for a period: the annual mean for a year, or the
    /// monthly mean rate times the month length.
    pub fn target(&self, period: Period) -> MeanForecast {
        let (mean, sd) = match period {
            Period::Year { .. } => (self.annual_mean, self.annual_sd),
            Period::YearMonth { .. } | Period::MonthOfYear { .. } => {
                let month = period.month().expect("monthly period");
                let days = period.span().1 as f64;
                (
                    self.monthly_mean[month.index()] * days,
                    self.monthly_sd[month.index()] * libm::sqrt(days),
                )
            }
        };
        MeanForecast {
            target_period: period,
            mean,
            sd,
            source: ForecastSource::Climatology,
            anomalous: false,
        }
    }

    /// Fraction of the climatological annual total that falls in `month`.
    pub fn monthly_share(&self, month: Month, year: i32) -> f64 {
        if self.annual_mean <= 0.0 {
            return 0.0;
        }
        self.monthly_mean[month.index()] * days_in_month(year, month) as f64 / self.annual_mean
    }
}

pub fn fit_climatology(series: &DailySeries) -> Result<ClimatologyModel> {
    let totals = annual_totals(series).map_err(|_| {
        Error::InsufficientData(format!(
            "climatology needs at least one complete calendar year ({} days supplied)",
            series.len()
        ))
    })?;

    let mut by_month: [Vec<f64>; 12] = core::array::from_fn(|_| Vec::new());
    for (date, value) in series.iter() {
        by_month[Month::of(date).index()].push(value);
    }
    let monthly_mean = core::array::from_fn(|i| stats::mean(&by_month[i]));
    let monthly_sd = core::array::from_fn(|i| stats::sample_sd(&by_month[i]));

    let annual: Vec<f64> = totals.totals.iter().map(|&(_, t)| t).collect();
    let sorted = stats::sorted(&annual);
    Ok(ClimatologyModel {
        monthly_mean,
        monthly_sd,
        annual_mean: stats::mean(&annual),
        annual_sd: stats::sample_sd(&annual),
        terciles_annual: (
            stats::quantile_sorted(&sorted, 1.0 / 3.0),
            stats::quantile_sorted(&sorted, 2.0 / 3.0),
        ),
        degenerate: annual.len() < 2,
        annual_totals: totals.totals,
    })
}

/// Tercile category of a seasonal outlook.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tercile {
    Below,
    Near,
    Above,
}

/// Maps a tercile category to the mean of the historical annual totals in
/// that bin. Bins are `(-inf, t1]`, `(t1, t2]`, `(t2, inf)`. An empty bin
/// falls back to its boundary (`t1`, the midpoint, or `t2`).
pub fn tercile_to_target(category: Tercile, clim: &ClimatologyModel) -> MeanForecast {
    let (t1, t2) = clim.terciles_annual;
    let members: Vec<f64> = clim
        .annual_totals
        .iter()
        .map(|&(_, t)| t)
        .filter(|&t| match category {
            Tercile::Below => t <= t1,
            Tercile::Near => t > t1 && t <= t2,
            Tercile::Above => t > t2,
        })
        .collect();
    let mean = if members.is_empty() {
        match category {
            Tercile::Below => t1,
            Tercile::Near => 0.5 * (t1 + t2),
            Tercile::Above => t2,
        }
    } else {
        stats::mean(&members)
    };
    let year = clim.annual_totals.last().map_or(0, |&(y, _)| y + 1);
    MeanForecast {
        target_period: Period::Year { year },
        mean,
        sd: stats::sample_sd(&members),
        source: ForecastSource::TercileCategory,
        anomalous: false,
    }
}

/// Default autoregressive order and differencing for annual totals.
pub const DEFAULT_AR_ORDER: usize = 1;
pub const DEFAULT_DIFFERENCING: u8 = 0;

/// Autoregressive model of annual totals, optionally on first differences.
///
/// `z_t = intercept + sum_i coefficients[i] * z_{t-1-i} + e_t`, where `z` is
/// the annual total (`differencing == 0`) or its first difference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnualArModel {
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub innovation_sd: f64,
    pub differencing: u8,
    /// The lag regression was rank deficient and the model fell back to the
    /// mean of the (differenced) series.
    pub intercept_only: bool,
    /// In-sample one-step root-mean-square error.
    pub in_sample_rmse: f64,
}

impl AnnualArModel {
    fn expanded_coefficients(&self) -> Vec<f64> {
        if self.differencing == 0 {
            return self.coefficients.clone();
        }
        // (1 - sum phi_i B^i)(1 - B) expanded as 1 - sum phi*_i B^i.
        let p = self.coefficients.len();
        let mut out = vec![0.0; p + 1];
        for i in 0..=p {
            let cur = self.coefficients.get(i).copied().unwrap_or(0.0);
            let prev = if i == 0 { -1.0 } else { self.coefficients[i - 1] };
            out[i] = cur - prev;
        }
        out
    }
}

/// Fits an AR(`order`) model to annual totals by least squares on the
/// mean-centred lag regression, after `differencing` first differences.
pub fn fit_annual_ar(totals: &[(i32, f64)], order: usize, differencing: u8) -> Result<AnnualArModel> {
    if order == 0 {
        return Err(Error::OutOfRange {
            name: "AR order",
            range: ">= 1",
            value: 0.0,
        });
    }
    if differencing > 1 {
        return Err(Error::OutOfRange {
            name: "differencing",
            range: "{0, 1}",
            value: f64::from(differencing),
        });
    }
    let d = usize::from(differencing);
    if totals.len() < order + d + 2 {
        return Err(Error::InsufficientData(format!(
            "AR({order}) with d={d} needs at least {} years, got {}",
            order + d + 2,
            totals.len()
        )));
    }
    let z = differenced(totals, differencing);
    let rows = z.len() - order;

    let response: Vec<f64> = z[order..].to_vec();
    let lags: Vec<Vec<f64>> = (1..=order).map(|lag| z[order - lag..z.len() - lag].to_vec()).collect();
    let y_mean = stats::mean(&response);
    let x_means: Vec<f64> = lags.iter().map(|c| stats::mean(c)).collect();

    let mut xtx = vec![vec![0.0; order]; order];
    let mut xty = vec![0.0; order];
    for t in 0..rows {
        let yc = response[t] - y_mean;
        for i in 0..order {
            let xi = lags[i][t] - x_means[i];
            xty[i] += xi * yc;
            for j in 0..order {
                xtx[i][j] += xi * (lags[j][t] - x_means[j]);
            }
        }
    }

    let Some(coefficients) = stats::solve_dense(xtx, xty, 1e-10) else {
        return Ok(intercept_only(&z, order, differencing));
    };
    let intercept = y_mean - coefficients.iter().zip(&x_means).map(|(c, m)| c * m).sum::<f64>();
    let rss: f64 = (0..rows)
        .map(|t| {
            let fitted = intercept + (0..order).map(|i| coefficients[i] * lags[i][t]).sum::<f64>();
            let r = response[t] - fitted;
            r * r
        })
        .sum();
    let dof = rows.saturating_sub(order + 1).max(1);
    Ok(AnnualArModel {
        order,
        coefficients,
        intercept,
        innovation_sd: libm::sqrt(rss / dof as f64),
        differencing,
        intercept_only: false,
        in_sample_rmse: libm::sqrt(rss / rows as f64),
    })
}

fn differenced(totals: &[(i32, f64)], differencing: u8) -> Vec<f64> {
    let levels = totals.iter().map(|&(_, t)| t);
    if differencing == 0 {
        levels.collect()
    } else {
        totals.windows(2).map(|w| w[1].1 - w[0].1).collect()
    }
}

fn intercept_only(z: &[f64], order: usize, differencing: u8) -> AnnualArModel {
    let mean = stats::mean(z);
    let rmse = libm::sqrt(z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / z.len() as f64);
    AnnualArModel {
        order,
        coefficients: vec![0.0; order],
        intercept: mean,
        innovation_sd: stats::sample_sd(z),
        differencing,
        intercept_only: true,
        in_sample_rmse: rmse,
    }
}

/// Iterated forecasts of the annual total for the `horizon` years after the
/// last history entry. The standard deviation follows the linear-prediction
/// variance `sigma^2 * sum_{j<h} psi_j^2`.
pub fn forecast_annual(
    model: &AnnualArModel,
    history: &[(i32, f64)],
    horizon: usize,
) -> Result<Vec<MeanForecast>> {
    if history.is_empty() {
        return Err(Error::EmptySample);
    }
    let need = model.order + usize::from(model.differencing);
    if history.len() < need {
        return Err(Error::InsufficientData(format!(
            "forecast needs {need} years of history, got {}",
            history.len()
        )));
    }
    let mut z = differenced(history, model.differencing);
    let mut level = history.last().map(|&(_, t)| t).unwrap_or(0.0);
    let last_year = history.last().map(|&(y, _)| y).unwrap_or(0);

    let expanded = model.expanded_coefficients();
    let mut psi = vec![1.0];
    let mut out = Vec::with_capacity(horizon);
    for h in 1..=horizon {
        let next = model.intercept
            + model
                .coefficients
                .iter()
                .enumerate()
                .map(|(i, c)| c * z[z.len() - 1 - i])
                .sum::<f64>();
        z.push(next);
        level = if model.differencing == 0 { next } else { level + next };

        let var: f64 = psi.iter().map(|p| p * p).sum::<f64>() * model.innovation_sd * model.innovation_sd;
        let j = psi.len();
        let next_psi: f64 = (1..=expanded.len().min(j)).map(|i| expanded[i - 1] * psi[j - i]).sum();
        psi.push(next_psi);

        out.push(MeanForecast {
            target_period: Period::Year {
                year: last_year + h as i32,
            },
            mean: level.max(0.0),
            sd: libm::sqrt(var),
            source: ForecastSource::ArModel,
            anomalous: level < 0.0,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn years(values: &[f64]) -> Vec<(i32, f64)> {
        values.iter().enumerate().map(|(i, &v)| (1950 + i as i32, v)).collect()
    }

    fn clim_with_totals(totals: &[f64]) -> ClimatologyModel {
        let annual = years(totals);
        let sorted = stats::sorted(totals);
        ClimatologyModel {
            monthly_mean: [0.0; 12],
            monthly_sd: [0.0; 12],
            annual_mean: stats::mean(totals),
            annual_sd: stats::sample_sd(totals),
            terciles_annual: (
                stats::quantile_sorted(&sorted, 1.0 / 3.0),
                stats::quantile_sorted(&sorted, 2.0 / 3.0),
            ),
            annual_totals: annual,
            degenerate: totals.len() < 2,
        }
    }

    #[test]
    fn climatology_of_constant_series() {
        let start = NaiveDate::from_ymd_opt(1950, 1, 1).unwrap();
        // 1950, 1951, 1952 (leap)
        let s = DailySeries::new(start, vec![2.0; 365 + 365 + 366], "c").unwrap();
        let c = fit_climatology(&s).unwrap();
        assert!(c.monthly_mean.iter().all(|&m| (m - 2.0).abs() < 1e-12));
        assert!(c.monthly_sd.iter().all(|&sd| sd.abs() < 1e-12));
        assert!((c.annual_mean - (730.0 + 730.0 + 732.0) / 3.0).abs() < 1e-9);
        assert!(c.annual_sd > 0.0 && c.annual_sd < 1.2);
        assert!(!c.degenerate);
    }

    #[test]
    fn climatology_single_year_is_degenerate() {
        let start = NaiveDate::from_ymd_opt(1950, 1, 1).unwrap();
        let s = DailySeries::new(start, vec![1.0; 365], "c").unwrap();
        let c = fit_climatology(&s).unwrap();
        assert!(c.degenerate);
        assert_eq!(c.annual_sd, 0.0);
        let short = DailySeries::new(start, vec![1.0; 100], "c").unwrap();
        assert!(matches!(fit_climatology(&short), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn terciles_and_targets() {
        let c = clim_with_totals(&[300.0, 600.0, 900.0]);
        let (t1, t2) = c.terciles_annual;
        assert!((t1 - 500.0).abs() < 1e-9 && (t2 - 700.0).abs() < 1e-9);
        assert_eq!(tercile_to_target(Tercile::Near, &c).mean, 600.0);
        assert_eq!(tercile_to_target(Tercile::Below, &c).mean, 300.0);
        assert_eq!(tercile_to_target(Tercile::Above, &c).mean, 900.0);
        assert_eq!(tercile_to_target(Tercile::Near, &c).source, ForecastSource::TercileCategory);

        let flat = clim_with_totals(&[450.0; 4]);
        for cat in [Tercile::Below, Tercile::Near, Tercile::Above] {
            assert_eq!(tercile_to_target(cat, &flat).mean, 450.0);
        }
    }

    #[test]
    fn recovers_noiseless_ar1() {
        let mut x = vec![1000.0];
        for _ in 1..20 {
            let last = *x.last().unwrap();
            x.push(0.5 * last + 100.0);
        }
        let m = fit_annual_ar(&years(&x), 1, 0).unwrap();
        assert!(!m.intercept_only);
        assert!((m.coefficients[0] - 0.5).abs() < 1e-9, "{:?}", m.coefficients);
        assert!((m.intercept - 100.0).abs() < 1e-6, "{}", m.intercept);
    }

    #[test]
    fn recovers_noiseless_ar2() {
        let (a, b, c) = (0.6, -0.3, 250.0);
        let mut x = vec![900.0, 100.0];
        for t in 2..30 {
            x.push(a * x[t - 1] + b * x[t - 2] + c);
        }
        let m = fit_annual_ar(&years(&x), 2, 0).unwrap();
        assert!((m.coefficients[0] - a).abs() < 1e-9);
        assert!((m.coefficients[1] - b).abs() < 1e-9);
    }

    #[test]
    fn differenced_fit_recovers_trend_dynamics() {
        // Differences follow d_{t+1} = 0.4 d_t + 6.
        let mut d = vec![50.0];
        for _ in 1..25 {
            let last = *d.last().unwrap();
            d.push(0.4 * last + 6.0);
        }
        let mut levels = vec![500.0];
        for step in &d {
            let last = *levels.last().unwrap();
            levels.push(last + step);
        }
        let m = fit_annual_ar(&years(&levels), 1, 1).unwrap();
        assert!((m.coefficients[0] - 0.4).abs() < 1e-9);
        let f = forecast_annual(&m, &years(&levels), 1).unwrap();
        let expected_step = 0.4 * d.last().unwrap() + 6.0;
        assert!((f[0].mean - (levels.last().unwrap() + expected_step)).abs() < 1e-6);
    }

    #[test]
    fn constant_totals_fall_back_to_intercept() {
        let m = fit_annual_ar(&years(&[500.0; 10]), 1, 0).unwrap();
        assert!(m.intercept_only);
        let f = forecast_annual(&m, &years(&[500.0; 10]), 3).unwrap();
        assert!(f.iter().all(|fc| (fc.mean - 500.0).abs() < 1e-12));
    }

    #[test]
    fn white_noise_has_small_coefficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 400;
        let values: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                800.0 + 100.0 * z
            })
            .collect();
        let m = fit_annual_ar(&years(&values), 1, 0).unwrap();
        let tol = 3.0 / libm::sqrt(n as f64);
        assert!(m.coefficients[0].abs() < tol, "{}", m.coefficients[0]);
        let sd = stats::sample_sd(&values);
        assert!((m.innovation_sd / sd - 1.0).abs() < tol);
    }

    #[test]
    fn too_short_history_is_rejected() {
        assert!(matches!(
            fit_annual_ar(&years(&[1.0, 2.0]), 1, 0),
            Err(Error::InsufficientData(_))
        ));
        assert!(fit_annual_ar(&years(&[1.0, 2.0, 3.0]), 1, 1).is_err());
        assert!(fit_annual_ar(&years(&[1.0, 2.0, 3.0, 4.0]), 1, 1).is_ok());
    }

    fn ar1(coef: f64, intercept: f64, sd: f64) -> AnnualArModel {
        AnnualArModel {
            order: 1,
            coefficients: vec![coef],
            intercept,
            innovation_sd: sd,
            differencing: 0,
            intercept_only: false,
            in_sample_rmse: 0.0,
        }
    }

    #[test]
    fn forecast_examples() {
        let m = ar1(0.5, 100.0, 10.0);
        let f = forecast_annual(&m, &[(2000, 400.0)], 2).unwrap();
        assert_eq!(f[0].mean, 300.0);
        assert_eq!(f[1].mean, 250.0);
        assert_eq!(f[0].target_period, Period::Year { year: 2001 });
        assert!((f[0].sd - 10.0).abs() < 1e-12);
        assert!((f[1].sd - 10.0 * libm::sqrt(1.25)).abs() < 1e-12);
        assert!(forecast_annual(&m, &[], 1).is_err());
    }

    #[test]
    fn forecast_converges_to_stationary_mean() {
        let m = ar1(0.5, 100.0, 1.0);
        let f = forecast_annual(&m, &[(2000, 1234.0)], 200).unwrap();
        assert!((f[199].mean - 200.0).abs() < 1e-6);
    }

    #[test]
    fn negative_forecast_is_floored_and_flagged() {
        let m = ar1(0.5, -300.0, 1.0);
        let f = forecast_annual(&m, &[(2000, 100.0)], 1).unwrap();
        assert_eq!(f[0].mean, 0.0);
        assert!(f[0].anomalous);
    }

    proptest::proptest! {
        #[test]
        fn tercile_targets_are_ordered(totals in proptest::collection::vec(100.0..2000.0f64, 3..40)) {
            let mut distinct = stats::sorted(&totals);
            distinct.dedup();
            proptest::prop_assume!(distinct.len() >= 3);
            let c = clim_with_totals(&totals);
            let below = tercile_to_target(Tercile::Below, &c).mean;
            let near = tercile_to_target(Tercile::Near, &c).mean;
            let above = tercile_to_target(Tercile::Above, &c).mean;
            proptest::prop_assert!(below <= near && near <= above);
        }
    }
}
