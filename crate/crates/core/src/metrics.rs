//! Verification metrics: Brier score, ensemble CRPS, QQ tables, spell
//! statistics and the two-sample Kolmogorov-Smirnov distance.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{OccurrenceState, StateSequence};
use crate::stats::{quantile_sorted, sorted};

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::InvalidValue {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// Mean squared difference between probability forecasts and 0/1 outcomes.
pub fn brier_score(forecasts: &[f64], outcomes: &[bool]) -> Result<f64> {
    if forecasts.len() != outcomes.len() {
        return Err(Error::LengthMismatch {
            left: forecasts.len(),
            right: outcomes.len(),
        });
    }
    if forecasts.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(&f) = forecasts.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::OutOfRange {
            name: "forecast probability",
            range: "[0, 1]",
            value: f,
        });
    }
    let sum: f64 = forecasts
        .iter()
        .zip(outcomes)
        .map(|(&f, &o)| {
            let d = f - if o { 1.0 } else { 0.0 };
            d * d
        })
        .sum();
    Ok(sum / forecasts.len() as f64)
}

/// CRPS of an ensemble against one observation,
/// `mean|x_i - y| - (1 / 2m^2) sum_ij |x_i - x_j|`.
///
/// The pair sum is evaluated on the sorted members as
/// `2 sum_i (2i - m + 1) x_(i)`, which is O(m log m).
pub fn crps_ensemble(ensemble: &[f64], obs: f64) -> Result<f64> {
    if ensemble.is_empty() {
        return Err(Error::EmptySample);
    }
    check_finite(ensemble)?;
    if !obs.is_finite() {
        return Err(Error::InvalidValue { index: 0, value: obs });
    }
    let m = ensemble.len() as f64;
    let xs = sorted(ensemble);
    let abs_err: f64 = xs.iter().map(|x| (x - obs).abs()).sum::<f64>() / m;
    let pair: f64 = xs
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * i as f64 - m + 1.0) * x)
        .sum::<f64>()
        * 2.0;
    Ok(abs_err - pair / (2.0 * m * m))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QqData {
    pub probs: Vec<f64>,
    pub sim_q: Vec<f64>,
    pub hist_q: Vec<f64>,
}

impl QqData {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Largest relative gap `|sim - hist| / hist` over levels where the
    /// historical quantile is positive, restricted to `[lo, hi]`.
    pub fn max_relative_gap(&self, lo: f64, hi: f64) -> f64 {
        self.probs
            .iter()
            .zip(self.sim_q.iter().zip(&self.hist_q))
            .filter(|(p, (_, h))| **p >= lo && **p <= hi && **h > 0.0)
            .map(|(_, (s, h))| (s - h).abs() / h)
            .fold(0.0, f64::max)
    }
}

/// Quantiles of both pools at the midpoint levels `(i + 0.5) / n_points`.
pub fn qq_data(simulated: &[f64], historical: &[f64], n_points: usize) -> Result<QqData> {
    if simulated.is_empty() || historical.is_empty() {
        return Err(Error::EmptySample);
    }
    if n_points < 2 {
        return Err(Error::OutOfRange {
            name: "QQ point count",
            range: ">= 2",
            value: n_points as f64,
        });
    }
    check_finite(simulated)?;
    check_finite(historical)?;
    let sim = sorted(simulated);
    let hist = sorted(historical);
    let probs: Vec<f64> = (0..n_points).map(|i| (i as f64 + 0.5) / n_points as f64).collect();
    Ok(QqData {
        sim_q: probs.iter().map(|&p| quantile_sorted(&sim, p)).collect(),
        hist_q: probs.iter().map(|&p| quantile_sorted(&hist, p)).collect(),
        probs,
    })
}

/// Run statistics of Dry versus non-Dry days. Means are 0 when there is no
/// spell of that kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpellStats {
    pub dry_spells: usize,
    pub mean_dry_spell: f64,
    pub max_dry_spell: usize,
    pub wet_spells: usize,
    pub mean_wet_spell: f64,
    pub max_wet_spell: usize,
    pub extreme_days: usize,
}

pub fn spell_stats(states: &StateSequence) -> SpellStats {
    let mut dry = Vec::new();
    let mut wet = Vec::new();
    let mut run = 0usize;
    let mut current: Option<bool> = None;
    for &s in &states.states {
        let is_dry = s.is_dry();
        if current == Some(is_dry) {
            run += 1;
        } else {
            if let Some(d) = current {
                if d { dry.push(run) } else { wet.push(run) }
            }
            current = Some(is_dry);
            run = 1;
        }
    }
    if let Some(d) = current {
        if d { dry.push(run) } else { wet.push(run) }
    }
    let mean = |v: &[usize]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<usize>() as f64 / v.len() as f64
        }
    };
    SpellStats {
        dry_spells: dry.len(),
        mean_dry_spell: mean(&dry),
        max_dry_spell: dry.iter().copied().max().unwrap_or(0),
        wet_spells: wet.len(),
        mean_wet_spell: mean(&wet),
        max_wet_spell: wet.iter().copied().max().unwrap_or(0),
        extreme_days: states.count(OccurrenceState::Extreme),
    }
}

/// Two-sample Kolmogorov-Smirnov distance `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    check_finite(a)?;
    check_finite(b)?;
    let (xa, xb) = (sorted(a), sorted(b));
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xa.len() && j < xb.len() {
        // Step past every copy of the smallest remaining value in both pools
        // before comparing, so ties are evaluated at the jump.
        let x = xa[i].min(xb[j]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use OccurrenceState::*;

    fn seq(states: &[OccurrenceState]) -> StateSequence {
        StateSequence::new(NaiveDate::from_ymd_opt(2001, 1, 1).unwrap(), states.to_vec())
    }

    #[test]
    fn brier_examples() {
        assert_eq!(brier_score(&[1.0], &[true]).unwrap(), 0.0);
        assert_eq!(brier_score(&[0.5, 0.5], &[false, true]).unwrap(), 0.25);
        let b = brier_score(&[0.3, 0.7, 0.9], &[false, true, true]).unwrap();
        assert!((b - 0.19 / 3.0).abs() < 1e-15);
        assert!(matches!(brier_score(&[0.5], &[true, false]), Err(Error::LengthMismatch { .. })));
        assert!(brier_score(&[1.5], &[true]).is_err());
    }

    #[test]
    fn crps_examples() {
        assert_eq!(crps_ensemble(&[3.0], 3.0).unwrap(), 0.0);
        assert!((crps_ensemble(&[0.0, 2.0], 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(crps_ensemble(&[5.0], 2.0).unwrap(), 3.0);
        assert!(crps_ensemble(&[], 2.0).is_err());
    }

    #[test]
    fn qq_examples() {
        let q = qq_data(&[0.0, 10.0], &[0.0, 10.0], 2).unwrap();
        assert_eq!(q.probs, vec![0.25, 0.75]);
        assert_eq!(q.sim_q, vec![2.5, 7.5]);
        assert_eq!(q.sim_q, q.hist_q);

        let hist = [0.0, 1.0, 3.5, 8.0, 20.0];
        let sim: Vec<f64> = hist.iter().map(|x| x + 10.0).collect();
        let q = qq_data(&sim, &hist, 9).unwrap();
        for (s, h) in q.sim_q.iter().zip(&q.hist_q) {
            assert!((s - h - 10.0).abs() < 1e-12);
        }
        assert!(qq_data(&[], &hist, 4).is_err());
        assert!(qq_data(&hist, &hist, 1).is_err());
    }

    #[test]
    fn spell_examples() {
        let s = spell_stats(&seq(&[Dry, Dry, Wet, Dry]));
        assert_eq!((s.dry_spells, s.mean_dry_spell, s.max_dry_spell), (2, 1.5, 2));
        assert_eq!((s.wet_spells, s.max_wet_spell), (1, 1));

        let s = spell_stats(&seq(&[Dry; 7]));
        assert_eq!((s.dry_spells, s.max_dry_spell, s.wet_spells), (1, 7, 0));
        assert_eq!(s.mean_wet_spell, 0.0);

        let s = spell_stats(&seq(&[Extreme]));
        assert_eq!((s.wet_spells, s.max_wet_spell, s.extreme_days), (1, 1, 1));

        let s = spell_stats(&seq(&[Wet, Extreme, Wet, Dry, Extreme]));
        assert_eq!((s.wet_spells, s.max_wet_spell, s.mean_wet_spell), (2, 3, 2.0));
        assert_eq!(s.extreme_days, 2);
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_statistic(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(ks_statistic(&[0.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(ks_statistic(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]).unwrap(), 0.5);
        assert!(ks_statistic(&[], &[1.0]).is_err());
    }

    // Midpoint sum of (F(x) - 1{x >= y})^2 on a grid of step 1/1024. Inputs
    // are snapped to multiples of 1/64 so every jump sits on a cell edge.
    fn crps_by_integration(ens: &[f64], y: f64) -> f64 {
        let lo = ens.iter().copied().fold(y, f64::min) - 1.0;
        let hi = ens.iter().copied().fold(y, f64::max) + 1.0;
        let dx = 1.0 / 1024.0;
        let steps = ((hi - lo) / dx).round() as usize;
        let m = ens.len() as f64;
        (0..steps)
            .map(|k| {
                let x = lo + (k as f64 + 0.5) * dx;
                let f = ens.iter().filter(|&&e| e <= x).count() as f64 / m;
                let h = if x >= y { 1.0 } else { 0.0 };
                (f - h) * (f - h) * dx
            })
            .sum()
    }

    // Brute-force ECDF gap at every pooled point.
    fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
        let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
        a.iter()
            .chain(b)
            .map(|&x| (cdf(a, x) - cdf(b, x)).abs())
            .fold(0.0, f64::max)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn crps_matches_integration(ens in proptest::collection::vec(-5.0..5.0f64, 1..=20), y in -6.0..6.0f64) {
            let snap = |v: f64| (v * 64.0).round() / 64.0;
            let ens: Vec<f64> = ens.into_iter().map(snap).collect();
            let y = snap(y);
            let direct = crps_ensemble(&ens, y).unwrap();
            let numeric = crps_by_integration(&ens, y);
            prop_assert!((direct - numeric).abs() <= 1e-6, "{} vs {}", direct, numeric);
        }

        #[test]
        fn brier_minimised_at_base_rate(outcomes in proptest::collection::vec(any::<bool>(), 1..40)) {
            let n = outcomes.len();
            let base = outcomes.iter().filter(|&&o| o).count() as f64 / n as f64;
            let at_base = brier_score(&vec![base; n], &outcomes).unwrap();
            for k in 0..=1000 {
                let f = k as f64 / 1000.0;
                prop_assert!(brier_score(&vec![f; n], &outcomes).unwrap() >= at_base - 1e-12);
            }
        }

        #[test]
        fn ks_properties(a in proptest::collection::vec(0u8..20, 1..30), b in proptest::collection::vec(0u8..20, 1..30)) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let d = ks_statistic(&a, &b).unwrap();
            prop_assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
            prop_assert_eq!(d, ks_statistic(&b, &a).unwrap());
            prop_assert!((d - ks_brute(&a, &b)).abs() < 1e-12);
            let t = |v: &Vec<f64>| v.iter().map(|x| libm::exp(x / 3.0) + x * x).collect::<Vec<_>>();
            prop_assert!((d - ks_statistic(&t(&a), &t(&b)).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn qq_on_equal_pools_is_diagonal(pool in proptest::collection::vec(0.0..100.0f64, 1..50), n in 2usize..30) {
            let q = qq_data(&pool, &pool, n).unwrap();
            prop_assert_eq!(&q.sim_q, &q.hist_q);
            prop_assert!(q.sim_q.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
