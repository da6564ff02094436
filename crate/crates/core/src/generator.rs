//! Scenario generators.
//!
//! [`ScenarioGenerator`] is the seam between ensemble conditioning and the
//! model that produces daily series. The baseline implementation combines the
//! monthly Markov occurrence model with KNN kernel resampling of amounts; a
//! learned generator can implement the same trait.

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calendar::{Month, REFERENCE_YEAR};
use crate::error::{Error, Result};
use crate::intensity::{fit_intensity, sample_intensity_scaled, IntensityConfig, IntensityModel};
use crate::markov::{fit_markov_with, simulate_span, MonthlyMarkovModel};
use crate::series::{classify, DailySeries, ExtremeDefinition, OccurrenceState, StateSequence};

/// Station label carried by generated series.
pub const SYNTHETIC_STATION: &str = "synthetic";

pub trait ScenarioGenerator {
    /// Threshold rule the generated series are judged by.
    fn definition(&self) -> &ExtremeDefinition;

    /// Whether days of `state` can be produced in `month`.
    fn supports(&self, month: Month, state: OccurrenceState) -> bool;

    /// One series of `n_days` days from `start`, fully determined by `seed`.
    /// Non-dry amounts are multiplied by `scale` while still honouring the
    /// state each day was generated in.
    fn generate(&self, start: NaiveDate, n_days: usize, seed: u64, scale: f64) -> Result<DailySeries>;

    /// Edits `series` so that it contains an extreme day (`extreme == true`)
    /// or none, changing as few days as the generator allows.
    fn force_class(&self, series: &DailySeries, extreme: bool, seed: u64, scale: f64) -> Result<DailySeries>;
}

/// Owned, fitted baseline models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedBaseline {
    pub markov: MonthlyMarkovModel,
    pub intensity: IntensityModel,
    pub definition: ExtremeDefinition,
}

impl FittedBaseline {
    pub fn fit(
        series: &DailySeries,
        definition: ExtremeDefinition,
        smoothing: f64,
        intensity: &IntensityConfig,
    ) -> FittedBaseline {
        let states = classify(series, &definition);
        FittedBaseline {
            markov: fit_markov_with(&states, smoothing),
            intensity: fit_intensity(series, &definition, intensity),
            definition,
        }
    }

    pub fn generator(&self) -> Result<BaselineGenerator<'_>> {
        BaselineGenerator::new(&self.markov, &self.intensity, &self.definition)
    }
}

/// Markov occurrence plus KNN kernel intensity, borrowing fitted models.
#[derive(Clone, Copy, Debug)]
pub struct BaselineGenerator<'a> {
    markov: &'a MonthlyMarkovModel,
    intensity: &'a IntensityModel,
    definition: &'a ExtremeDefinition,
}

impl<'a> BaselineGenerator<'a> {
    /// Dry days are generated as exactly 0 mm, so the wet threshold must be
    /// positive for them to classify as Dry.
    pub fn new(
        markov: &'a MonthlyMarkovModel,
        intensity: &'a IntensityModel,
        definition: &'a ExtremeDefinition,
    ) -> Result<Self> {
        definition.validate()?;
        if definition.wet_threshold <= 0.0 {
            return Err(Error::InvalidDefinition {
                wet: definition.wet_threshold,
                extreme: definition.extreme_threshold,
            });
        }
        Ok(BaselineGenerator {
            markov,
            intensity,
            definition,
        })
    }

    /// Generated series together with the occurrence sequence it was built from.
    pub fn generate_with_states(
        &self,
        start: NaiveDate,
        n_days: usize,
        seed: u64,
        scale: f64,
    ) -> Result<(DailySeries, StateSequence)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut states = simulate_span(self.markov, start, n_days, &mut rng)?;
        for i in 0..states.len() {
            let month = Month::of(states.start_date + chrono::Days::new(i as u64));
            states.states[i] = self.available(month, states.states[i]);
        }
        let mut values = alloc::vec::Vec::with_capacity(n_days);
        let mut prev: Option<(OccurrenceState, f64)> = None;
        for (date, state) in states.iter() {
            let value = if state.is_dry() {
                0.0
            } else {
                self.draw(Month::of(date), state, prev, scale, &mut rng)?
            };
            values.push(value);
            prev = Some((state, value));
        }
        let series = DailySeries::new(start, values, SYNTHETIC_STATION)?;
        Ok((series, states))
    }

    /// States without analogues in their month are swapped for the other wet
    /// state, or Dry when neither has any.
    fn available(&self, month: Month, state: OccurrenceState) -> OccurrenceState {
        use OccurrenceState::*;
        if self.supports(month, state) {
            return state;
        }
        let other = if state == Wet { Extreme } else { Wet };
        if self.supports(month, other) {
            other
        } else {
            Dry
        }
    }

    /// The previous day's amount is the neighbour context only when that day
    /// was in the same state; otherwise the whole pool is sampled.
    fn draw<R: Rng + ?Sized>(
        &self,
        month: Month,
        state: OccurrenceState,
        prev: Option<(OccurrenceState, f64)>,
        scale: f64,
        rng: &mut R,
    ) -> Result<f64> {
        let context = prev.filter(|&(s, _)| s == state).map(|(_, v)| v / scale);
        sample_intensity_scaled(self.intensity, month, state, context, scale, rng)
    }
}

impl ScenarioGenerator for BaselineGenerator<'_> {
    fn definition(&self) -> &ExtremeDefinition {
        self.definition
    }

    fn supports(&self, month: Month, state: OccurrenceState) -> bool {
        state.is_dry() || (self.markov.is_fit(month) && self.intensity.has_analogue(month, state))
    }

    fn generate(&self, start: NaiveDate, n_days: usize, seed: u64, scale: f64) -> Result<DailySeries> {
        self.generate_with_states(start, n_days, seed, scale).map(|(s, _)| s)
    }

    fn force_class(&self, series: &DailySeries, extreme: bool, seed: u64, scale: f64) -> Result<DailySeries> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states = classify(series, self.definition);
        let mut values = series.values().to_vec();
        if extreme {
            let candidates: alloc::vec::Vec<usize> = (0..values.len())
                .filter(|&i| self.supports(Month::of(series.date_at(i)), OccurrenceState::Extreme))
                .collect();
            if candidates.is_empty() {
                return Err(Error::ImpossibleClass(alloc::format!(
                    "no month between {} and {} has extreme analogues",
                    series.start_date(),
                    series.end_date()
                )));
            }
            let day = candidates[rng.random_range(0..candidates.len())];
            let prev = day.checked_sub(1).map(|p| (states.states[p], values[p]));
            values[day] = self.draw(Month::of(series.date_at(day)), OccurrenceState::Extreme, prev, scale, &mut rng)?;
        } else {
            let mut prev: Option<(OccurrenceState, f64)> = None;
            for i in 0..values.len() {
                let mut state = states.states[i];
                if state == OccurrenceState::Extreme {
                    let month = Month::of(series.date_at(i));
                    if self.supports(month, OccurrenceState::Wet) {
                        state = OccurrenceState::Wet;
                        values[i] = self.draw(month, state, prev, scale, &mut rng)?;
                    } else {
                        state = OccurrenceState::Dry;
                        values[i] = 0.0;
                    }
                }
                prev = Some((state, values[i]));
            }
        }
        series.with_values(values)
    }
}

/// One scenario for `month`, laid out from the first of that month in the
/// reference year and running for `n_days` days (crossing into later months
/// if `n_days` exceeds the month).
pub fn generate_scenario(
    markov: &MonthlyMarkovModel,
    intensity: &IntensityModel,
    def: &ExtremeDefinition,
    month: Month,
    n_days: usize,
    seed: u64,
) -> Result<DailySeries> {
    let start = NaiveDate::from_ymd_opt(REFERENCE_YEAR, month.number(), 1).expect("valid month");
    BaselineGenerator::new(markov, intensity, def)?.generate(start, n_days, seed, 1.0)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::intensity::StatePool;
    use crate::markov::MonthChain;
    use alloc::vec;

    pub(crate) fn toy_models(transition: [[f64; 3]; 3], initial: [f64; 3]) -> (MonthlyMarkovModel, IntensityModel, ExtremeDefinition) {
        let def = ExtremeDefinition::new(0.1, 18.2).unwrap();
        let chain = MonthChain {
            transition,
            initial,
            n_days: 100,
        };
        let markov = MonthlyMarkovModel {
            months: core::array::from_fn(|_| Some(chain.clone())),
            smoothing: 0.5,
        };
        let wet = StatePool {
            values: vec![0.5, 1.0, 2.0, 4.0, 7.0, 11.0, 16.0],
            bandwidth: 1.5,
            lower: 0.1,
            upper: Some(18.2),
            borrowed: false,
        };
        let ext = StatePool {
            values: vec![19.0, 23.0, 31.0, 45.0],
            bandwidth: 4.0,
            lower: 18.2,
            upper: None,
            borrowed: false,
        };
        let intensity = IntensityModel {
            pools: core::array::from_fn(|_| [wet.clone(), ext.clone()]),
            knn_k: None,
        };
        (markov, intensity, def)
    }

    #[test]
    fn absorbing_dry_gives_zeros() {
        let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let (m, i, d) = toy_models(identity, [1.0, 0.0, 0.0]);
        let s = generate_scenario(&m, &i, &d, Month::JANUARY, 31, 7).unwrap();
        assert_eq!(s.values(), &[0.0; 31][..]);
    }

    #[test]
    fn same_seed_same_series() {
        let t = [[0.6, 0.3, 0.1], [0.4, 0.4, 0.2], [0.3, 0.4, 0.3]];
        let (m, i, d) = toy_models(t, [0.5, 0.4, 0.1]);
        let a = generate_scenario(&m, &i, &d, Month::JANUARY, 31, 42).unwrap();
        let b = generate_scenario(&m, &i, &d, Month::JANUARY, 31, 42).unwrap();
        assert_eq!(a.values().iter().map(|v| v.to_bits()).collect::<alloc::vec::Vec<_>>(),
                   b.values().iter().map(|v| v.to_bits()).collect::<alloc::vec::Vec<_>>());
        let c = generate_scenario(&m, &i, &d, Month::JANUARY, 31, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_wet_threshold_is_rejected() {
        let t = [[0.6, 0.3, 0.1]; 3];
        let (m, i, _) = toy_models(t, [0.5, 0.4, 0.1]);
        let d = ExtremeDefinition::new(0.0, 18.2).unwrap();
        assert!(BaselineGenerator::new(&m, &i, &d).is_err());
    }

    #[test]
    fn forcing_adds_or_removes_extremes() {
        let t = [[0.5, 0.3, 0.2], [0.4, 0.3, 0.3], [0.3, 0.3, 0.4]];
        let (m, i, d) = toy_models(t, [0.4, 0.3, 0.3]);
        let g = BaselineGenerator::new(&m, &i, &d).unwrap();
        let start = NaiveDate::from_ymd_opt(2001, 1, 1).unwrap();
        for seed in 0..50 {
            let s = g.generate(start, 31, seed, 1.0).unwrap();
            let none = g.force_class(&s, false, seed, 1.0).unwrap();
            assert!(!d.contains_extreme(&none));
            let before = classify(&s, &d);
            let after = classify(&none, &d);
            for (a, b) in before.states.iter().zip(&after.states) {
                match a {
                    OccurrenceState::Extreme => assert_eq!(*b, OccurrenceState::Wet),
                    other => assert_eq!(b, other),
                }
            }
            let dry = vec![0.0; 31];
            let forced = g.force_class(&s.with_values(dry).unwrap(), true, seed, 1.0).unwrap();
            assert_eq!(classify(&forced, &d).count(OccurrenceState::Extreme), 1);
        }
    }

    proptest::proptest! {
        #[test]
        fn occurrence_consistency(seed in proptest::prelude::any::<u64>(), n in 1usize..120,
                                  month in 1u32..=12, scale in 0.3..3.0f64) {
            let t = [[0.5, 0.35, 0.15], [0.3, 0.45, 0.25], [0.2, 0.4, 0.4]];
            let (m, i, d) = toy_models(t, [0.4, 0.4, 0.2]);
            let g = BaselineGenerator::new(&m, &i, &d).unwrap();
            let start = NaiveDate::from_ymd_opt(2003, month, 1).unwrap();
            let (series, states) = g.generate_with_states(start, n, seed, scale).unwrap();
            proptest::prop_assert_eq!(classify(&series, &d), states);
        }
    }
}
