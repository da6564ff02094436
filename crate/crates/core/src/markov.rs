//! Per-month three-state (dry/wet/extreme) first-order Markov chain.

use alloc::format;
use alloc::vec::Vec;

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::calendar::Month;
use crate::error::{Error, Result};
use crate::series::{OccurrenceState, StateSequence};

/// Additive (Jeffreys) smoothing applied to every transition count.
pub const DEFAULT_SMOOTHING: f64 = 0.5;

const ROW_SUM_TOLERANCE: f64 = 1e-12;

/// Transition matrix and initial distribution for one calendar month.
/// Rows and columns are indexed Dry, Wet, Extreme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonthChain {
    pub transition: [[f64; 3]; 3],
    pub initial: [f64; 3],
    /// Days of this month in the fitting record.
    pub n_days: usize,
}

impl MonthChain {
    fn validate(&self, month: Month) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidModel(format!("month {month}: {what}")));
        for row in self.transition.iter().chain(core::iter::once(&self.initial)) {
            if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return bad("negative or non-finite probability");
            }
            if (row.iter().sum::<f64>() - 1.0).abs() > ROW_SUM_TOLERANCE {
                return bad("distribution does not sum to 1");
            }
        }
        Ok(())
    }

    pub fn step<R: Rng + ?Sized>(&self, from: OccurrenceState, rng: &mut R) -> OccurrenceState {
        draw(&self.transition[from.index()], rng)
    }

    pub fn start<R: Rng + ?Sized>(&self, rng: &mut R) -> OccurrenceState {
        draw(&self.initial, rng)
    }
}

fn draw<R: Rng + ?Sized>(probs: &[f64; 3], rng: &mut R) -> OccurrenceState {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return OccurrenceState::ALL[i];
        }
    }
    // u landed in the rounding slack above the cumulative sum; take the last
    // state with positive mass.
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    OccurrenceState::ALL[last]
}

/// Twelve monthly chains. Months with fewer than two days in the fitting
/// record are left unfit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonthlyMarkovModel {
    pub months: [Option<MonthChain>; 12],
    pub smoothing: f64,
}

impl MonthlyMarkovModel {
    pub fn chain(&self, month: Month) -> Result<&MonthChain> {
        self.months[month.index()]
            .as_ref()
            .ok_or(Error::UnfitMonth { month })
    }

    pub fn is_fit(&self, month: Month) -> bool {
        self.months[month.index()].is_some()
    }

    /// Checks that every fitted row is a probability distribution.
    pub fn validate(&self) -> Result<()> {
        for month in Month::all() {
            if let Some(chain) = &self.months[month.index()] {
                chain.validate(month)?;
            }
        }
        Ok(())
    }
}

/// Fits monthly chains with the default smoothing.
pub fn fit_markov(states: &StateSequence) -> MonthlyMarkovModel {
    fit_markov_with(states, DEFAULT_SMOOTHING)
}

/// Fits monthly chains by smoothed transition counting:
/// `T[i][j] = (n_ij + a) / (n_i + 3a)`. A transition belongs to the month of
/// its destination day. The initial distribution is the smoothed marginal
/// state frequency of the month.
pub fn fit_markov_with(states: &StateSequence, smoothing: f64) -> MonthlyMarkovModel {
    let alpha = smoothing.max(0.0);
    let mut transitions = [[[0usize; 3]; 3]; 12];
    let mut marginal = [[0usize; 3]; 12];
    let mut prev: Option<OccurrenceState> = None;
    for (date, state) in states.iter() {
        let m = Month::of(date).index();
        marginal[m][state.index()] += 1;
        if let Some(p) = prev {
            transitions[m][p.index()][state.index()] += 1;
        }
        prev = Some(state);
    }

    let months = core::array::from_fn(|m| {
        let n_days: usize = marginal[m].iter().sum();
        if n_days < 2 {
            return None;
        }
        let transition = core::array::from_fn(|i| smoothed(&transitions[m][i], alpha));
        Some(MonthChain {
            transition,
            initial: smoothed(&marginal[m], alpha),
            n_days,
        })
    });
    MonthlyMarkovModel {
        months,
        smoothing: alpha,
    }
}

fn smoothed(counts: &[usize; 3], alpha: f64) -> [f64; 3] {
    let total = counts.iter().sum::<usize>() as f64 + 3.0 * alpha;
    if total <= 0.0 {
        return [1.0 / 3.0; 3];
    }
    counts.map(|c| (c as f64 + alpha) / total)
}

/// Simulates `n_days` states from one month's chain: the first from the
/// initial distribution, each later one from the previous row.
pub fn simulate_occurrence<R: Rng + ?Sized>(
    model: &MonthlyMarkovModel,
    month: Month,
    n_days: usize,
    rng: &mut R,
) -> Result<Vec<OccurrenceState>> {
    let chain = model.chain(month)?;
    let mut out = Vec::with_capacity(n_days);
    if n_days == 0 {
        return Ok(out);
    }
    let mut state = chain.start(rng);
    out.push(state);
    for _ in 1..n_days {
        state = chain.step(state, rng);
        out.push(state);
    }
    Ok(out)
}

/// Simulates a dated span. Each transition uses the chain of the
/// destination day's month, mirroring how the model is fitted.
pub fn simulate_span<R: Rng + ?Sized>(
    model: &MonthlyMarkovModel,
    start: NaiveDate,
    n_days: usize,
    rng: &mut R,
) -> Result<StateSequence> {
    let mut states = Vec::with_capacity(n_days);
    let mut prev: Option<OccurrenceState> = None;
    for date in start.iter_days().take(n_days) {
        let chain = model.chain(Month::of(date))?;
        let state = match prev {
            None => chain.start(rng),
            Some(p) => chain.step(p, rng),
        };
        states.push(state);
        prev = Some(state);
    }
    Ok(StateSequence::new(start, states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use OccurrenceState::*;

    fn jan(year: i32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(year, 1, day).unwrap()
    }

    #[test]
    fn hand_counted_january() {
        let seq = StateSequence::new(jan(2001, 1), vec![Dry, Dry, Wet, Dry]);
        let model = fit_markov(&seq);
        let chain = model.chain(Month::JANUARY).unwrap();
        // From Dry: D->D once, D->W once; n = 2, denominator 2 + 1.5.
        let d = chain.transition[Dry.index()];
        assert!((d[0] - 1.5 / 3.5).abs() < 1e-15);
        assert!((d[1] - 1.5 / 3.5).abs() < 1e-15);
        assert!((d[2] - 0.5 / 3.5).abs() < 1e-15);
        // Extreme was never visited: uniform row.
        assert_eq!(chain.transition[Extreme.index()], [1.0 / 3.0; 3]);
        // Marginal: 3 Dry, 1 Wet out of 4 days.
        let expect = [3.5 / 5.5, 1.5 / 5.5, 0.5 / 5.5];
        for (a, b) in chain.initial.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(!model.is_fit(Month::new(2).unwrap()));
        model.validate().unwrap();
    }

    #[test]
    fn all_dry_record() {
        let n = 31;
        let seq = StateSequence::new(jan(2001, 1), vec![Dry; n]);
        let chain = fit_markov(&seq).months[0].clone().unwrap();
        let transitions = (n - 1) as f64;
        assert!((chain.transition[0][0] - (transitions + 0.5) / (transitions + 1.5)).abs() < 1e-15);
    }

    #[test]
    fn alternating_wet_extreme_limit() {
        let states: Vec<_> = (0..31).map(|i| if i % 2 == 0 { Wet } else { Extreme }).collect();
        let seq = StateSequence::new(jan(2001, 1), states);
        let chain = fit_markov(&seq).months[0].clone().unwrap();
        // 15 W->E transitions and 15 E->W transitions.
        assert!((chain.transition[Wet.index()][Extreme.index()] - 15.5 / 16.5).abs() < 1e-15);
        assert!((chain.transition[Extreme.index()][Wet.index()] - 15.5 / 16.5).abs() < 1e-15);
    }

    #[test]
    fn cross_month_transition_belongs_to_destination() {
        let start = NaiveDate::from_ymd_opt(2001, 1, 30).unwrap();
        let seq = StateSequence::new(start, vec![Dry, Dry, Wet, Wet]);
        let model = fit_markov_with(&seq, 0.0);
        let jan = model.chain(Month::JANUARY).unwrap();
        let feb = model.chain(Month::new(2).unwrap()).unwrap();
        assert_eq!(jan.transition[Dry.index()], [1.0, 0.0, 0.0]);
        // 31 Jan (Dry) -> 1 Feb (Wet) and 1 Feb -> 2 Feb are February's.
        assert_eq!(feb.transition[Dry.index()], [0.0, 1.0, 0.0]);
        assert_eq!(feb.transition[Wet.index()], [0.0, 1.0, 0.0]);
    }

    fn fixed_model(transition: [[f64; 3]; 3], initial: [f64; 3]) -> MonthlyMarkovModel {
        let chain = MonthChain {
            transition,
            initial,
            n_days: 100,
        };
        MonthlyMarkovModel {
            months: core::array::from_fn(|_| Some(chain.clone())),
            smoothing: 0.5,
        }
    }

    #[test]
    fn absorbing_chains() {
        let identity = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let dry = fixed_model(identity, [1.0, 0.0, 0.0]);
        let s = simulate_occurrence(&dry, Month::JANUARY, 31, &mut rng).unwrap();
        assert!(s.iter().all(|&x| x == Dry));
        let ext = fixed_model(identity, [0.0, 0.0, 1.0]);
        let s = simulate_occurrence(&ext, Month::JANUARY, 31, &mut rng).unwrap();
        assert!(s.iter().all(|&x| x == Extreme));
    }

    #[test]
    fn unfit_month_is_an_error() {
        let seq = StateSequence::new(jan(2001, 1), vec![Dry; 5]);
        let model = fit_markov(&seq);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            simulate_occurrence(&model, Month::new(7).unwrap(), 3, &mut rng),
            Err(Error::UnfitMonth { .. })
        ));
    }

    #[test]
    fn validate_rejects_broken_rows() {
        let mut model = fixed_model([[0.5, 0.5, 0.0], [0.2, 0.2, 0.6], [0.3, 0.3, 0.4]], [0.4, 0.4, 0.2]);
        model.validate().unwrap();
        model.months[3].as_mut().unwrap().transition[1][1] = 0.3;
        assert!(matches!(model.validate(), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn long_simulation_matches_transition_matrix() {
        let t = [[0.7, 0.25, 0.05], [0.4, 0.45, 0.15], [0.3, 0.4, 0.3]];
        let model = fixed_model(t, [0.6, 0.3, 0.1]);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let s = simulate_occurrence(&model, Month::JANUARY, 1_000_000, &mut rng).unwrap();
        // Brute-force recount of consecutive pairs.
        let mut counts = [[0usize; 3]; 3];
        for w in s.windows(2) {
            counts[w[0].index()][w[1].index()] += 1;
        }
        for i in 0..3 {
            let row: usize = counts[i].iter().sum();
            for j in 0..3 {
                let est = counts[i][j] as f64 / row as f64;
                assert!((est - t[i][j]).abs() < 0.005, "T[{i}][{j}] = {est}");
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let model = fixed_model([[0.5, 0.4, 0.1]; 3], [0.5, 0.4, 0.1]);
        let a = simulate_occurrence(&model, Month::JANUARY, 200, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = simulate_occurrence(&model, Month::JANUARY, 200, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    proptest::proptest! {
        #[test]
        fn rows_are_stochastic(raw in proptest::collection::vec(0usize..3, 0..900),
                               offset in 0u64..365, alpha in 0.0..2.0f64) {
            let start = jan(2001, 1) + chrono::Days::new(offset);
            let states = raw.iter().map(|&i| OccurrenceState::from_index(i).unwrap()).collect();
            let model = fit_markov_with(&StateSequence::new(start, states), alpha);
            proptest::prop_assert!(model.validate().is_ok());
        }
    }
}
