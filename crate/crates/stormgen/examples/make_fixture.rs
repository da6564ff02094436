//! Regenerates the bundled fixtures:
//!
//! * `fixtures/synthetic_1949_2010.csv`: 62 years of daily precipitation
//!   from a seasonal two-state occurrence chain with gamma amounts.
//! * `fixtures/threshold_2001.csv`: the 365 values 0.0, 0.1, ..., 36.4 in a
//!   scrambled order over 2001, whose type-7 95th percentile is 34.58.
//!
//! Run with `cargo run -p stormgen --example make_fixture`.

use std::f64::consts::PI;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use stormgen::ingest::write_daily_csv;
use stormgen_core::DailySeries;

const SEED: u64 = 19_490_101;

fn synthetic() -> DailySeries {
    let start = NaiveDate::from_ymd_opt(1949, 1, 1).unwrap();
    let end = NaiveDate::from_ymd_opt(2010, 12, 31).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut wet = false;
    let mut values = Vec::new();
    for date in start.iter_days().take_while(|d| *d <= end) {
        let phase = 2.0 * PI * (date.ordinal0() as f64 - 15.0) / 365.25;
        let p_wet = if wet { 0.45 } else { 0.25 } + 0.08 * phase.cos();
        wet = rng.random::<f64>() < p_wet;
        let value = if wet {
            let scale = 2.2 + 0.6 * (phase + 1.0).sin();
            let amount = 0.1 + Gamma::new(4.0, scale).unwrap().sample(&mut rng);
            (amount * 100.0).round() / 100.0
        } else {
            0.0
        };
        values.push(value);
    }
    DailySeries::new(start, values, "synthetic_1949_2010").unwrap()
}

fn threshold() -> DailySeries {
    let start = NaiveDate::from_ymd_opt(2001, 1, 1).unwrap();
    let values = (0..365u32).map(|i| ((i * 137) % 365) as f64 / 10.0).collect();
    DailySeries::new(start, values, "threshold_2001").unwrap()
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir).unwrap();
    write_daily_csv(&dir.join("synthetic_1949_2010.csv"), &synthetic()).unwrap();
    write_daily_csv(&dir.join("threshold_2001.csv"), &threshold()).unwrap();
    println!("wrote fixtures to {}", dir.display());
}
