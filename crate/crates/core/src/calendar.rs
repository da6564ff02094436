//! Proleptic Gregorian calendar helpers.

use core::fmt;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Year used to lay out a month-of-year target that carries no year.
/// Non-leap, so February has 28 days.
pub const REFERENCE_YEAR: i32 = 2001;

/// Month of the year, 1 = January through 12 = December.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Month(u8);

impl Month {
    pub const JANUARY: Month = Month(1);

    pub fn new(number: u32) -> Option<Month> {
        (1..=12).contains(&number).then_some(Month(number as u8))
    }

    /// Month from a zero-based index (0 = January).
    pub fn from_index(index: usize) -> Option<Month> {
        (index < 12).then(|| Month(index as u8 + 1))
    }

    pub fn of(date: NaiveDate) -> Month {
        Month(date.month() as u8)
    }

    pub fn number(self) -> u32 {
        u32::from(self.0)
    }

    pub fn index(self) -> usize {
        usize::from(self.0 - 1)
    }

    pub fn all() -> impl Iterator<Item = Month> {
        (1..=12u8).map(Month)
    }
}

impl TryFrom<u8> for Month {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        Month::new(u32::from(value)).ok_or(Error::OutOfRange {
            name: "month",
            range: "1..=12",
            value: f64::from(value),
        })
    }
}

impl From<Month> for u8 {
    fn from(m: Month) -> u8 {
        m.0
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}", self.0)
    }
}

pub fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

pub fn days_in_month(year: i32, month: Month) -> usize {
    match month.number() {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        _ if is_leap_year(year) => 29,
        _ => 28,
    }
}

pub fn days_in_year(year: i32) -> usize {
    if is_leap_year(year) {
        366
    } else {
        365
    }
}

/// Calendar period a forecast, probability or ensemble refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Period {
    Year { year: i32 },
    YearMonth { year: i32, month: Month },
    MonthOfYear { month: Month },
}

impl Period {
    /// First day and length in days. Month-of-year periods are laid out in
    /// [`REFERENCE_YEAR`].
    pub fn span(&self) -> (NaiveDate, usize) {
        match *self {
            Period::Year { year } => (first_of(year, 1), days_in_year(year)),
            Period::YearMonth { year, month } => {
                (first_of(year, month.number()), days_in_month(year, month))
            }
            Period::MonthOfYear { month } => (
                first_of(REFERENCE_YEAR, month.number()),
                days_in_month(REFERENCE_YEAR, month),
            ),
        }
    }

    pub fn month(&self) -> Option<Month> {
        match *self {
            Period::Year { .. } => None,
            Period::YearMonth { month, .. } | Period::MonthOfYear { month } => Some(month),
        }
    }

    pub fn year(&self) -> Option<i32> {
        match *self {
            Period::Year { year } | Period::YearMonth { year, .. } => Some(year),
            Period::MonthOfYear { .. } => None,
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Year { year } => write!(f, "{year:04}"),
            Period::YearMonth { year, month } => write!(f, "{year:04}-{month}"),
            Period::MonthOfYear { month } => write!(f, "--{month}"),
        }
    }
}

/// Parses `YYYY`, `YYYY-MM` or `--MM`.
impl core::str::FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidModel(alloc::format!("unrecognised period {s:?}; expected YYYY, YYYY-MM or --MM"));
        let month = |m: &str| {
            m.parse::<u32>()
                .ok()
                .filter(|_| m.len() == 2)
                .and_then(Month::new)
                .ok_or_else(bad)
        };
        if let Some(m) = s.strip_prefix("--") {
            return Ok(Period::MonthOfYear { month: month(m)? });
        }
        let (y, m) = match s.split_once('-') {
            Some((y, m)) => (y, Some(m)),
            None => (s, None),
        };
        if y.len() != 4 || !y.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        Ok(match m {
            Some(m) => Period::YearMonth { year, month: month(m)? },
            None => Period::Year { year },
        })
    }
}

fn first_of(year: i32, month: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, month, 1).expect("first day of a valid month")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_text_round_trip() {
        for text in ["2001", "1952-02", "--01", "--12"] {
            let p: Period = text.parse().unwrap();
            assert_eq!(alloc::format!("{p}"), text);
        }
        for bad in ["", "01", "2001-13", "--1", "--00", "2001-1", "abcd"] {
            assert!(bad.parse::<Period>().is_err(), "{bad}");
        }
    }

    #[test]
    fn leap_rules() {
        assert!(is_leap_year(1952));
        assert!(is_leap_year(2000));
        assert!(!is_leap_year(1900));
        assert!(!is_leap_year(1950));
        assert_eq!(days_in_month(1952, Month::new(2).unwrap()), 29);
        assert_eq!(days_in_month(1950, Month::new(2).unwrap()), 28);
    }

    #[test]
    fn month_bounds() {
        assert!(Month::new(0).is_none());
        assert!(Month::new(13).is_none());
        assert_eq!(Month::from_index(11).unwrap().number(), 12);
        assert!(Month::try_from(13u8).is_err());
    }

    #[test]
    fn period_spans() {
        let (d, n) = Period::Year { year: 1952 }.span();
        assert_eq!((d, n), (NaiveDate::from_ymd_opt(1952, 1, 1).unwrap(), 366));
        let feb = Month::new(2).unwrap();
        assert_eq!(Period::MonthOfYear { month: feb }.span().1, 28);
        assert_eq!(Period::YearMonth { year: 2000, month: feb }.span().1, 29);
    }
}
