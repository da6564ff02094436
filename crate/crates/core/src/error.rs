use alloc::string::String;

use crate::calendar::Month;
use crate::series::OccurrenceState;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("series must contain at least one day")]
    EmptySeries,

    #[error("non-finite or negative precipitation at index {index}: {value}")]
    InvalidValue { index: usize, value: f64 },

    #[error("invalid extreme definition: wet threshold {wet} must satisfy 0 <= wet < extreme ({extreme})")]
    InvalidDefinition { wet: f64, extreme: f64 },

    #[error("{name} must lie in {range}, got {value}")]
    OutOfRange {
        name: &'static str,
        range: &'static str,
        value: f64,
    },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("no complete years")]
    NoCompleteYears,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("month {month} absent from record")]
    MonthAbsent { month: Month },

    #[error("insufficient exceedances: {found} above threshold, need at least 2")]
    InsufficientExceedances { found: usize },

    #[error("degenerate exceedance sample")]
    DegenerateExceedances,

    #[error("insufficient blocks: {found} complete blocks, need at least 3")]
    InsufficientBlocks { found: usize },

    #[error("degenerate block maxima")]
    DegenerateBlockMaxima,

    #[error("extreme threshold {threshold} lies below the fitted threshold {fit_threshold}")]
    ThresholdBelowFit { threshold: f64, fit_threshold: f64 },

    #[error("occurrence model has no fit for month {month}")]
    UnfitMonth { month: Month },

    #[error("no historical analogue for {state:?} days in month {month}")]
    NoHistoricalAnalogue { month: Month, state: OccurrenceState },

    #[error("impossible scenario class: {0}")]
    ImpossibleClass(String),

    #[error("calibration conflicts with extreme conditioning")]
    CalibrationConflict,

    #[error("calibration needs positive means (target {target}, ensemble {ensemble})")]
    NonPositiveMean { target: f64, ensemble: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),
}
