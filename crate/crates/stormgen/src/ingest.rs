//! Daily precipitation CSV input and output.
//!
//! The expected layout is a header row `date,precip_mm` followed by one row
//! per consecutive day. Line numbers in errors count data rows, so the first
//! row after the header is line 1.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stormgen_core::DailySeries;

use crate::error::{PipelineError, Result};

pub use stormgen_core::series::{annual_totals, AnnualTotals};

pub const DEFAULT_DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapPolicy {
    #[default]
    Reject,
    /// Missing days become 0.0 mm.
    FillZero,
    /// Missing days become 0.0 mm and are listed in [`Ingested::filled`] so
    /// callers can mask them.
    FillMissingMarker,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvOptions {
    pub date_column: String,
    pub value_column: String,
    pub date_format: String,
    pub gap_policy: GapPolicy,
    /// Station id for the series; the file stem when absent.
    pub station_id: Option<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            date_column: "date".into(),
            value_column: "precip_mm".into(),
            date_format: DEFAULT_DATE_FORMAT.into(),
            gap_policy: GapPolicy::Reject,
            station_id: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("csv: {0}")]
    Csv(String),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("malformed row at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("date gap at line {line}")]
    DateGap { line: usize },
    #[error("non-monotone date at line {line}")]
    NonMonotone { line: usize },
    #[error("negative precipitation at line {line}")]
    Negative { line: usize },
    #[error("no data rows")]
    Empty,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ingested {
    pub series: DailySeries,
    /// Dates inserted by a fill policy.
    pub filled: Vec<NaiveDate>,
}

/// Parses CSV text from any reader.
pub fn read_daily<R: Read>(reader: R, options: &CsvOptions, station_id: &str) -> std::result::Result<Ingested, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| IngestError::Csv(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let date_col = column(&options.date_column)?;
    let value_col = column(&options.value_column)?;

    let mut start = None;
    let mut prev: Option<NaiveDate> = None;
    let mut values = Vec::new();
    let mut filled = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| IngestError::Malformed {
            line,
            message: e.to_string(),
        })?;
        let field = |col: usize, what: &str| {
            record.get(col).ok_or_else(|| IngestError::Malformed {
                line,
                message: format!("missing {what}"),
            })
        };
        let date_text = field(date_col, "date")?;
        let date = NaiveDate::parse_from_str(date_text, &options.date_format).map_err(|e| IngestError::Malformed {
            line,
            message: format!("date {date_text:?}: {e}"),
        })?;
        let value_text = field(value_col, "value")?;
        let value: f64 = value_text
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| IngestError::Malformed {
                line,
                message: format!("value {value_text:?} is not a finite number"),
            })?;
        if value < 0.0 {
            return Err(IngestError::Negative { line });
        }
        if let Some(p) = prev {
            if date <= p {
                return Err(IngestError::NonMonotone { line });
            }
            let mut expected = p.succ_opt().expect("date in range");
            if expected != date {
                if options.gap_policy == GapPolicy::Reject {
                    return Err(IngestError::DateGap { line });
                }
                while expected < date {
                    filled.push(expected);
                    values.push(0.0);
                    expected = expected.succ_opt().expect("date in range");
                }
            }
        } else {
            start = Some(date);
        }
        values.push(value);
        prev = Some(date);
    }
    let start = start.ok_or(IngestError::Empty)?;
    let series = DailySeries::new(start, values, station_id).map_err(|e| IngestError::Csv(e.to_string()))?;
    Ok(Ingested { series, filled })
}

/// A loaded input file with the SHA-256 of its bytes.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedInput {
    pub ingested: Ingested,
    pub fingerprint: String,
}

pub fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load_input(path: &Path, options: &CsvOptions) -> Result<LoadedInput> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    let station = options.station_id.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "station".into())
    });
    let ingested = read_daily(bytes.as_slice(), options, &station).map_err(|source| PipelineError::Ingest {
        path: path.to_path_buf(),
        source,
    })?;
    if !ingested.filled.is_empty() {
        log::warn!("{}: filled {} missing days", path.display(), ingested.filled.len());
    }
    Ok(LoadedInput {
        ingested,
        fingerprint: fingerprint(&bytes),
    })
}

pub fn read_daily_csv(path: &Path, options: &CsvOptions) -> Result<DailySeries> {
    load_input(path, options).map(|l| l.ingested.series)
}

/// Writes `date,precip_mm` rows. Values use the shortest text that parses
/// back to the same `f64`, so a write/read cycle is lossless.
pub fn write_daily<W: Write>(writer: W, series: &DailySeries) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(writer);
    writeln!(out, "date,precip_mm")?;
    for (date, value) in series.iter() {
        writeln!(out, "{},{}", date.format(DEFAULT_DATE_FORMAT), value)?;
    }
    out.flush()
}

pub fn write_daily_csv(path: &Path, series: &DailySeries) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| PipelineError::io(path, e))?;
    write_daily(file, series).map_err(|e| PipelineError::io(path, e))
}
