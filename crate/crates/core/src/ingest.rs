//! Half-hourly tariff CSV ingestion.
//!
//! Input rows are `timestamp,import_p_per_kwh,export_p_per_kwh` at exact
//! 30-minute spacing. The planner works in hourly slots, so each hour keeps
//! its first half-hour price and drops the second.

use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDate, NaiveDateTime, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{DynamicTariff, ModelError, Timestep};
use crate::units::{Price, PriceParseError};

pub const CSV_HEADER: [&str; 3] = ["timestamp", "import_p_per_kwh", "export_p_per_kwh"];

const TIMESTAMP_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%d %H:%M",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IngestError {
    #[error("expected header {expected:?}, found {found:?}")]
    Header { expected: String, found: String },
    #[error("no data rows")]
    Empty,
    #[error("row {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("row {row}: {column} {value:?} has more than 3 decimal places")]
    Precision {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("row {row}: duplicate timestamp {timestamp}")]
    Duplicate {
        row: usize,
        timestamp: NaiveDateTime,
    },
    #[error("row {row}: timestamp {timestamp} is earlier than the previous row")]
    OutOfOrder {
        row: usize,
        timestamp: NaiveDateTime,
    },
    #[error("row {row}: gap in series, expected {expected} but found {found}")]
    Gap {
        row: usize,
        expected: NaiveDateTime,
        found: NaiveDateTime,
    },
    #[error("series must start on the hour, first row is {0}")]
    Misaligned(NaiveDateTime),
    #[error("series has {0} rows; an even count is needed to form whole hours")]
    OddLength(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfHourRow {
    pub timestamp: NaiveDateTime,
    pub import: Price,
    pub export: Price,
}

/// Rows at strictly increasing, gap-free 30-minute spacing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HalfHourSeries {
    rows: Vec<HalfHourRow>,
}

impl HalfHourSeries {
    pub fn new(rows: Vec<HalfHourRow>) -> Result<Self, IngestError> {
        if rows.is_empty() {
            return Err(IngestError::Empty);
        }
        for (i, pair) in rows.windows(2).enumerate() {
            check_spacing(i + 2, pair[0].timestamp, pair[1].timestamp)?;
        }
        Ok(HalfHourSeries { rows })
    }

    pub fn rows(&self) -> &[HalfHourRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn start(&self) -> NaiveDateTime {
        self.rows[0].timestamp
    }

    pub fn to_csv(&self) -> String {
        let mut out = CSV_HEADER.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                r.timestamp.format("%Y-%m-%dT%H:%M"),
                decimal(r.import),
                decimal(r.export)
            ));
        }
        out
    }
}

fn decimal(p: Price) -> String {
    let s = p.to_string();
    s.trim_end_matches(" p/kWh").to_owned()
}

fn check_spacing(row: usize, prev: NaiveDateTime, ts: NaiveDateTime) -> Result<(), IngestError> {
    let expected = prev + Duration::minutes(30);
    if ts == prev {
        Err(IngestError::Duplicate { row, timestamp: ts })
    } else if ts < prev {
        Err(IngestError::OutOfOrder { row, timestamp: ts })
    } else if ts != expected {
        Err(IngestError::Gap {
            row,
            expected,
            found: ts,
        })
    } else {
        Ok(())
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

fn parse_price(row: usize, column: &'static str, value: &str) -> Result<Price, IngestError> {
    Price::parse_pence_per_kwh(value).map_err(|e| match e {
        PriceParseError::TooPrecise(_) => IngestError::Precision {
            row,
            column,
            value: value.to_owned(),
        },
        PriceParseError::Malformed(_) => IngestError::Malformed {
            row,
            message: format!("{column} {value:?} is not a decimal number"),
        },
    })
}

/// Parses and validates a tariff CSV. Row numbers in errors count data rows from 1.
pub fn parse_tariff_csv(bytes: &[u8]) -> Result<HalfHourSeries, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| IngestError::Malformed {
            row: 0,
            message: e.to_string(),
        })?
        .clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(IngestError::Header {
            expected: CSV_HEADER.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut rows: Vec<HalfHourRow> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| IngestError::Malformed {
            row,
            message: e.to_string(),
        })?;
        if record.len() != 3 {
            return Err(IngestError::Malformed {
                row,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let timestamp = parse_timestamp(&record[0]).ok_or_else(|| IngestError::Malformed {
            row,
            message: format!("timestamp {:?} is not YYYY-MM-DDTHH:MM[:SS]", &record[0]),
        })?;
        let import = parse_price(row, CSV_HEADER[1], &record[1])?;
        let export = parse_price(row, CSV_HEADER[2], &record[2])?;
        if let Some(prev) = rows.last() {
            check_spacing(row, prev.timestamp, timestamp)?;
        }
        rows.push(HalfHourRow {
            timestamp,
            import,
            export,
        });
    }
    if rows.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(HalfHourSeries { rows })
}

/// Hourly tariff from the first half hour of each hour.
pub fn downsample_to_hourly(series: &HalfHourSeries) -> Result<DynamicTariff, IngestError> {
    let start = series.start();
    if start.minute() != 0 || start.second() != 0 {
        return Err(IngestError::Misaligned(start));
    }
    if series.len() % 2 != 0 {
        return Err(IngestError::OddLength(series.len()));
    }
    let kept = series.rows.iter().step_by(2);
    let (import, export) = kept.map(|r| (r.import, r.export)).unzip();
    Ok(DynamicTariff::new(import, export)?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TariffProfile {
    #[default]
    None,
    Agile,
}

impl FromStr for TariffProfile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(TariffProfile::None),
            "agile" => Ok(TariffProfile::Agile),
            other => Err(format!(
                "unknown tariff profile {other:?} (expected none or agile)"
            )),
        }
    }
}

/// Import cap of the Agile profile.
pub const AGILE_IMPORT_CAP: Price = Price::from_pence_per_kwh(35);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TariffViolation {
    ImportAboveCap { t: Timestep, price: Price },
    NegativeExport { t: Timestep, price: Price },
}

impl fmt::Display for TariffViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TariffViolation::ImportAboveCap { t, price } => {
                write!(
                    f,
                    "timestep {t}: import price {price} exceeds {AGILE_IMPORT_CAP}"
                )
            }
            TariffViolation::NegativeExport { t, price } => {
                write!(f, "timestep {t}: export price {price} is negative")
            }
        }
    }
}

pub fn validate_tariff(tariff: &DynamicTariff, profile: TariffProfile) -> Vec<TariffViolation> {
    if profile == TariffProfile::None {
        return Vec::new();
    }
    let mut out = Vec::new();
    for t in 1..=tariff.horizon() {
        let import = tariff.import_price(t);
        if import > AGILE_IMPORT_CAP {
            out.push(TariffViolation::ImportAboveCap { t, price: import });
        }
        let export = tariff.export_price(t);
        if export < Price::from_pence_per_kwh(0) {
            out.push(TariffViolation::NegativeExport { t, price: export });
        }
    }
    out
}

/// Bounds used by [`synthetic_agile_week`], in milli-pence per kWh.
pub const SYNTHETIC_IMPORT_RANGE: (i64, i64) = (5_880, 35_000);
pub const SYNTHETIC_EXPORT_RANGE: (i64, i64) = (3_960, 17_680);

/// A synthetic Monday-to-Sunday half-hourly series shaped like an Agile week:
/// cheap nights, an early-evening peak and random noise, with prices kept
/// inside (and touching both ends of) the synthetic ranges. Not real data.
pub fn synthetic_agile_week(seed: u64) -> HalfHourSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = NaiveDate::from_ymd_opt(2019, 11, 11)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid date");
    let (imin, imax) = SYNTHETIC_IMPORT_RANGE;
    let (emin, emax) = SYNTHETIC_EXPORT_RANGE;
    let mut rows: Vec<HalfHourRow> = (0..336)
        .map(|k| {
            let hour = (k % 48) as f64 / 2.0;
            let base = 12.0
                + 4.0
                    * ((hour - 9.0) / 24.0 * std::f64::consts::TAU)
                        .sin()
                        .max(-0.5);
            let peak = if (16.0..19.0).contains(&hour) {
                12.0
            } else {
                0.0
            };
            let noise: f64 = rng.gen_range(-2.0..2.0);
            let import = (((base + peak + noise) * 100.0).round() as i64 * 10).clamp(imin, imax);
            let export = ((import as f64 * 0.45) as i64 / 10 * 10 + rng.gen_range(0..100) * 10)
                .clamp(emin, emax);
            HalfHourRow {
                timestamp: start + Duration::minutes(30 * k as i64),
                import: Price::from_milli_pence_per_kwh(import),
                export: Price::from_milli_pence_per_kwh(export),
            }
        })
        .collect();
    // pin both extremes onto on-the-hour rows so the hourly tariff keeps them
    rows[2 * (2 * 24 + 17)].import = Price::from_milli_pence_per_kwh(imax);
    rows[2 * (6 * 24 + 4)].import = Price::from_milli_pence_per_kwh(imin);
    rows[2 * (2 * 24 + 17)].export = Price::from_milli_pence_per_kwh(emax);
    rows[2 * (6 * 24 + 4)].export = Price::from_milli_pence_per_kwh(emin);
    HalfHourSeries { rows }
}
