//! Hourly weather/power records, normalization and feature matrices.

mod csv_io;
mod features;
mod scaler;
mod site;
mod solar;
mod synth;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, Utc};

use crate::error::{Error, Result};

pub use csv_io::{load_hourly_csv, read_hourly_csv, write_hourly_csv, CSV_HEADER};
pub(crate) use csv_io::{format_timestamp, parse_timestamp};
pub use features::{
    build_combiner_matrix, build_feature_matrix, combiner_column_name, feature_row, FeatureMatrix,
    InputSet,
};
pub use scaler::{apply_scaler, fit_scaler, invert_scaler, ColumnStats, NormScheme, ScalerParams};
pub use site::SiteConfig;
pub use solar::{daylight_mask, is_daylight, solar_elevation};
pub use synth::{synth_generate, synth_generate_from, synth_regimes, Regime, SYNTH_START};

/// Number of weather variables per record.
pub const WEATHER_DIM: usize = 14;

/// Measured power may exceed nameplate by this factor before it is rejected.
pub const POWER_HEADROOM: f64 = 1.05;

#[derive(Debug, Clone, PartialEq)]
pub struct HourlyRecord {
    /// Start of the hour, UTC.
    pub timestamp: DateTime<Utc>,
    pub weather: [f64; WEATHER_DIM],
    pub power_w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourlyDataset {
    pub site: SiteConfig,
    records: Vec<HourlyRecord>,
}

impl HourlyDataset {
    /// Builds a dataset from records already in strictly increasing time order.
    pub fn new(site: SiteConfig, records: Vec<HourlyRecord>) -> Result<Self> {
        for pair in records.windows(2) {
            if pair[1].timestamp <= pair[0].timestamp {
                return Err(Error::Integrity(format!(
                    "timestamps not strictly increasing at {}",
                    pair[1].timestamp.format("%Y-%m-%dT%H:%M:%SZ")
                )));
            }
        }
        for r in &records {
            if r.weather.iter().any(|v| !v.is_finite()) {
                return Err(Error::Integrity(format!(
                    "non-finite weather value at {}",
                    r.timestamp
                )));
            }
            if let Some(p) = r.power_w {
                check_power(p, &site).map_err(|m| {
                    Error::Integrity(format!("{m} at {}", r.timestamp))
                })?;
            }
        }
        Ok(Self { site, records })
    }

    pub fn records(&self) -> &[HourlyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn timestamps(&self) -> Vec<DateTime<Utc>> {
        self.records.iter().map(|r| r.timestamp).collect()
    }

    /// Index of the record at `ts`, if present.
    pub fn position(&self, ts: DateTime<Utc>) -> Option<usize> {
        self.records.binary_search_by(|r| r.timestamp.cmp(&ts)).ok()
    }

    /// Records whose timestamps fall in `[start, end)`.
    pub fn slice(&self, start: DateTime<Utc>, end: DateTime<Utc>) -> HourlyDataset {
        let lo = self.records.partition_point(|r| r.timestamp < start);
        let hi = self.records.partition_point(|r| r.timestamp < end);
        HourlyDataset {
            site: self.site.clone(),
            records: self.records[lo..hi.max(lo)].to_vec(),
        }
    }

    /// Measured normalized power per record, `None` where power is absent.
    pub fn normalized_power(&self) -> Vec<Option<f64>> {
        self.records
            .iter()
            .map(|r| r.power_w.map(|p| (p / self.site.nominal_power_w).clamp(0.0, 1.0)))
            .collect()
    }

    /// Distinct local calendar months covered by the records, ascending.
    pub fn months(&self) -> Vec<YearMonth> {
        let mut out: Vec<YearMonth> = Vec::new();
        for r in &self.records {
            let m = self.site.local_month(r.timestamp);
            if out.last() != Some(&m) {
                out.push(m);
            }
        }
        out
    }
}

pub(crate) fn check_power(p: f64, site: &SiteConfig) -> std::result::Result<(), String> {
    if !p.is_finite() || p < 0.0 {
        return Err(format!("power {p} W is negative or non-finite"));
    }
    let cap = site.nominal_power_w * POWER_HEADROOM;
    if p > cap {
        return Err(format!("power {p} W exceeds {cap} W"));
    }
    Ok(())
}

/// Capacity-normalized power, clipped to `[0, 1]`.
pub fn normalize_power(power_w: f64, site: &SiteConfig) -> Result<f64> {
    if power_w.is_nan() || power_w < 0.0 {
        return Err(Error::Domain(format!("negative power {power_w} W")));
    }
    Ok((power_w / site.nominal_power_w).clamp(0.0, 1.0))
}

/// A calendar month in site-local time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Domain(format!("month {month} out of range")));
        }
        Ok(Self { year, month })
    }

    pub fn of_date(d: NaiveDate) -> Self {
        Self {
            year: d.year(),
            month: d.month(),
        }
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month")
    }

    pub fn succ(self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }

    pub fn pred(self) -> Self {
        if self.month == 1 {
            Self {
                year: self.year - 1,
                month: 12,
            }
        } else {
            Self {
                year: self.year,
                month: self.month - 1,
            }
        }
    }

    pub fn days(self) -> u32 {
        (self.succ().first_day() - self.first_day()).num_days() as u32
    }

    /// Months from `self` up to and including `last`.
    pub fn range_inclusive(self, last: YearMonth) -> Vec<YearMonth> {
        let mut out = Vec::new();
        let mut m = self;
        while m <= last {
            out.push(m);
            m = m.succ();
        }
        out
    }

    /// English month name, as used in report tables.
    pub fn name(self) -> &'static str {
        const NAMES: [&str; 12] = [
            "January",
            "February",
            "March",
            "April",
            "May",
            "June",
            "July",
            "August",
            "September",
            "October",
            "November",
            "December",
        ];
        NAMES[(self.month - 1) as usize]
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("expected YYYY-MM, got {s:?}"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month)
    }
}

/// Half-open UTC time window `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimeWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl TimeWindow {
    pub fn new(start: DateTime<Utc>, end: DateTime<Utc>) -> Result<Self> {
        if end <= start {
            return Err(Error::Config(format!("empty window {start} .. {end}")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, ts: DateTime<Utc>) -> bool {
        self.start <= ts && ts < self.end
    }

    pub fn precedes(&self, other: &TimeWindow) -> bool {
        self.end <= other.start
    }

    /// Window covering one local calendar month at `site`.
    pub fn month(site: &SiteConfig, month: YearMonth) -> Self {
        Self {
            start: site.local_midnight_utc(month.first_day()),
            end: site.local_midnight_utc(month.succ().first_day()),
        }
    }
}
