use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, NaiveDateTime, Utc};

use super::YearMonth;
use crate::error::{Error, Result};

/// PV site metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteConfig {
    /// Signed degrees, south negative.
    pub latitude_deg: f64,
    /// Signed degrees, east positive.
    pub longitude_deg: f64,
    pub altitude_m: f64,
    pub nominal_power_w: f64,
    /// Local standard time minus UTC, in hours.
    pub utc_offset_h: f64,
}

const KEYS: [&str; 5] = [
    "latitude_deg",
    "longitude_deg",
    "altitude_m",
    "nominal_power_w",
    "utc_offset_h",
];

impl SiteConfig {
    pub fn new(
        latitude_deg: f64,
        longitude_deg: f64,
        altitude_m: f64,
        nominal_power_w: f64,
        utc_offset_h: f64,
    ) -> Result<Self> {
        let site = Self {
            latitude_deg,
            longitude_deg,
            altitude_m,
            nominal_power_w,
            utc_offset_h,
        };
        site.validate()?;
        Ok(site)
    }

    /// The 1560 W rooftop system at 35°16'30"S 149°06'49"E, 595 m, AEST.
    pub fn reference_site() -> Self {
        Self {
            latitude_deg: -(35.0 + 16.0 / 60.0 + 30.0 / 3600.0),
            longitude_deg: 149.0 + 6.0 / 60.0 + 49.0 / 3600.0,
            altitude_m: 595.0,
            nominal_power_w: 1560.0,
            utc_offset_h: 10.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude_deg) {
            return Err(Error::Domain(format!(
                "latitude {} outside [-90, 90]",
                self.latitude_deg
            )));
        }
        if !(-180.0..=180.0).contains(&self.longitude_deg) {
            return Err(Error::Domain(format!(
                "longitude {} outside [-180, 180]",
                self.longitude_deg
            )));
        }
        if !(self.nominal_power_w > 0.0 && self.nominal_power_w.is_finite()) {
            return Err(Error::Domain(format!(
                "nominal power {} must be positive",
                self.nominal_power_w
            )));
        }
        if !self.altitude_m.is_finite() || !(-14.0..=14.0).contains(&self.utc_offset_h) {
            return Err(Error::Domain("altitude or UTC offset out of range".into()));
        }
        Ok(())
    }

    /// Parses the flat `key = value` format. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values: [Option<f64>; 5] = [None; 5];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fmt_err = |message: String| Error::Format {
                kind: "site",
                line: i + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| fmt_err(format!("expected key = value, got {line:?}")))?;
            let k = k.trim();
            let slot = KEYS
                .iter()
                .position(|&name| name == k)
                .ok_or_else(|| fmt_err(format!("unknown key {k:?}")))?;
            if values[slot].is_some() {
                return Err(fmt_err(format!("duplicate key {k:?}")));
            }
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| fmt_err(format!("non-numeric value for {k}")))?;
            values[slot] = Some(v);
        }
        let mut get = |i: usize| {
            values[i].take().ok_or_else(|| Error::Format {
                kind: "site",
                line: 0,
                message: format!("missing key {}", KEYS[i]),
            })
        };
        Self::new(get(0)?, get(1)?, get(2)?, get(3)?, get(4)?)
    }

    pub fn to_text(&self) -> String {
        format!(
            "latitude_deg = {}\nlongitude_deg = {}\naltitude_m = {}\nnominal_power_w = {}\nutc_offset_h = {}\n",
            self.latitude_deg,
            self.longitude_deg,
            self.altitude_m,
            self.nominal_power_w,
            self.utc_offset_h
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn offset(&self) -> Duration {
        Duration::seconds((self.utc_offset_h * 3600.0).round() as i64)
    }

    /// Wall-clock time at the site for a UTC instant.
    pub fn local_time(&self, ts: DateTime<Utc>) -> NaiveDateTime {
        ts.naive_utc() + self.offset()
    }

    pub fn local_date(&self, ts: DateTime<Utc>) -> NaiveDate {
        self.local_time(ts).date()
    }

    pub fn local_month(&self, ts: DateTime<Utc>) -> YearMonth {
        YearMonth::of_date(self.local_date(ts))
    }

    /// UTC instant of local midnight starting `date`.
    pub fn local_midnight_utc(&self, date: NaiveDate) -> DateTime<Utc> {
        let local = date.and_hms_opt(0, 0, 0).expect("midnight");
        (local - self.offset()).and_utc()
    }
}
