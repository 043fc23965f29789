use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, Timelike, Utc};

use super::{check_power, HourlyDataset, HourlyRecord, SiteConfig, WEATHER_DIM};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "timestamp,var1,var2,var3,var4,var5,var6,var7,var8,var9,var10,var11,var12,var13,var14,power_w";

const TS_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

pub(crate) fn format_timestamp(ts: DateTime<Utc>) -> String {
    ts.format(TS_FORMAT).to_string()
}

pub(crate) fn parse_timestamp(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    let naive = NaiveDateTime::parse_from_str(s.trim(), TS_FORMAT)
        .map_err(|e| format!("bad timestamp {s:?}: {e}"))?;
    if naive.minute() != 0 || naive.second() != 0 {
        return Err(format!("timestamp {s:?} is not on the hour"));
    }
    Ok(naive.and_utc())
}

fn check_header(header: &csv::StringRecord) -> Result<()> {
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    for (i, want) in expected.iter().enumerate() {
        match header.get(i).map(str::trim) {
            Some(got) if got == *want => {}
            Some(got) => {
                return Err(Error::Schema(format!(
                    "column {} is {got:?}, expected {want:?}",
                    i + 1
                )))
            }
            None => return Err(Error::Schema(format!("missing column {want:?}"))),
        }
    }
    if let Some(extra) = header.get(expected.len()) {
        return Err(Error::Schema(format!("unknown column {extra:?}")));
    }
    Ok(())
}

/// Reads hourly records from any reader; rows are sorted by timestamp.
pub fn read_hourly_csv(reader: impl Read, site: SiteConfig) -> Result<HourlyDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .clone();
    check_header(&header)?;

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        // Header is line 1.
        let line = i + 2;
        let row = row.map_err(|e| Error::Parse {
            row: line,
            message: e.to_string(),
        })?;
        if row.len() != WEATHER_DIM + 2 {
            return Err(Error::Parse {
                row: line,
                message: format!("expected {} fields, found {}", WEATHER_DIM + 2, row.len()),
            });
        }
        let timestamp = parse_timestamp(&row[0]).map_err(|message| Error::Parse { row: line, message })?;
        let mut weather = [0.0; WEATHER_DIM];
        for (k, w) in weather.iter_mut().enumerate() {
            let cell = row[k + 1].trim();
            *w = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse {
                    row: line,
                    message: format!("var{} is not a number: {cell:?}", k + 1),
                })?;
        }
        let cell = row[WEATHER_DIM + 1].trim();
        let power_w = if cell.is_empty() {
            None
        } else {
            let p: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                message: format!("power_w is not a number: {cell:?}"),
            })?;
            check_power(p, &site).map_err(|m| Error::Integrity(format!("row {line}: {m}")))?;
            Some(p)
        };
        records.push(HourlyRecord {
            timestamp,
            weather,
            power_w,
        });
    }

    records.sort_by_key(|r| r.timestamp);
    if let Some(pair) = records.windows(2).find(|w| w[0].timestamp == w[1].timestamp) {
        return Err(Error::Integrity(format!(
            "duplicate timestamp {}",
            format_timestamp(pair[0].timestamp)
        )));
    }
    HourlyDataset::new(site, records)
}

pub fn load_hourly_csv(path: impl AsRef<Path>, site: SiteConfig) -> Result<HourlyDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_hourly_csv(std::io::BufReader::new(file), site)
}

pub fn write_hourly_csv(dataset: &HourlyDataset, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in dataset.records() {
        write!(out, "{}", format_timestamp(r.timestamp))?;
        for v in &r.weather {
            write!(out, ",{v}")?;
        }
        match r.power_w {
            Some(p) => writeln!(out, ",{p}")?,
            None => writeln!(out, ",")?,
        }
    }
    out.flush()
}
