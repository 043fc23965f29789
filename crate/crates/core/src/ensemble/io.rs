//! CSV forms of forecast matrices and per-month series.

use std::io::{Read, Write};

use super::{ForecastMatrix, MonthRun};
use crate::dataset::{format_timestamp, parse_timestamp};
use crate::error::{Error, Result};

fn csv_format(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        kind: "forecast csv",
        line,
        message: message.into(),
    }
}

/// Wide layout: `timestamp,<model ids...>`.
pub fn write_forecasts_csv(forecasts: &ForecastMatrix, out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["timestamp".to_string()];
    header.extend(forecasts.model_ids().iter().cloned());
    w.write_record(&header)?;
    for (i, &t) in forecasts.timestamps().iter().enumerate() {
        let mut row = vec![format_timestamp(t)];
        row.extend(forecasts.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn read_forecasts_csv(input: impl Read) -> Result<ForecastMatrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers().map_err(|e| csv_format(1, e.to_string()))?.clone();
    if header.get(0) != Some("timestamp") || header.len() < 2 {
        return Err(csv_format(1, "expected timestamp followed by model columns"));
    }
    let ids: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut ts = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_format(line, e.to_string()))?;
        ts.push(parse_timestamp(&rec[0]).map_err(|e| csv_format(line, e))?);
        for cell in rec.iter().skip(1) {
            values.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|e| csv_format(line, format!("{cell:?}: {e}")))?,
            );
        }
    }
    ForecastMatrix::new(ts, ids, values)
}

/// Hourly series of the evaluated months:
/// `timestamp,actual,ensemble,simple_average,best_model,best_model_id`.
pub fn write_month_series_csv(runs: &[MonthRun], out: impl Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "timestamp",
        "actual",
        "ensemble",
        "simple_average",
        "best_model",
        "best_model_id",
    ])?;
    for run in runs {
        for i in 0..run.timestamps.len() {
            w.write_record([
                format_timestamp(run.timestamps[i]),
                run.actual[i].to_string(),
                run.ensemble[i].to_string(),
                run.simple_average[i].to_string(),
                run.best_model[i].to_string(),
                run.best_model_id.to_string(),
            ])?;
        }
    }
    w.flush()
}
