//! Text table and CSV renderings of an [`EvaluationReport`].

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{EvaluationReport, BEST_MODEL, ENSEMBLE, SIMPLE_AVERAGE};
use crate::error::{Error, Result};

/// Files written by [`write_report_csvs`].
pub const REPORT_FILES: [&str; 5] = [
    "monthly_rmse.csv",
    "improvements.csv",
    "daily_rmse.csv",
    "spread.csv",
    "table.txt",
];

/// Round to `decimals` places, ties away from zero. Negative zero becomes zero.
pub fn round_half_away(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    let r = (x * f).round() / f;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn rmse4(x: f64) -> String {
    format!("{:.4}", round_half_away(x, 4))
}

fn pct(x: f64) -> String {
    format!("{}%", round_half_away(x, 0))
}

/// Month-by-month table: best model, simple average, ensemble and both improvements.
pub fn render_table(report: &EvaluationReport) -> Result<String> {
    let col = |name: &str| {
        report
            .method_index(name)
            .ok_or_else(|| Error::Domain(format!("report has no {name} column")))
    };
    let (b, a, e) = (col(BEST_MODEL)?, col(SIMPLE_AVERAGE)?, col(ENSEMBLE)?);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10} {:>10} {:>10} {:>10} {:>14} {:>14}",
        "month", "best", "average", "ensemble", "impr_vs_best", "impr_vs_avg"
    );
    for m in &report.months {
        let _ = writeln!(
            s,
            "{:<10} {:>10} {:>10} {:>10} {:>14} {:>14}",
            m.month.name(),
            rmse4(m.rmse[b]),
            rmse4(m.rmse[a]),
            rmse4(m.rmse[e]),
            pct(m.improvement_over_best),
            pct(m.improvement_over_average)
        );
    }
    let mean = &report.aggregates.mean_rmse;
    let rate = |name: &str| report.baseline(name).map(|x| x.mean_of_rates).unwrap_or(f64::NAN);
    let _ = writeln!(
        s,
        "{:<10} {:>10} {:>10} {:>10} {:>14} {:>14}",
        "aggregated",
        rmse4(mean[b]),
        rmse4(mean[a]),
        rmse4(mean[e]),
        pct(rate(BEST_MODEL)),
        pct(rate(SIMPLE_AVERAGE))
    );
    Ok(s)
}

fn create(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

fn finish(w: csv::Writer<BufWriter<File>>, dir: &Path, name: &str) -> Result<()> {
    let path = dir.join(name);
    let inner = w
        .into_inner()
        .map_err(|e| Error::io(&path, std::io::Error::other(e.to_string())))?;
    inner
        .into_inner()
        .map_err(|e| Error::io(&path, e.into_error()))?
        .sync_all()
        .map_err(|e| Error::io(&path, e))
}

fn csv_err(dir: &Path, name: &str, e: csv::Error) -> Error {
    Error::io(dir.join(name), std::io::Error::other(e.to_string()))
}

/// Write the report CSVs and the text table into `dir`, which must exist.
///
/// All CSVs are long format. Aggregates use the pseudo-month `mean` in
/// `monthly_rmse.csv` and `mean_of_rates` / `rate_of_means` in
/// `improvements.csv`.
pub fn write_report_csvs(report: &EvaluationReport, dir: &Path) -> Result<()> {
    let methods = &report.methods;
    let write = |name: &str, header: &[&str], rows: Vec<Vec<String>>| -> Result<()> {
        let mut w = create(dir, name)?;
        w.write_record(header).map_err(|e| csv_err(dir, name, e))?;
        for row in rows {
            w.write_record(&row).map_err(|e| csv_err(dir, name, e))?;
        }
        finish(w, dir, name)
    };

    let mut rows = Vec::new();
    for m in &report.months {
        for (method, v) in methods.iter().zip(&m.rmse) {
            rows.push(vec![m.month.to_string(), method.clone(), v.to_string()]);
        }
    }
    for (method, v) in methods.iter().zip(&report.aggregates.mean_rmse) {
        rows.push(vec!["mean".into(), method.clone(), v.to_string()]);
    }
    write(REPORT_FILES[0], &["month", "method", "rmse"], rows)?;

    let mut rows = Vec::new();
    for (i, m) in report.months.iter().enumerate() {
        for b in &report.aggregates.baselines {
            rows.push(vec![m.month.to_string(), b.baseline.clone(), b.monthly[i].to_string()]);
        }
    }
    for b in &report.aggregates.baselines {
        rows.push(vec!["mean_of_rates".into(), b.baseline.clone(), b.mean_of_rates.to_string()]);
    }
    for b in &report.aggregates.baselines {
        rows.push(vec!["rate_of_means".into(), b.baseline.clone(), b.rate_of_means.to_string()]);
    }
    write(REPORT_FILES[1], &["month", "baseline", "percent"], rows)?;

    let mut rows = Vec::new();
    for m in &report.months {
        for (d, vals) in &m.daily {
            for (method, v) in methods.iter().zip(vals) {
                rows.push(vec![d.to_string(), method.clone(), v.to_string()]);
            }
        }
    }
    write(REPORT_FILES[2], &["date", "method", "rmse"], rows)?;

    let rows = report
        .months
        .iter()
        .map(|m| {
            vec![
                m.month.to_string(),
                m.spread.mean_std.to_string(),
                m.spread.mean_corr.to_string(),
            ]
        })
        .collect();
    write(REPORT_FILES[3], &["month", "mean_std", "mean_corr"], rows)?;

    let name = REPORT_FILES[4];
    let path = dir.join(name);
    let mut f = File::create(&path).map_err(|e| Error::io(&path, e))?;
    f.write_all(render_table(report)?.as_bytes())
        .map_err(|e| Error::io(&path, e))?;
    Ok(())
}
