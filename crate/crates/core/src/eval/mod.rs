//! Daylight-masked RMSE, improvement rates, aggregates and spread diagnostics.

mod render;

use std::collections::BTreeMap;

use chrono::NaiveDate;

use crate::dataset::{daylight_mask, HourlyDataset, SiteConfig, YearMonth};
use crate::ensemble::ForecastMatrix;
use crate::error::{Error, Result};

pub use render::{render_table, round_half_away, write_report_csvs, REPORT_FILES};

/// Root mean squared error over the masked-in entries.
pub fn rmse(pred: &[f64], actual: &[f64], mask: &[bool]) -> Result<f64> {
    if pred.len() != actual.len() || pred.len() != mask.len() {
        return Err(Error::Domain(format!(
            "series lengths differ: pred {}, actual {}, mask {}",
            pred.len(),
            actual.len(),
            mask.len()
        )));
    }
    let mut acc = SquaredError::default();
    for i in (0..pred.len()).filter(|&i| mask[i]) {
        acc.push(pred[i] - actual[i]);
    }
    acc.rmse()
}

/// Running sum of squared errors and count.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SquaredError {
    pub sum: f64,
    pub n: usize,
}

impl SquaredError {
    #[inline]
    pub fn push(&mut self, err: f64) {
        self.sum += err * err;
        self.n += 1;
    }

    pub fn merge(&mut self, other: SquaredError) {
        self.sum += other.sum;
        self.n += other.n;
    }

    pub fn rmse(&self) -> Result<f64> {
        if self.n == 0 {
            return Err(Error::Domain("RMSE over an empty mask is undefined".into()));
        }
        Ok((self.sum / self.n as f64).sqrt())
    }
}

fn grouped<K: Ord + Copy>(
    pred: &[f64],
    actual: &[f64],
    mask: &[bool],
    key: impl Fn(usize) -> K,
) -> Result<BTreeMap<K, SquaredError>> {
    if pred.len() != actual.len() || pred.len() != mask.len() {
        return Err(Error::Domain("series are not aligned with the dataset".into()));
    }
    let mut out: BTreeMap<K, SquaredError> = BTreeMap::new();
    for i in (0..pred.len()).filter(|&i| mask[i]) {
        out.entry(key(i)).or_default().push(pred[i] - actual[i]);
    }
    Ok(out)
}

/// Per local day sums of squared error; days without daylight are absent.
pub fn daily_squared_error(
    pred: &[f64],
    actual: &[f64],
    dataset: &HourlyDataset,
) -> Result<BTreeMap<NaiveDate, SquaredError>> {
    let mask = daylight_mask(dataset);
    let recs = dataset.records();
    grouped(pred, actual, &mask, |i| dataset.site.local_date(recs[i].timestamp))
}

pub fn daily_rmse(
    pred: &[f64],
    actual: &[f64],
    dataset: &HourlyDataset,
) -> Result<Vec<(NaiveDate, f64)>> {
    daily_squared_error(pred, actual, dataset)?
        .into_iter()
        .map(|(d, se)| Ok((d, se.rmse()?)))
        .collect()
}

pub fn monthly_rmse(
    pred: &[f64],
    actual: &[f64],
    dataset: &HourlyDataset,
) -> Result<Vec<(YearMonth, f64)>> {
    let mask = daylight_mask(dataset);
    let recs = dataset.records();
    grouped(pred, actual, &mask, |i| dataset.site.local_month(recs[i].timestamp))?
        .into_iter()
        .map(|(m, se)| Ok((m, se.rmse()?)))
        .collect()
}

/// Percentage RMSE reduction of the ensemble relative to another method.
pub fn improvement_rate(other: f64, ensemble: f64) -> Result<f64> {
    if !(other > 0.0) {
        return Err(Error::Domain(format!(
            "improvement rate needs a positive baseline RMSE, got {other}"
        )));
    }
    Ok((other - ensemble) / other * 100.0)
}

/// Month x method RMSE table.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyTable {
    pub months: Vec<String>,
    pub methods: Vec<String>,
    /// `rmse[month][method]`.
    pub rmse: Vec<Vec<f64>>,
}

impl MonthlyTable {
    pub fn method_index(&self, name: &str) -> Result<usize> {
        self.methods
            .iter()
            .position(|m| m == name)
            .ok_or_else(|| Error::Domain(format!("no method named {name:?}")))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rmse.iter().map(|row| row[j]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineAggregate {
    pub baseline: String,
    /// Improvement rate per month.
    pub monthly: Vec<f64>,
    /// Mean of the monthly improvement rates (the headline figure).
    pub mean_of_rates: f64,
    /// Improvement rate applied to the aggregated mean RMSEs.
    pub rate_of_means: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    /// Arithmetic mean of the monthly RMSEs, per method.
    pub mean_rmse: Vec<f64>,
    pub baselines: Vec<BaselineAggregate>,
}

pub fn aggregate_report(
    table: &MonthlyTable,
    ensemble: &str,
    baselines: &[&str],
) -> Result<Aggregates> {
    if table.rmse.is_empty() {
        return Err(Error::Domain("no monthly rows to aggregate".into()));
    }
    let n = table.rmse.len() as f64;
    let mean_rmse: Vec<f64> = (0..table.methods.len())
        .map(|j| table.column(j).iter().sum::<f64>() / n)
        .collect();
    let e = table.method_index(ensemble)?;
    let baselines = baselines
        .iter()
        .map(|&name| {
            let b = table.method_index(name)?;
            let monthly = table
                .rmse
                .iter()
                .map(|row| improvement_rate(row[b], row[e]))
                .collect::<Result<Vec<_>>>()?;
            Ok(BaselineAggregate {
                baseline: name.to_string(),
                mean_of_rates: monthly.iter().sum::<f64>() / n,
                rate_of_means: improvement_rate(mean_rmse[b], mean_rmse[e])?,
                monthly,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Aggregates {
        mean_rmse,
        baselines,
    })
}

/// Cross-model disagreement over one month of daylight hours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadStats {
    /// Hourly population std across models, averaged over hours.
    pub mean_std: f64,
    /// Mean Pearson correlation over usable model pairs.
    pub mean_corr: f64,
    pub pairs_used: usize,
    /// Pairs skipped because one series is constant.
    pub pairs_skipped: usize,
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Spread diagnostics of one block of masked-in forecast rows.
pub fn spread_of_rows(forecasts: &ForecastMatrix, rows: &[usize]) -> Result<SpreadStats> {
    let k = forecasts.n_models();
    if k < 2 || rows.len() < 2 {
        return Err(Error::Diagnostic(format!(
            "spread needs >= 2 models and >= 2 hours, got {k} models, {} hours",
            rows.len()
        )));
    }
    let mut std_sum = 0.0;
    for &i in rows {
        let r = forecasts.row(i);
        let mean = r.iter().sum::<f64>() / k as f64;
        let var = r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k as f64;
        std_sum += var.sqrt();
    }
    let series: Vec<Vec<f64>> = (0..k)
        .map(|m| rows.iter().map(|&i| forecasts.get(i, m)).collect())
        .collect();
    let (mut corr_sum, mut used, mut skipped) = (0.0, 0usize, 0usize);
    for a in 0..k {
        for b in (a + 1)..k {
            match pearson(&series[a], &series[b]) {
                Some(c) => {
                    corr_sum += c;
                    used += 1;
                }
                None => skipped += 1,
            }
        }
    }
    if used == 0 {
        return Err(Error::Diagnostic(format!(
            "no usable model pairs ({skipped} constant pairs)"
        )));
    }
    Ok(SpreadStats {
        mean_std: std_sum / rows.len() as f64,
        mean_corr: corr_sum / used as f64,
        pairs_used: used,
        pairs_skipped: skipped,
    })
}

/// Per local month spread of the base-model forecasts over masked-in hours.
pub fn model_spread_stats(
    forecasts: &ForecastMatrix,
    mask: &[bool],
    site: &SiteConfig,
) -> Result<Vec<(YearMonth, SpreadStats)>> {
    if mask.len() != forecasts.n_rows() {
        return Err(Error::Domain("mask is not aligned with the forecasts".into()));
    }
    let mut groups: BTreeMap<YearMonth, Vec<usize>> = BTreeMap::new();
    for (i, &t) in forecasts.timestamps().iter().enumerate() {
        if mask[i] {
            groups.entry(site.local_month(t)).or_default().push(i);
        }
    }
    groups
        .into_iter()
        .map(|(m, rows)| Ok((m, spread_of_rows(forecasts, &rows)?)))
        .collect()
}

/// All RMSE series of one evaluated month.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthResult {
    pub month: YearMonth,
    /// 1-based variant id chosen on the training window.
    pub best_model_id: usize,
    /// Monthly RMSE per method, aligned to [`EvaluationReport::methods`].
    pub rmse: Vec<f64>,
    /// Daily RMSE per method.
    pub daily: Vec<(NaiveDate, Vec<f64>)>,
    pub improvement_over_best: f64,
    pub improvement_over_average: f64,
    pub spread: SpreadStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub methods: Vec<String>,
    pub months: Vec<MonthResult>,
    pub aggregates: Aggregates,
}

pub const ENSEMBLE: &str = "ensemble";
pub const SIMPLE_AVERAGE: &str = "simple_average";
pub const BEST_MODEL: &str = "best_model";

impl EvaluationReport {
    pub fn assemble(methods: Vec<String>, months: Vec<MonthResult>) -> Result<Self> {
        let table = MonthlyTable {
            months: months.iter().map(|m| m.month.to_string()).collect(),
            methods: methods.clone(),
            rmse: months.iter().map(|m| m.rmse.clone()).collect(),
        };
        let aggregates = aggregate_report(&table, ENSEMBLE, &[BEST_MODEL, SIMPLE_AVERAGE])?;
        Ok(Self {
            methods,
            months,
            aggregates,
        })
    }

    pub fn method_index(&self, name: &str) -> Option<usize> {
        self.methods.iter().position(|m| m == name)
    }

    pub fn monthly_column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.method_index(name)?;
        Some(self.months.iter().map(|m| m.rmse[j]).collect())
    }

    pub fn mean_rmse(&self, name: &str) -> Option<f64> {
        self.method_index(name).map(|j| self.aggregates.mean_rmse[j])
    }

    pub fn baseline(&self, name: &str) -> Option<&BaselineAggregate> {
        self.aggregates.baselines.iter().find(|b| b.baseline == name)
    }
}
