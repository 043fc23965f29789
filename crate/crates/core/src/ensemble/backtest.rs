//! Monthly rolling evaluation with out-of-sample base forecasts.
//!
//! For every month X after the first data month, the base models are trained
//! on all history before X and forecast X. The combiner for an evaluated
//! month M is trained on those out-of-sample forecasts for the months before
//! M, so neither layer ever sees its own forecast period.

use chrono::{DateTime, NaiveDate, Utc};
use rayon::prelude::*;

use super::{
    combine, run_base_models, select_best_model, simple_average, train_combiner, CombinerConfig,
    ForecastMatrix, DEFAULT_LAGS,
};
use crate::dataset::{daylight_mask, HourlyDataset, TimeWindow, YearMonth};
use crate::error::{Error, Result};
use crate::eval::{
    daily_squared_error, improvement_rate, rmse, spread_of_rows, EvaluationReport, MonthResult,
    BEST_MODEL, ENSEMBLE, SIMPLE_AVERAGE,
};
use crate::forest::{feature_importance, RfParams};
use crate::svr::{train_variants, TrainOptions, VariantSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestConfig {
    pub rf: RfParams,
    pub lag_hours: Vec<u32>,
    pub train: TrainOptions,
    /// Seed of the base-model row subsampling.
    pub seed: u64,
}

impl BacktestConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            rf: RfParams::new(seed),
            lag_hours: DEFAULT_LAGS.to_vec(),
            train: TrainOptions::default(),
            seed,
        }
    }
}

/// Hourly series and combiner diagnostics of one evaluated month.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthRun {
    pub month: YearMonth,
    pub best_model_id: usize,
    pub timestamps: Vec<DateTime<Utc>>,
    pub actual: Vec<f64>,
    pub ensemble: Vec<f64>,
    pub simple_average: Vec<f64>,
    pub best_model: Vec<f64>,
    pub base: ForecastMatrix,
    pub feature_names: Vec<String>,
    pub importance: Vec<f64>,
    pub oob_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestRun {
    pub report: EvaluationReport,
    pub months: Vec<MonthRun>,
}

fn month_seed(seed: u64, m: YearMonth) -> u64 {
    let k = m.year as i64 * 12 + m.month as i64;
    seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn actuals(ds: &HourlyDataset) -> Result<Vec<f64>> {
    ds.records()
        .iter()
        .zip(ds.normalized_power())
        .map(|(r, p)| {
            p.ok_or_else(|| {
                Error::Config(format!("measured power missing at {}", r.timestamp))
            })
        })
        .collect()
}

/// Runs the backtest and returns only the evaluation report.
pub fn rolling_backtest(
    dataset: &HourlyDataset,
    specs: &[VariantSpec],
    config: &BacktestConfig,
    months: &[YearMonth],
) -> Result<EvaluationReport> {
    Ok(run_backtest(dataset, specs, config, months)?.report)
}

pub fn run_backtest(
    dataset: &HourlyDataset,
    specs: &[VariantSpec],
    config: &BacktestConfig,
    months: &[YearMonth],
) -> Result<BacktestRun> {
    if specs.is_empty() {
        return Err(Error::Config("no base-model variants".into()));
    }
    if months.is_empty() {
        return Err(Error::Config("no months to evaluate".into()));
    }
    let mut months = months.to_vec();
    months.sort();
    months.dedup();
    let site = &dataset.site;
    let available = dataset.months();
    let first = *available
        .first()
        .ok_or_else(|| Error::Config("empty dataset".into()))?;
    for &m in &months {
        if m < first.succ().succ() {
            return Err(Error::Config(format!(
                "month {m}: insufficient history (needs two earlier data months)"
            )));
        }
        if !available.contains(&m) {
            return Err(Error::Config(format!("month {m}: not present in the dataset")));
        }
    }
    let last = *months.last().unwrap();
    let data_start = dataset.records()[0].timestamp;

    // Out-of-sample base forecasts for every month after the first.
    let oos_months = first.succ().range_inclusive(last);
    let blocks: Vec<ForecastMatrix> = oos_months
        .par_iter()
        .map(|&x| {
            let w = TimeWindow::month(site, x);
            let history = dataset.slice(data_start, w.start);
            let models =
                train_variants(&history, specs, month_seed(config.seed, x), &config.train)?;
            run_base_models(&dataset.slice(w.start, w.end), &models)
        })
        .collect::<Result<_>>()?;
    let mut blocks = blocks.into_iter();
    let mut oos = blocks.next().unwrap();
    for b in blocks {
        oos = oos.concat(b)?;
    }
    let oos_start = TimeWindow::month(site, first.succ()).start;

    let mut methods: Vec<String> = oos.model_ids().to_vec();
    let k = methods.len();
    methods.extend([SIMPLE_AVERAGE, BEST_MODEL, ENSEMBLE].map(String::from));

    let runs: Vec<(MonthResult, MonthRun)> = months
        .par_iter()
        .map(|&m| {
            let fw = TimeWindow::month(site, m);
            let tw = TimeWindow::new(oos_start, fw.start)?;
            let cfg = CombinerConfig {
                rf: RfParams {
                    seed: month_seed(config.rf.seed, m),
                    ..config.rf
                },
                lag_hours: config.lag_hours.clone(),
                train_window: tw,
                forecast_window: fw,
            };

            // Best single model on the out-of-sample history.
            let hist_ds = dataset.slice(tw.start, tw.end);
            let hist_fc = oos.slice(tw.start, tw.end);
            let hist_act = actuals(&hist_ds)?;
            let hist_mask = daylight_mask(&hist_ds);
            let per_model = (0..k)
                .map(|j| rmse(&hist_fc.column(j), &hist_act, &hist_mask))
                .collect::<Result<Vec<_>>>()?;
            let best_id = select_best_model(&per_model).unwrap();

            let forest = train_combiner(dataset, &oos, &cfg)
                .map_err(|e| Error::Config(format!("month {m}: {e}")))?;
            let ens: Vec<f64> = combine(&forest, dataset, &oos, &cfg)?
                .into_iter()
                .map(|(_, v)| v)
                .collect();

            let month_ds = dataset.slice(fw.start, fw.end);
            let base = oos.slice(fw.start, fw.end);
            if base.n_rows() != month_ds.len() {
                return Err(Error::Integrity(format!("month {m}: forecast rows misaligned")));
            }
            let actual = actuals(&month_ds)?;
            let avg = simple_average(&base);
            let best = base.column(best_id - 1);
            let mask = daylight_mask(&month_ds);

            let mut series: Vec<Vec<f64>> = (0..k).map(|j| base.column(j)).collect();
            series.extend([avg.clone(), best.clone(), ens.clone()]);
            let monthly = series
                .iter()
                .map(|s| rmse(s, &actual, &mask))
                .collect::<Result<Vec<_>>>()?;
            let daily_by_method = series
                .iter()
                .map(|s| daily_squared_error(s, &actual, &month_ds))
                .collect::<Result<Vec<_>>>()?;
            let days: Vec<NaiveDate> = daily_by_method[0].keys().copied().collect();
            let daily = days
                .iter()
                .map(|d| {
                    let v = daily_by_method
                        .iter()
                        .map(|dm| dm[d].rmse())
                        .collect::<Result<Vec<_>>>()?;
                    Ok((*d, v))
                })
                .collect::<Result<Vec<_>>>()?;
            let day_rows: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
            let spread = spread_of_rows(&base, &day_rows)?;
            let e = monthly[k + 2];
            let result = MonthResult {
                month: m,
                best_model_id: best_id,
                improvement_over_best: improvement_rate(monthly[k + 1], e)?,
                improvement_over_average: improvement_rate(monthly[k], e)?,
                rmse: monthly,
                daily,
                spread,
            };
            let run = MonthRun {
                month: m,
                best_model_id: best_id,
                timestamps: month_ds.timestamps(),
                actual,
                ensemble: ens,
                simple_average: avg,
                best_model: best,
                base,
                importance: feature_importance(&forest),
                feature_names: forest.feature_names.clone(),
                oob_rmse: forest.oob_rmse,
            };
            Ok((result, run))
        })
        .collect::<Result<_>>()?;

    let (results, runs): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    Ok(BacktestRun {
        report: EvaluationReport::assemble(methods, results)?,
        months: runs,
    })
}
