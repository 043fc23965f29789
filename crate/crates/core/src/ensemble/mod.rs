//! Base-model forecasts, baselines, random-forest combination and the rolling backtest.

mod backtest;
mod io;

use chrono::{DateTime, Duration, Utc};
use rayon::prelude::*;

use crate::dataset::{
    build_combiner_matrix, feature_row, is_daylight, HourlyDataset, TimeWindow,
};
use crate::error::{Error, Result};
use crate::forest::{forest_predict, train_forest, Forest, RfParams};
use crate::svr::{svr_predict, SvrModel};

pub use backtest::{rolling_backtest, run_backtest, BacktestConfig, BacktestRun, MonthRun};
pub use io::{read_forecasts_csv, write_forecasts_csv, write_month_series_csv};

/// Hourly forecasts of K base models, row-major `[hour][model]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastMatrix {
    timestamps: Vec<DateTime<Utc>>,
    model_ids: Vec<String>,
    values: Vec<f64>,
}

impl ForecastMatrix {
    pub fn new(
        timestamps: Vec<DateTime<Utc>>,
        model_ids: Vec<String>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if model_ids.is_empty() {
            return Err(Error::Construction("forecast matrix needs at least one model".into()));
        }
        if values.len() != timestamps.len() * model_ids.len() {
            return Err(Error::Construction(format!(
                "{} values for {} hours x {} models",
                values.len(),
                timestamps.len(),
                model_ids.len()
            )));
        }
        if let Some(w) = timestamps.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Integrity(format!(
                "forecast timestamps not strictly increasing at {}",
                w[1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Construction(format!(
                "forecast value {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            timestamps,
            model_ids,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn position(&self, ts: DateTime<Utc>) -> Option<usize> {
        self.timestamps.binary_search(&ts).ok()
    }

    #[inline]
    pub fn get(&self, row: usize, model: usize) -> f64 {
        self.values[row * self.model_ids.len() + model]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.model_ids.len();
        &self.values[i * k..(i + 1) * k]
    }

    pub fn column(&self, model: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.get(i, model)).collect()
    }

    /// Rows with `start <= ts < end`.
    pub fn slice(&self, start: DateTime<Utc>, end: DateTime<Utc>) -> Self {
        let a = self.timestamps.partition_point(|&t| t < start);
        let b = self.timestamps.partition_point(|&t| t < end).max(a);
        let k = self.n_models();
        Self {
            timestamps: self.timestamps[a..b].to_vec(),
            model_ids: self.model_ids.clone(),
            values: self.values[a * k..b * k].to_vec(),
        }
    }

    /// Appends the rows of `later`, which must start after this matrix ends.
    pub fn concat(mut self, later: ForecastMatrix) -> Result<Self> {
        if later.model_ids != self.model_ids {
            return Err(Error::Schema("cannot join forecasts of different models".into()));
        }
        if let (Some(a), Some(b)) = (self.timestamps.last(), later.timestamps.first()) {
            if a >= b {
                return Err(Error::Integrity(format!(
                    "forecast blocks overlap at {b}"
                )));
            }
        }
        self.timestamps.extend(later.timestamps);
        self.values.extend(later.values);
        Ok(self)
    }
}

/// Forecasts every record of `dataset` with each model; night hours are 0.
pub fn run_base_models(dataset: &HourlyDataset, models: &[SvrModel]) -> Result<ForecastMatrix> {
    let site = &dataset.site;
    let day: Vec<bool> = dataset
        .records()
        .iter()
        .map(|r| is_daylight(site, r.timestamp))
        .collect();
    let columns: Vec<Vec<f64>> = models
        .par_iter()
        .enumerate()
        .map(|(k, model)| {
            let spec = model.variant.ok_or_else(|| {
                Error::Precondition(format!("model {} has no variant spec", k + 1))
            })?;
            dataset
                .records()
                .iter()
                .zip(&day)
                .map(|(rec, &d)| {
                    if !d {
                        return Ok(0.0);
                    }
                    svr_predict(model, &feature_row(rec, spec.input_set, site))
                })
                .collect::<Result<Vec<f64>>>()
                .map_err(|e| e.tag_variant(spec.id))
        })
        .collect::<Result<_>>()?;
    let ids = models
        .iter()
        .map(|m| m.variant.map(|v| v.model_id()).unwrap_or_default())
        .collect();
    let n = dataset.len();
    let mut values = Vec::with_capacity(n * models.len());
    for i in 0..n {
        values.extend(columns.iter().map(|c| c[i]));
    }
    ForecastMatrix::new(dataset.timestamps(), ids, values)
}

/// Per-hour arithmetic mean across models.
pub fn simple_average(forecasts: &ForecastMatrix) -> Vec<f64> {
    let k = forecasts.n_models() as f64;
    (0..forecasts.n_rows())
        .map(|i| forecasts.row(i).iter().sum::<f64>() / k)
        .collect()
}

/// 1-based index of the lowest RMSE; ties go to the lower index.
pub fn select_best_model(per_model_rmse: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &r) in per_model_rmse.iter().enumerate() {
        if best.is_none_or(|(_, b)| r < b) {
            best = Some((i, r));
        }
    }
    best.map(|(i, _)| i + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombinerConfig {
    pub rf: RfParams,
    pub lag_hours: Vec<u32>,
    pub train_window: TimeWindow,
    pub forecast_window: TimeWindow,
}

pub const DEFAULT_LAGS: [u32; 2] = [0, 24];

impl CombinerConfig {
    pub fn new(rf: RfParams, train_window: TimeWindow, forecast_window: TimeWindow) -> Self {
        Self {
            rf,
            lag_hours: DEFAULT_LAGS.to_vec(),
            train_window,
            forecast_window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.train_window.precedes(&self.forecast_window) {
            return Err(Error::Config(
                "combiner training window must end before the forecast window".into(),
            ));
        }
        if !self.lag_hours.contains(&0) {
            return Err(Error::Config("lag list must contain 0".into()));
        }
        Ok(())
    }
}

/// Fits the combining forest on daylight hours of the training window.
pub fn train_combiner(
    dataset: &HourlyDataset,
    forecasts: &ForecastMatrix,
    config: &CombinerConfig,
) -> Result<Forest> {
    config.validate()?;
    let w = config.train_window;
    let history = forecasts.slice(DateTime::<Utc>::MIN_UTC, w.end);
    let full = build_combiner_matrix(dataset, &history, &config.lag_hours)?;
    let site = &dataset.site;
    let m = full.filter_rows(|_, t| w.contains(t) && is_daylight(site, t));
    if m.n_rows() == 0 {
        return Err(Error::Config(format!(
            "no daylight combiner rows in [{}, {})",
            w.start, w.end
        )));
    }
    if m.target().is_none() {
        return Err(Error::Config(
            "measured power is missing inside the combiner training window".into(),
        ));
    }
    train_forest(&m, &config.rf)
}

/// Combined forecast for each record of the forecast window, clipped to [0, 1].
pub fn combine(
    combiner: &Forest,
    dataset: &HourlyDataset,
    forecasts: &ForecastMatrix,
    config: &CombinerConfig,
) -> Result<Vec<(DateTime<Utc>, f64)>> {
    config.validate()?;
    let w = config.forecast_window;
    let max_lag = config.lag_hours.iter().copied().max().unwrap_or(0) as i64;
    let needed = forecasts.slice(w.start - Duration::hours(max_lag), w.end);
    let m = build_combiner_matrix(dataset, &needed, &config.lag_hours)?;
    if m.columns() != combiner.feature_names.as_slice() {
        return Err(Error::Schema("combiner features differ from the forecast layout".into()));
    }
    let site = &dataset.site;
    let target = dataset.slice(w.start, w.end);
    target
        .records()
        .iter()
        .map(|rec| {
            let t = rec.timestamp;
            if !is_daylight(site, t) {
                return Ok((t, 0.0));
            }
            let i = m.timestamps().binary_search(&t).map_err(|_| Error::Alignment {
                timestamp: t,
                message: "base forecasts or their lags are missing".into(),
            })?;
            Ok((t, forest_predict(combiner, m.row(i))?.clamp(0.0, 1.0)))
        })
        .collect()
}
