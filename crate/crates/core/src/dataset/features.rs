use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Duration, Timelike, Utc};

use super::{daylight_mask, HourlyDataset, HourlyRecord, SiteConfig, WEATHER_DIM};
use crate::ensemble::ForecastMatrix;
use crate::error::{Error, Result};

/// Which raw inputs a base model sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputSet {
    /// The 14 weather columns verbatim.
    Original14,
    /// Weather plus sine/cosine of local hour-of-day and day-of-year.
    Extended,
}

impl InputSet {
    pub fn dim(self) -> usize {
        match self {
            InputSet::Original14 => WEATHER_DIM,
            InputSet::Extended => WEATHER_DIM + 4,
        }
    }

    pub fn column_names(self) -> Vec<String> {
        let mut names: Vec<String> = (1..=WEATHER_DIM).map(|k| format!("var{k}")).collect();
        if self == InputSet::Extended {
            names.extend(["hour_sin", "hour_cos", "doy_sin", "doy_cos"].map(String::from));
        }
        names
    }

    pub fn tag(self) -> &'static str {
        match self {
            InputSet::Original14 => "orig14",
            InputSet::Extended => "ext",
        }
    }
}

impl fmt::Display for InputSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for InputSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orig14" | "original14" => Ok(InputSet::Original14),
            "ext" | "extended" => Ok(InputSet::Extended),
            _ => Err(Error::Domain(format!("unknown input set {s:?}"))),
        }
    }
}

/// Dense row-major design matrix with named columns and an optional target.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    timestamps: Vec<DateTime<Utc>>,
    columns: Vec<String>,
    values: Vec<f64>,
    target: Option<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(
        timestamps: Vec<DateTime<Utc>>,
        columns: Vec<String>,
        values: Vec<f64>,
        target: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = timestamps.len();
        if values.len() != n * columns.len() {
            return Err(Error::Construction(format!(
                "{} values do not fill {n} rows x {} columns",
                values.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = columns.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::Construction(format!("duplicate column name {dup:?}")));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Construction(format!(
                "missing or non-finite value at row {}, column {:?}",
                pos / columns.len().max(1),
                columns[pos % columns.len().max(1)]
            )));
        }
        if let Some(t) = &target {
            if t.len() != n {
                return Err(Error::Construction("target length differs from row count".into()));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::Construction("missing target value".into()));
            }
        }
        Ok(Self {
            timestamps,
            columns,
            values,
            target,
        })
    }

    /// Column-major constructor with synthetic hourly timestamps, mostly for tests.
    pub fn from_columns(
        columns: Vec<String>,
        data: &[Vec<f64>],
        target: Option<Vec<f64>>,
    ) -> Result<Self> {
        if data.len() != columns.len() {
            return Err(Error::Construction("column data/name count mismatch".into()));
        }
        let n = data.first().map_or(0, Vec::len);
        if data.iter().any(|c| c.len() != n) {
            return Err(Error::Construction("ragged columns".into()));
        }
        let mut values = Vec::with_capacity(n * data.len());
        for i in 0..n {
            values.extend(data.iter().map(|c| c[i]));
        }
        let timestamps = (0..n as i64)
            .map(|h| DateTime::<Utc>::UNIX_EPOCH + Duration::hours(h))
            .collect();
        Self::new(timestamps, columns, values, target)
    }

    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn target(&self) -> Option<&[f64]> {
        self.target.as_deref()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.values[i * p..(i + 1) * p]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        let p = self.n_cols();
        self.values.iter().skip(j).step_by(p.max(1)).copied()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub(crate) fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> FeatureMatrix {
        let p = self.n_cols().max(1);
        FeatureMatrix {
            timestamps: self.timestamps.clone(),
            columns: self.columns.clone(),
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(k, &x)| f(k % p, x))
                .collect(),
            target: self.target.clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut values = Vec::with_capacity(rows.len() * self.n_cols());
        for &i in rows {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            timestamps: rows.iter().map(|&i| self.timestamps[i]).collect(),
            columns: self.columns.clone(),
            values,
            target: self
                .target
                .as_ref()
                .map(|t| rows.iter().map(|&i| t[i]).collect()),
        }
    }

    pub fn filter_rows(&self, keep: impl Fn(usize, DateTime<Utc>) -> bool) -> FeatureMatrix {
        let rows: Vec<usize> = (0..self.n_rows())
            .filter(|&i| keep(i, self.timestamps[i]))
            .collect();
        self.select_rows(&rows)
    }

    pub fn with_target(mut self, target: Vec<f64>) -> Result<Self> {
        if target.len() != self.n_rows() || target.iter().any(|v| !v.is_finite()) {
            return Err(Error::Construction("target does not match rows".into()));
        }
        self.target = Some(target);
        Ok(self)
    }
}

/// Raw (unscaled) input vector of one record for `input_set`.
pub fn feature_row(record: &HourlyRecord, input_set: InputSet, site: &SiteConfig) -> Vec<f64> {
    let mut row = Vec::with_capacity(input_set.dim());
    row.extend_from_slice(&record.weather);
    if input_set == InputSet::Extended {
        let local = site.local_time(record.timestamp);
        let hour = 2.0 * PI * (local.hour() as f64 + 0.5) / 24.0;
        let doy = 2.0 * PI * local.ordinal0() as f64 / 365.25;
        row.extend([hour.sin(), hour.cos(), doy.sin(), doy.cos()]);
    }
    row
}

/// Base-model design matrix with the normalized-power target.
pub fn build_feature_matrix(
    dataset: &HourlyDataset,
    input_set: InputSet,
    daylight_only: bool,
) -> Result<FeatureMatrix> {
    let mask = daylight_only.then(|| daylight_mask(dataset));
    let mut timestamps = Vec::new();
    let mut values = Vec::new();
    let mut target = Vec::new();
    for (i, r) in dataset.records().iter().enumerate() {
        if mask.as_ref().is_some_and(|m| !m[i]) {
            continue;
        }
        let p = r.power_w.ok_or_else(|| {
            Error::Construction(format!("no measured power at {}", r.timestamp))
        })?;
        timestamps.push(r.timestamp);
        values.extend(feature_row(r, input_set, &dataset.site));
        target.push((p / dataset.site.nominal_power_w).clamp(0.0, 1.0));
    }
    FeatureMatrix::new(timestamps, input_set.column_names(), values, Some(target))
}

pub fn combiner_column_name(model_id: &str, lag: u32) -> String {
    format!("{model_id}_lag{lag}")
}

/// Combiner design matrix: weather, then every model's forecast at each lag.
///
/// Rows follow the forecast timestamps. Rows whose lagged lookups are not
/// available in `forecasts` are dropped. The target is attached only when
/// every retained row has measured power.
pub fn build_combiner_matrix(
    dataset: &HourlyDataset,
    forecasts: &ForecastMatrix,
    lag_hours: &[u32],
) -> Result<FeatureMatrix> {
    if !lag_hours.contains(&0) {
        return Err(Error::Precondition("lag list must contain 0".into()));
    }
    let mut uniq = HashSet::new();
    if lag_hours.iter().any(|l| !uniq.insert(*l)) {
        return Err(Error::Precondition("lag list has duplicates".into()));
    }

    let ts = forecasts.timestamps();
    let record_idx: Vec<usize> = ts
        .iter()
        .map(|&t| {
            dataset.position(t).ok_or_else(|| Error::Alignment {
                timestamp: t,
                message: "forecast timestamp not present in dataset".into(),
            })
        })
        .collect::<Result<_>>()?;

    let k = forecasts.n_models();
    let mut columns: Vec<String> = InputSet::Original14.column_names();
    for id in forecasts.model_ids() {
        for &lag in lag_hours {
            columns.push(combiner_column_name(id, lag));
        }
    }

    let mut out_ts = Vec::new();
    let mut values = Vec::new();
    let mut target = Vec::new();
    let mut all_have_power = true;
    'rows: for (i, &t) in ts.iter().enumerate() {
        let mut lag_rows = Vec::with_capacity(lag_hours.len());
        for &lag in lag_hours {
            match forecasts.position(t - Duration::hours(lag as i64)) {
                Some(j) => lag_rows.push(j),
                None => continue 'rows,
            }
        }
        let rec = &dataset.records()[record_idx[i]];
        out_ts.push(t);
        values.extend_from_slice(&rec.weather);
        for m in 0..k {
            for &j in &lag_rows {
                values.push(forecasts.get(j, m));
            }
        }
        match rec.power_w {
            Some(p) => target.push((p / dataset.site.nominal_power_w).clamp(0.0, 1.0)),
            None => all_have_power = false,
        }
    }
    FeatureMatrix::new(out_ts, columns, values, all_have_power.then_some(target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_generate;

    fn small() -> HourlyDataset {
        synth_generate(3, 11, &SiteConfig::reference_site()).unwrap()
    }

    #[test]
    fn original_and_extended_shapes() {
        let ds = small();
        let n_day = daylight_mask(&ds).iter().filter(|&&d| d).count();
        let a = build_feature_matrix(&ds, InputSet::Original14, true).unwrap();
        let b = build_feature_matrix(&ds, InputSet::Extended, true).unwrap();
        assert_eq!((a.n_rows(), a.n_cols()), (n_day, 14));
        assert_eq!((b.n_rows(), b.n_cols()), (n_day, 18));
        assert_eq!(a.target().unwrap().len(), n_day);
        assert_eq!(a, build_feature_matrix(&ds, InputSet::Original14, true).unwrap());
    }

    #[test]
    fn missing_target_is_error() {
        let ds = small();
        let mut recs = ds.records().to_vec();
        recs[12].power_w = None;
        let ds = HourlyDataset::new(ds.site.clone(), recs).unwrap();
        assert!(matches!(
            build_feature_matrix(&ds, InputSet::Original14, false),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn duplicate_columns_rejected() {
        let r = FeatureMatrix::from_columns(
            vec!["a".into(), "a".into()],
            &[vec![1.0], vec![2.0]],
            None,
        );
        assert!(r.is_err());
        let nan = FeatureMatrix::from_columns(vec!["a".into()], &[vec![f64::NAN]], None);
        assert!(nan.is_err());
    }

    fn forecasts_for(ds: &HourlyDataset, k: usize) -> ForecastMatrix {
        let ids = (1..=k).map(|i| format!("m{i:02}")).collect();
        let n = ds.len();
        let values = (0..n * k).map(|v| (v % 7) as f64 / 10.0).collect();
        ForecastMatrix::new(ds.timestamps(), ids, values).unwrap()
    }

    #[test]
    fn combiner_column_arithmetic() {
        let ds = small();
        let f = forecasts_for(&ds, 24);
        let m0 = build_combiner_matrix(&ds, &f, &[0]).unwrap();
        assert_eq!(m0.n_cols(), 38);
        assert_eq!(m0.n_rows(), ds.len());
        let m24 = build_combiner_matrix(&ds, &f, &[0, 24]).unwrap();
        assert_eq!(m24.n_cols(), 62);
        assert_eq!(m24.n_rows(), ds.len() - 24);
        assert_eq!(m24.timestamps()[0], ds.records()[24].timestamp);
        // lag-24 column of model 1 equals its forecast a day earlier
        let j = m24.column_index("m01_lag24").unwrap();
        assert_eq!(m24.get(0, j), f.get(0, 0));
    }

    #[test]
    fn lag_zero_required() {
        let ds = small();
        let f = forecasts_for(&ds, 2);
        assert!(matches!(
            build_combiner_matrix(&ds, &f, &[24]),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn misaligned_forecasts_rejected() {
        let ds = small();
        let shifted: Vec<_> = ds.timestamps().iter().map(|t| *t + Duration::minutes(30)).collect();
        let f = ForecastMatrix::new(shifted.clone(), vec!["m01".into()], vec![0.0; shifted.len()])
            .unwrap();
        match build_combiner_matrix(&ds, &f, &[0]) {
            Err(Error::Alignment { timestamp, .. }) => assert_eq!(timestamp, shifted[0]),
            other => panic!("{other:?}"),
        }
    }
}
