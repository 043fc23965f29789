use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::Duration;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{smo_train, SvrHyperParams, SvrModel, DEFAULT_EPSILON, DEFAULT_TOL};
use crate::dataset::{
    apply_scaler, build_feature_matrix, fit_scaler, FeatureMatrix, HourlyDataset, InputSet,
    NormScheme, TimeWindow,
};
use crate::error::{Error, Result};

/// Id of the all-months / scheme A / C=10, gamma=8 / original-14 variant.
pub const BEST_VARIANT_ID: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetSpan {
    AllMonths,
    /// Trailing months immediately before the forecast period.
    RecentMonths,
}

impl DatasetSpan {
    pub fn tag(self) -> &'static str {
        match self {
            DatasetSpan::AllMonths => "all_months",
            DatasetSpan::RecentMonths => "recent_months",
        }
    }
}

impl fmt::Display for DatasetSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for DatasetSpan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all_months" => Ok(DatasetSpan::AllMonths),
            "recent_months" => Ok(DatasetSpan::RecentMonths),
            _ => Err(Error::Domain(format!("unknown dataset span {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSet {
    pub c: f64,
    pub gamma: f64,
}

impl ParamSet {
    pub fn tag(self) -> String {
        format!("C{}g{}", self.c, self.gamma)
    }
}

/// `(C, gamma)` grid: the (10, 8) pair plus one-axis alternates.
pub const PARAM_SETS: [ParamSet; 3] = [
    ParamSet { c: 10.0, gamma: 8.0 },
    ParamSet { c: 1.0, gamma: 8.0 },
    ParamSet { c: 10.0, gamma: 0.5 },
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariantSpec {
    /// 1-based position in [`make_variant_specs`].
    pub id: usize,
    pub span: DatasetSpan,
    pub norm: NormScheme,
    pub params: ParamSet,
    pub input_set: InputSet,
}

impl VariantSpec {
    /// E.g. `all_months+A+C10g8+orig14`.
    pub fn composition(&self) -> String {
        format!(
            "{}+{}+{}+{}",
            self.span,
            self.norm,
            self.params.tag(),
            self.input_set
        )
    }

    pub fn model_id(&self) -> String {
        format!("model_{:02}", self.id)
    }
}

/// The 2 x 2 x 3 x 2 grid, enumerated as input set > scheme > span > params.
pub fn make_variant_specs() -> Vec<VariantSpec> {
    let mut out = Vec::with_capacity(24);
    for input_set in [InputSet::Original14, InputSet::Extended] {
        for norm in [NormScheme::A, NormScheme::B] {
            for span in [DatasetSpan::RecentMonths, DatasetSpan::AllMonths] {
                for params in PARAM_SETS {
                    out.push(VariantSpec {
                        id: out.len() + 1,
                        span,
                        norm,
                        params,
                        input_set,
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub epsilon: f64,
    pub tol: f64,
    pub max_passes: Option<usize>,
    /// Length of the `recent_months` window.
    pub recent_months: u32,
    /// Daylight rows beyond this count are subsampled without replacement.
    pub max_train_rows: Option<usize>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            tol: DEFAULT_TOL,
            max_passes: None,
            recent_months: 3,
            max_train_rows: Some(1500),
        }
    }
}

fn span_window(dataset: &HourlyDataset, span: DatasetSpan, recent_months: u32) -> Result<HourlyDataset> {
    match span {
        DatasetSpan::AllMonths => Ok(dataset.clone()),
        DatasetSpan::RecentMonths => {
            let last = dataset
                .records()
                .last()
                .ok_or_else(|| Error::Config("empty training dataset".into()))?;
            let mut first = dataset.site.local_month(last.timestamp + Duration::hours(1));
            for _ in 0..recent_months {
                first = first.pred();
            }
            let start = TimeWindow::month(&dataset.site, first).start;
            Ok(dataset.slice(start, last.timestamp + Duration::hours(1)))
        }
    }
}

fn subsample(m: FeatureMatrix, cap: Option<usize>, seed: u64, stream: u64) -> FeatureMatrix {
    match cap {
        Some(cap) if m.n_rows() > cap => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let mut rows = sample(&mut rng, m.n_rows(), cap).into_vec();
            rows.sort_unstable();
            m.select_rows(&rows)
        }
        _ => m,
    }
}

/// Trains one model per spec on the daylight rows of `dataset`.
///
/// `dataset` is the full history available before the forecast period.
pub fn train_variants(
    dataset: &HourlyDataset,
    specs: &[VariantSpec],
    seed: u64,
    opts: &TrainOptions,
) -> Result<Vec<SvrModel>> {
    // Raw design matrices shared across variants with the same span and inputs.
    let mut raw: HashMap<(DatasetSpan, InputSet), FeatureMatrix> = HashMap::new();
    for spec in specs {
        let key = (spec.span, spec.input_set);
        if raw.contains_key(&key) {
            continue;
        }
        let window = span_window(dataset, spec.span, opts.recent_months)?;
        let m = build_feature_matrix(&window, spec.input_set, true)
            .map_err(|e| e.tag_variant(spec.id))?;
        if m.n_rows() == 0 {
            return Err(Error::Config(format!(
                "variant {}: no daylight training rows",
                spec.id
            )));
        }
        let stream = match spec.span {
            DatasetSpan::AllMonths => 0,
            DatasetSpan::RecentMonths => 1,
        };
        raw.insert(key, subsample(m, opts.max_train_rows, seed, stream));
    }

    specs
        .par_iter()
        .map(|spec| {
            let m = &raw[&(spec.span, spec.input_set)];
            let scaler = fit_scaler(m, spec.norm).map_err(|e| e.tag_variant(spec.id))?;
            let scaled = apply_scaler(m, &scaler)?;
            let hyper = SvrHyperParams {
                c: spec.params.c,
                gamma: spec.params.gamma,
                epsilon: opts.epsilon,
                tol: opts.tol,
                max_passes: opts.max_passes,
            };
            let mut model = smo_train(&scaled, &hyper).map_err(|e| e.tag_variant(spec.id))?;
            model.scaler = Some(scaler);
            model.variant = Some(*spec);
            Ok(model)
        })
        .collect()
}
