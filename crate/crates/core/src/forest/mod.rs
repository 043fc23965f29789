//! Random forest regression: bagged CART trees with per-split feature sampling.

mod io;
mod tree;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

pub use io::{read_forest, write_forest};
pub use tree::{best_split, grow_tree, Node, RegressionTree, Split};

/// Forest size, features per split, minimum leaf size and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RfParams {
    pub b: usize,
    /// Predictors sampled per split; `None` means `ceil(p / 3)`.
    pub m: Option<usize>,
    pub n_min: usize,
    pub seed: u64,
}

impl RfParams {
    pub fn new(seed: u64) -> Self {
        Self {
            b: 300,
            m: None,
            n_min: 5,
            seed,
        }
    }

    pub fn resolved_m(&self, p: usize) -> usize {
        self.m.unwrap_or_else(|| p.div_ceil(3)).max(1)
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.b == 0 || self.n_min == 0 {
            return Err(Error::Domain("b and n_min must be at least 1".into()));
        }
        let m = self.resolved_m(p);
        if m > p {
            return Err(Error::Domain(format!("m = {m} exceeds p = {p}")));
        }
        Ok(())
    }
}

/// Per-tree generator for tree `index`.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<RegressionTree>,
    /// Parameters with `m` resolved.
    pub params: RfParams,
    pub feature_names: Vec<String>,
    /// Out-of-bag RMSE, when at least one row was out of bag.
    pub oob_rmse: Option<f64>,
}

impl Forest {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    #[inline]
    fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, f64::NEG_INFINITY);
        for t in &self.trees {
            let v = t.predict(x);
            sum += v;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        // the clamp only absorbs summation rounding
        (sum / self.trees.len() as f64).clamp(lo, hi)
    }
}

pub fn train_forest(matrix: &FeatureMatrix, params: &RfParams) -> Result<Forest> {
    let y = matrix
        .target()
        .ok_or_else(|| Error::Domain("training matrix has no target".into()))?;
    let n = matrix.n_rows();
    let p = matrix.n_cols();
    if n == 0 || p == 0 {
        return Err(Error::Domain("cannot train a forest on an empty matrix".into()));
    }
    params.validate(p)?;
    let m = params.resolved_m(p);

    let grown: Vec<(RegressionTree, Vec<bool>)> = (0..params.b)
        .into_par_iter()
        .map(|b| {
            let mut rng = tree_rng(params.seed, b);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut in_bag = vec![false; n];
            for &r in &rows {
                in_bag[r] = true;
            }
            (grow_tree(matrix, y, &rows, m, params.n_min, &mut rng), in_bag)
        })
        .collect();

    let mut oob_sum = vec![0.0; n];
    let mut oob_count = vec![0usize; n];
    for (tree, in_bag) in &grown {
        for i in (0..n).filter(|&i| !in_bag[i]) {
            oob_sum[i] += tree.predict(matrix.row(i));
            oob_count[i] += 1;
        }
    }
    let (mut se, mut k) = (0.0, 0usize);
    for i in (0..n).filter(|&i| oob_count[i] > 0) {
        se += (oob_sum[i] / oob_count[i] as f64 - y[i]).powi(2);
        k += 1;
    }

    Ok(Forest {
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        params: RfParams { m: Some(m), ..*params },
        feature_names: matrix.columns().to_vec(),
        oob_rmse: (k > 0).then(|| (se / k as f64).sqrt()),
    })
}

/// Mean of the tree outputs at `x`.
pub fn forest_predict(forest: &Forest, x: &[f64]) -> Result<f64> {
    if x.len() != forest.n_features() {
        return Err(Error::Domain(format!(
            "query has {} features, forest expects {}",
            x.len(),
            forest.n_features()
        )));
    }
    Ok(forest.predict_unchecked(x))
}

pub fn forest_predict_matrix(forest: &Forest, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
    if matrix.columns() != forest.feature_names.as_slice() {
        return Err(Error::Schema("matrix columns differ from forest features".into()));
    }
    Ok((0..matrix.n_rows())
        .into_par_iter()
        .map(|i| forest.predict_unchecked(matrix.row(i)))
        .collect())
}

/// Impurity-decrease importance normalized to sum 1; all zeros without splits.
///
/// Each split contributes its SSE decrease divided by the root sample count,
/// i.e. its node-level impurity decrease weighted by the node's sample fraction.
pub fn feature_importance(forest: &Forest) -> Vec<f64> {
    let p = forest.n_features();
    let mut imp = vec![0.0; p];
    for tree in &forest.trees {
        let root_n = tree.nodes().first().map_or(1, Node::n).max(1) as f64;
        for node in tree.nodes() {
            if let Node::Split {
                feature, decrease, ..
            } = *node
            {
                imp[feature] += decrease / root_n;
            }
        }
    }
    let total: f64 = imp.iter().sum();
    if total > 0.0 {
        imp.iter_mut().for_each(|v| *v /= total);
    }
    imp
}
