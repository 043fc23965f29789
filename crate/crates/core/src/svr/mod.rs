//! Epsilon-SVR base forecasters and the 24-variant model family.

mod io;
mod kernel;
mod smo;
mod variants;

use crate::dataset::{FeatureMatrix, ScalerParams};
use crate::error::{Error, Result};

pub use io::{read_model, write_model};
pub use kernel::{rbf_kernel, Gram};
pub use smo::{dual_objective, solve_dual, DualSolution};
pub use variants::{
    make_variant_specs, train_variants, DatasetSpan, ParamSet, TrainOptions, VariantSpec,
    BEST_VARIANT_ID, PARAM_SETS,
};

pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvrHyperParams {
    /// Box constraint.
    pub c: f64,
    /// RBF width.
    pub gamma: f64,
    /// Half-width of the insensitive tube.
    pub epsilon: f64,
    /// Violating-pair tolerance.
    pub tol: f64,
    /// Iteration cap; `None` means 10 x training rows.
    pub max_passes: Option<usize>,
}

impl SvrHyperParams {
    pub fn new(c: f64, gamma: f64) -> Self {
        Self {
            c,
            gamma,
            epsilon: DEFAULT_EPSILON,
            tol: DEFAULT_TOL,
            max_passes: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.c > 0.0
            && self.gamma > 0.0
            && self.epsilon >= 0.0
            && self.tol > 0.0
            && self.max_passes != Some(0)
            && [self.c, self.gamma, self.epsilon, self.tol]
                .iter()
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid SVR hyperparameters {self:?}")))
        }
    }

    pub fn max_iterations(&self, n_rows: usize) -> usize {
        self.max_passes.unwrap_or((100 * n_rows).max(100_000))
    }
}

/// A trained epsilon-SVR.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    /// Scaled training rows with nonzero coefficients.
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i - alpha*_i` for each support vector.
    pub dual_coefs: Vec<f64>,
    /// Training-set row index of each support vector.
    pub sv_rows: Vec<usize>,
    pub bias: f64,
    pub hyper: SvrHyperParams,
    /// Scaler applied to raw inputs; `None` when inputs arrive pre-scaled.
    pub scaler: Option<ScalerParams>,
    pub variant: Option<VariantSpec>,
}

impl SvrModel {
    pub fn dim(&self) -> Option<usize> {
        self.scaler
            .as_ref()
            .map(ScalerParams::dim)
            .or_else(|| self.support_vectors.first().map(Vec::len))
    }

    pub fn variant_id(&self) -> Option<usize> {
        self.variant.as_ref().map(|v| v.id)
    }

    /// Unclipped `sum_i coef_i K(sv_i, x) + bias` on an already-scaled input.
    pub fn decision_value(&self, x_scaled: &[f64]) -> f64 {
        let s: f64 = self
            .support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, &c)| c * kernel::rbf(sv, x_scaled, self.hyper.gamma))
            .sum();
        s + self.bias
    }
}

/// Trains on a scaled design matrix; the target is required.
pub fn smo_train(features: &FeatureMatrix, hyper: &SvrHyperParams) -> Result<SvrModel> {
    let targets = features
        .target()
        .ok_or_else(|| Error::Domain("training matrix has no target".into()))?;
    if features.n_rows() == 0 {
        return Err(Error::Domain("no training rows".into()));
    }
    hyper.validate()?;
    let gram = Gram::rbf(features, hyper.gamma);
    let sol = solve_dual(&gram, targets, hyper)?;
    let sv_rows: Vec<usize> = (0..sol.beta.len()).filter(|&i| sol.beta[i] != 0.0).collect();
    Ok(SvrModel {
        support_vectors: sv_rows.iter().map(|&i| features.row(i).to_vec()).collect(),
        dual_coefs: sv_rows.iter().map(|&i| sol.beta[i]).collect(),
        sv_rows,
        bias: sol.bias,
        hyper: *hyper,
        scaler: None,
        variant: None,
    })
}

/// Normalized power forecast for one raw input vector, clipped to `[0, 1]`.
pub fn svr_predict(model: &SvrModel, x_raw: &[f64]) -> Result<f64> {
    let scaled;
    let x = match &model.scaler {
        Some(s) => {
            scaled = s.transform_row(x_raw)?;
            &scaled[..]
        }
        None => {
            if let Some(d) = model.dim() {
                if d != x_raw.len() {
                    return Err(Error::Domain(format!(
                        "input has {} features, model expects {d}",
                        x_raw.len()
                    )));
                }
            }
            x_raw
        }
    };
    Ok(model.decision_value(x).clamp(0.0, 1.0))
}

/// Largest KKT complementarity violation over the training rows, measured
/// against the tube: free coefficients must sit exactly on the tube edge,
/// coefficients at the box bounds outside it, and zero coefficients inside.
pub fn kkt_violation(model: &SvrModel, features: &FeatureMatrix) -> f64 {
    let Some(targets) = features.target() else {
        return f64::INFINITY;
    };
    let n = features.n_rows();
    let mut coef = vec![0.0; n];
    for (&row, &c) in model.sv_rows.iter().zip(&model.dual_coefs) {
        if row < n {
            coef[row] = c;
        }
    }
    let c_max = model.hyper.c;
    let eps = model.hyper.epsilon;
    let bound = c_max * (1.0 - 1e-12);
    (0..n)
        .map(|i| {
            let e = model.decision_value(features.row(i)) - targets[i];
            let b = coef[i];
            if b == 0.0 {
                (e.abs() - eps).max(0.0)
            } else if b >= bound {
                (e + eps).max(0.0)
            } else if b > 0.0 {
                (e + eps).abs()
            } else if b <= -bound {
                (eps - e).max(0.0)
            } else {
                (e - eps).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(n: usize, d: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
            .collect();
        let y = (0..n)
            .map(|i| (cols[0][i] * 3.0).sin().abs() * 0.8 + 0.1 * rng.random::<f64>())
            .collect();
        let names = (0..d).map(|j| format!("x{j}")).collect();
        FeatureMatrix::from_columns(names, &cols, Some(y)).unwrap()
    }

    #[test]
    fn single_point_prediction_within_tube() {
        let m = FeatureMatrix::from_columns(vec!["x".into()], &[vec![0.3]], Some(vec![0.42])).unwrap();
        let model = smo_train(&m, &SvrHyperParams::new(10.0, 8.0)).unwrap();
        assert!(model.support_vectors.is_empty());
        assert!((svr_predict(&model, &[0.3]).unwrap() - 0.42).abs() <= 0.01);
        assert!(kkt_violation(&model, &m) < 1e-15);
    }

    #[test]
    fn converged_model_satisfies_kkt_and_perturbation_breaks_it() {
        let m = random_problem(60, 3, 2);
        let h = SvrHyperParams::new(10.0, 8.0);
        let model = smo_train(&m, &h).unwrap();
        assert!(kkt_violation(&model, &m) <= h.tol);
        assert!(model.dual_coefs.iter().all(|c| c.abs() <= h.c + 1e-12));
        let sum: f64 = model.dual_coefs.iter().sum();
        assert!(sum.abs() <= h.tol * model.dual_coefs.len().max(1) as f64);
        let mut bumped = model.clone();
        bumped.bias += 1.0;
        assert!(kkt_violation(&bumped, &m) > h.tol);
    }

    #[test]
    fn duplicated_set_with_half_cost_predicts_the_same() {
        let m = random_problem(25, 2, 9);
        let rows: Vec<usize> = (0..m.n_rows()).chain(0..m.n_rows()).collect();
        let doubled = m.select_rows(&rows);
        let mut h = SvrHyperParams::new(10.0, 8.0);
        h.tol = 1e-6;
        let a = smo_train(&m, &h).unwrap();
        // every duplicate pair shares one original coefficient
        let b = smo_train(&doubled, &SvrHyperParams { c: 5.0, ..h }).unwrap();
        for i in 0..m.n_rows() {
            let (pa, pb) = (a.decision_value(m.row(i)), b.decision_value(m.row(i)));
            assert!((pa - pb).abs() < 1e-3, "row {i}: {pa} vs {pb}");
        }
    }

    #[test]
    fn interpolating_model_fits_training_points() {
        let m = random_problem(30, 2, 4);
        let h = SvrHyperParams::new(100.0, 8.0);
        let model = smo_train(&m, &h).unwrap();
        let y = m.target().unwrap();
        for i in 0..m.n_rows() {
            let p = svr_predict(&model, m.row(i)).unwrap();
            assert!((p - y[i]).abs() <= h.epsilon + h.tol + 1e-9, "{p} vs {}", y[i]);
        }
    }

    #[test]
    fn empty_model_predicts_clipped_bias() {
        let mut model = smo_train(
            &FeatureMatrix::from_columns(vec!["x".into()], &[vec![0.0]], Some(vec![0.5])).unwrap(),
            &SvrHyperParams::new(1.0, 1.0),
        )
        .unwrap();
        model.bias = -0.2;
        assert_eq!(svr_predict(&model, &[0.7]).unwrap(), 0.0);
        model.bias = 0.3;
        assert_eq!(svr_predict(&model, &[0.7]).unwrap(), 0.3);
        assert!(svr_predict(&model, &[0.7, 1.0]).is_ok()); // no SVs, no scaler: dimension unknown
    }

    #[test]
    fn prediction_dimension_checked() {
        let m = random_problem(10, 2, 1);
        let model = smo_train(&m, &SvrHyperParams::new(1.0, 1.0)).unwrap();
        assert!(svr_predict(&model, &[0.1]).is_err());
    }

    #[test]
    fn wider_tube_never_adds_support_vectors() {
        let m = random_problem(50, 2, 17);
        let mut prev = usize::MAX;
        for eps in [0.0, 0.01, 0.03, 0.06, 0.1, 0.2] {
            let mut h = SvrHyperParams::new(10.0, 2.0);
            h.epsilon = eps;
            h.tol = 1e-6;
            let n = smo_train(&m, &h).unwrap().support_vectors.len();
            assert!(n <= prev, "eps {eps}: {n} > {prev}");
            prev = n;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn prediction_ignores_support_vector_order(seed in 0u64..1000, q in prop::collection::vec(0.0f64..1.0, 2)) {
            let m = random_problem(20, 2, seed);
            let model = smo_train(&m, &SvrHyperParams::new(10.0, 8.0)).unwrap();
            let mut rev = model.clone();
            rev.support_vectors.reverse();
            rev.dual_coefs.reverse();
            rev.sv_rows.reverse();
            let (a, b) = (model.decision_value(&q), rev.decision_value(&q));
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
