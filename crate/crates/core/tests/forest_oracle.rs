mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sunblend::dataset::FeatureMatrix;
use sunblend::forest::{
    best_split, feature_importance, forest_predict, grow_tree, train_forest, Node, RfParams,
};

use common::{cart_split_bruteforce, cart_tree_bruteforce, OracleNode};

fn matrix(cols: &[Vec<f64>], y: &[f64]) -> FeatureMatrix {
    FeatureMatrix::from_columns(
        (0..cols.len()).map(|j| format!("f{j}")).collect(),
        cols,
        Some(y.to_vec()),
    )
    .unwrap()
}

fn data(rows: usize, cols: usize, grid: bool) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    let cell = if grid {
        (0u8..8).prop_map(|v| v as f64 / 4.0).boxed()
    } else {
        (0.0..1.0f64).boxed()
    };
    (
        prop::collection::vec(prop::collection::vec(cell, rows), cols),
        prop::collection::vec(0.0..1.0f64, rows),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn best_split_equals_exhaustive((cols, y) in data(10, 3, true), n_min in 1usize..4) {
        let x = matrix(&cols, &y);
        let rows: Vec<usize> = (0..10).collect();
        let got = best_split(&x, &y, &rows, &[0, 1, 2], n_min);
        let want = cart_split_bruteforce(&x, &y, &rows, n_min);
        match (got, want) {
            (Some(g), Some(w)) => {
                prop_assert_eq!(g.feature, w.feature);
                prop_assert_eq!(g.threshold, w.threshold);
                prop_assert!((g.decrease - w.decrease).abs() < 1e-12);
            }
            (None, None) => {}
            (g, w) => prop_assert!(false, "got {:?}, oracle {:?}", g, w),
        }
    }

    #[test]
    fn full_tree_equals_exhaustive((cols, y) in data(10, 3, true)) {
        let x = matrix(&cols, &y);
        let rows: Vec<usize> = (0..10).collect();
        let tree = grow_tree(&x, &y, &rows, 3, 1, &mut ChaCha8Rng::seed_from_u64(1));
        let oracle = cart_tree_bruteforce(&x, &y, &rows, 1);
        prop_assert_eq!(tree.nodes().len(), oracle.len());
        for (a, b) in tree.nodes().iter().zip(&oracle) {
            match (a, b) {
                (Node::Split { feature, threshold, .. }, OracleNode::Split { feature: f, threshold: t }) => {
                    prop_assert_eq!(feature, f);
                    prop_assert_eq!(threshold, t);
                }
                (Node::Leaf { value, .. }, OracleNode::Leaf { value: v }) => {
                    prop_assert!((value - v).abs() < 1e-12);
                }
                _ => prop_assert!(false, "node kinds differ"),
            }
        }
    }

    #[test]
    fn leaf_count_bounded_by_rows((cols, y) in data(40, 2, false), n_min in 1usize..6) {
        let x = matrix(&cols, &y);
        let rows: Vec<usize> = (0..40).collect();
        let tree = grow_tree(&x, &y, &rows, 2, n_min, &mut ChaCha8Rng::seed_from_u64(2));
        prop_assert!(tree.n_leaves() <= 40 / n_min);
        for node in tree.nodes() {
            if let Node::Leaf { n, .. } = node {
                prop_assert!(*n >= n_min);
            }
        }
    }

    #[test]
    fn forest_prediction_is_bounded_mean((cols, y) in data(30, 3, false), q in prop::collection::vec(-0.5..1.5f64, 3), seed in 0u64..1000) {
        let x = matrix(&cols, &y);
        let mut p = RfParams::new(seed);
        p.b = 15;
        let f = train_forest(&x, &p).unwrap();
        let pred = forest_predict(&f, &q).unwrap();
        let mean = f.trees.iter().map(|t| t.predict(&q)).sum::<f64>() / 15.0;
        prop_assert!((pred - mean).abs() < 1e-12);
        let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= pred && pred <= hi);
        let imp = feature_importance(&f);
        let s: f64 = imp.iter().sum();
        prop_assert!(imp.iter().all(|v| *v >= 0.0));
        prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-12);
    }
}

#[test]
fn tie_between_identical_features_goes_to_lowest_index() {
    let col = vec![0.1, 0.4, 0.2, 0.9, 0.7, 0.3];
    let y = vec![0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
    let x = matrix(&[col.clone(), col.clone(), col], &y);
    let rows: Vec<usize> = (0..6).collect();
    for feats in [[0, 1, 2], [2, 1, 0]] {
        let s = best_split(&x, &y, &rows, &feats, 1).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 0.5 * (0.3 + 0.4));
    }
}
