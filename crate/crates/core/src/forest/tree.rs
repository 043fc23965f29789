use rand::seq::index::sample;
use rand::Rng;

use crate::dataset::FeatureMatrix;

/// Best axis-aligned split of a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Decrease in total sum of squared errors about the node mean.
    pub decrease: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        decrease: f64,
        n: usize,
        /// Index of the right child; the left child immediately follows its parent.
        right: usize,
    },
    Leaf {
        value: f64,
        n: usize,
    },
}

impl Node {
    pub fn n(&self) -> usize {
        match *self {
            Node::Split { n, .. } | Node::Leaf { n, .. } => n,
        }
    }
}

/// Binary regression tree stored in pre-order.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    pub(crate) nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn from_preorder(nodes: Vec<Node>) -> Self {
        Self { nodes }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    right,
                    ..
                } => {
                    i = if x[feature] <= threshold { i + 1 } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

/// Running mean and sum of squared deviations (Welford).
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn new() -> Self {
        Self {
            n: 0.0,
            mean: 0.0,
            m2: 0.0,
        }
    }

    #[inline]
    fn push(&mut self, y: f64) {
        self.n += 1.0;
        let d = y - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (y - self.mean);
    }
}

/// Exhaustive search over `features` (each in ascending index order) of the
/// midpoint thresholds between consecutive distinct values. Both children
/// must keep at least `n_min` rows. Ties go to the lowest feature, then the
/// lowest threshold.
pub fn best_split(
    x: &FeatureMatrix,
    y: &[f64],
    rows: &[usize],
    features: &[usize],
    n_min: usize,
) -> Option<Split> {
    let n = rows.len();
    let n_min = n_min.max(1);
    if n < 2 * n_min {
        return None;
    }
    let mut feats = features.to_vec();
    feats.sort_unstable();
    feats.dedup();

    let mut parent = Moments::new();
    for &r in rows {
        parent.push(y[r]);
    }

    let tie_tol = 1e-12 * parent.m2.max(f64::MIN_POSITIVE);
    let mut best: Option<Split> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut right_m2 = vec![0.0; n + 1];
    for &f in &feats {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (x.get(r, f), y[r])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        // right_m2[k] = SSE of pairs[k..]
        let mut m = Moments::new();
        right_m2[n] = 0.0;
        for k in (0..n).rev() {
            m.push(pairs[k].1);
            right_m2[k] = m.m2;
        }
        let mut left = Moments::new();
        for k in 1..n {
            left.push(pairs[k - 1].1);
            if k < n_min || n - k < n_min {
                continue;
            }
            let (lo, hi) = (pairs[k - 1].0, pairs[k].0);
            if lo == hi {
                continue;
            }
            let decrease = parent.m2 - left.m2 - right_m2[k];
            // equal partitions reached through different features differ only
            // by rounding; treat those as ties
            if decrease > tie_tol && best.is_none_or(|b| decrease > b.decrease + tie_tol) {
                let mut threshold = 0.5 * (lo + hi);
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(Split {
                    feature: f,
                    threshold,
                    decrease,
                });
            }
        }
    }
    best
}

/// Grows an unpruned tree on the bootstrap multiset `rows`, drawing a fresh
/// `m`-subset of features at every node.
pub fn grow_tree<R: Rng>(
    x: &FeatureMatrix,
    y: &[f64],
    rows: &[usize],
    m: usize,
    n_min: usize,
    rng: &mut R,
) -> RegressionTree {
    let mut nodes = Vec::new();
    let mut work = rows.to_vec();
    grow(x, y, &mut work, m.clamp(1, x.n_cols().max(1)), n_min.max(1), rng, &mut nodes);
    RegressionTree { nodes }
}

fn grow<R: Rng>(
    x: &FeatureMatrix,
    y: &[f64],
    rows: &mut [usize],
    m: usize,
    n_min: usize,
    rng: &mut R,
    nodes: &mut Vec<Node>,
) {
    let n = rows.len();
    let leaf = |nodes: &mut Vec<Node>, rows: &[usize]| {
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(y[r]), hi.max(y[r])));
        // clamp guards constant nodes against summation rounding
        let mean = (rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64).clamp(lo, hi);
        nodes.push(Node::Leaf { value: mean, n: rows.len() });
    };
    if n < 2 * n_min || x.n_cols() == 0 {
        leaf(nodes, rows);
        return;
    }
    let feats = sample(rng, x.n_cols(), m).into_vec();
    let Some(split) = best_split(x, y, rows, &feats, n_min) else {
        leaf(nodes, rows);
        return;
    };

    // Stable partition: left rows keep their relative order.
    let (mut l, mut r): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&i| x.get(i, split.feature) <= split.threshold);
    let n_left = l.len();
    rows[..n_left].copy_from_slice(&l);
    rows[n_left..].copy_from_slice(&r);
    l.clear();
    r.clear();

    let me = nodes.len();
    nodes.push(Node::Split {
        feature: split.feature,
        threshold: split.threshold,
        decrease: split.decrease,
        n,
        right: 0,
    });
    let (left_rows, right_rows) = rows.split_at_mut(n_left);
    grow(x, y, left_rows, m, n_min, rng, nodes);
    let right_idx = nodes.len();
    if let Node::Split { right, .. } = &mut nodes[me] {
        *right = right_idx;
    }
    grow(x, y, right_rows, m, n_min, rng, nodes);
}
