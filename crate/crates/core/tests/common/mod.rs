//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use sunblend::dataset::FeatureMatrix;

/// Gaussian elimination with partial pivoting; None when singular.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn rbf_gram(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    x.iter()
        .map(|a| {
            x.iter()
                .map(|b| {
                    let d: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                    (-gamma * d).exp()
                })
                .collect()
        })
        .collect()
}

/// 0.5 b'Kb + eps |b|_1 - y'b
pub fn svr_dual(k: &[Vec<f64>], y: &[f64], eps: f64, beta: &[f64]) -> f64 {
    let n = y.len();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += beta[i] * k[i][j] * beta[j];
        }
    }
    0.5 * q + eps * beta.iter().map(|b| b.abs()).sum::<f64>()
        - y.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>()
}

/// Exact minimum of the SVR dual by enumerating every face of the box.
///
/// Each coefficient is pinned at -C, 0 or +C, or free with a fixed sign; on a
/// face the objective is quadratic and the minimiser solves a linear KKT
/// system with one multiplier for `sum(beta) = 0`. The best feasible face
/// point is the global minimum because the problem is convex.
pub fn svr_dual_bruteforce(k: &[Vec<f64>], y: &[f64], c: f64, eps: f64) -> (f64, Vec<f64>) {
    let n = y.len();
    let mut best = (f64::INFINITY, vec![0.0; n]);
    let total = 5usize.pow(n as u32);
    for code in 0..total {
        // 0: -C, 1: 0, 2: +C, 3: free positive, 4: free negative
        let mut state = vec![0u8; n];
        let mut t = code;
        for s in state.iter_mut() {
            *s = (t % 5) as u8;
            t /= 5;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] >= 3).collect();
        let mut beta: Vec<f64> = state
            .iter()
            .map(|s| match s {
                0 => -c,
                2 => c,
                _ => 0.0,
            })
            .collect();
        let fixed_sum: f64 = beta.iter().sum();
        if free.is_empty() {
            if fixed_sum.abs() > 1e-12 {
                continue;
            }
        } else {
            // unknowns: beta_F, lambda
            let f = free.len();
            let mut a = vec![vec![0.0; f + 1]; f + 1];
            let mut b = vec![0.0; f + 1];
            for (r, &i) in free.iter().enumerate() {
                for (cidx, &j) in free.iter().enumerate() {
                    a[r][cidx] = k[i][j];
                }
                a[r][f] = 1.0;
                let sign = if state[i] == 3 { 1.0 } else { -1.0 };
                let fixed_part: f64 = (0..n)
                    .filter(|j| !free.contains(j))
                    .map(|j| k[i][j] * beta[j])
                    .sum();
                b[r] = y[i] - eps * sign - fixed_part;
                a[f][r] = 1.0;
            }
            b[f] = -fixed_sum;
            let Some(sol) = solve_linear(a, b) else { continue };
            let mut ok = true;
            for (r, &i) in free.iter().enumerate() {
                let v = sol[r];
                let inside = if state[i] == 3 { v > 0.0 && v < c } else { v < 0.0 && v > -c };
                if !inside {
                    ok = false;
                }
                beta[i] = v;
            }
            if !ok {
                continue;
            }
        }
        let obj = svr_dual(k, y, eps, &beta);
        if obj < best.0 {
            best = (obj, beta);
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSplit {
    pub feature: usize,
    pub threshold: f64,
    pub decrease: f64,
}

fn sse(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m) * (x - m)).sum()
}

/// Every feature, every midpoint between consecutive distinct values.
pub fn cart_split_bruteforce(
    x: &FeatureMatrix,
    y: &[f64],
    rows: &[usize],
    n_min: usize,
) -> Option<OracleSplit> {
    let parent: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    let parent_sse = sse(&parent);
    let mut best: Option<OracleSplit> = None;
    for f in 0..x.n_cols() {
        let mut vals: Vec<f64> = rows.iter().map(|&r| x.get(r, f)).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = 0.5 * (w[0] + w[1]);
            let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x.get(i, f) <= t);
            if l.len() < n_min || r.len() < n_min {
                continue;
            }
            let ly: Vec<f64> = l.iter().map(|&i| y[i]).collect();
            let ry: Vec<f64> = r.iter().map(|&i| y[i]).collect();
            let d = parent_sse - sse(&ly) - sse(&ry);
            if d > 1e-12 && best.as_ref().is_none_or(|b| d > b.decrease + 1e-12) {
                best = Some(OracleSplit {
                    feature: f,
                    threshold: t,
                    decrease: d,
                });
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleNode {
    Split { feature: usize, threshold: f64 },
    Leaf { value: f64 },
}

/// Fully grown tree from exhaustive splits, pre-order.
pub fn cart_tree_bruteforce(x: &FeatureMatrix, y: &[f64], rows: &[usize], n_min: usize) -> Vec<OracleNode> {
    let mut out = Vec::new();
    grow(x, y, rows, n_min, &mut out);
    out
}

fn grow(x: &FeatureMatrix, y: &[f64], rows: &[usize], n_min: usize, out: &mut Vec<OracleNode>) {
    let split = if rows.len() >= 2 * n_min {
        cart_split_bruteforce(x, y, rows, n_min)
    } else {
        None
    };
    match split {
        None => out.push(OracleNode::Leaf {
            value: rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64,
        }),
        Some(s) => {
            out.push(OracleNode::Split {
                feature: s.feature,
                threshold: s.threshold,
            });
            let (l, r): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| x.get(i, s.feature) <= s.threshold);
            grow(x, y, &l, n_min, out);
            grow(x, y, &r, n_min, out);
        }
    }
}

/// Average ranks (1-based), ties share the mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation as the Pearson correlation of ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va.sqrt() * vb.sqrt())
}
