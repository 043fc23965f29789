//! Sequential minimal optimization for the epsilon-SVR dual.
//!
//! The dual is solved in its 2N-variable form
//!
//! ```text
//! min_a  1/2 a'Qa + p'a   s.t.  sum_t s_t a_t = 0,  0 <= a_t <= C
//! ```
//!
//! where the first N variables are the `alpha_i` (sign `s = +1`,
//! `p = eps - y_i`) and the last N the `alpha*_i` (sign `s = -1`,
//! `p = eps + y_i`), and `Q_st = s_s s_t K(i(s), i(t))`. Pairs are chosen by
//! second-order working-set selection; the stopping rule is the maximal
//! violating-pair gap `m(a) - M(a) < tol`.

use super::kernel::Gram;
use super::SvrHyperParams;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

/// Optimal dual variables of one training problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// `alpha_i - alpha*_i` per training row.
    pub beta: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    /// Violating-pair gap at termination.
    pub gap: f64,
}

/// `1/2 b'Kb + eps |b|_1 - y'b`, the dual objective in coefficient form.
pub fn dual_objective(gram: &Gram, targets: &[f64], epsilon: f64, beta: &[f64]) -> f64 {
    let n = beta.len();
    let mut quad = 0.0;
    for i in 0..n {
        if beta[i] == 0.0 {
            continue;
        }
        let row = gram.row(i);
        let kb: f64 = (0..n).map(|j| row[j] * beta[j]).sum();
        quad += beta[i] * kb;
    }
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let lin: f64 = beta.iter().zip(targets).map(|(b, y)| b * y).sum();
    0.5 * quad + epsilon * l1 - lin
}

pub fn solve_dual(gram: &Gram, targets: &[f64], hyper: &SvrHyperParams) -> Result<DualSolution> {
    let l = gram.len();
    if l == 0 || targets.len() != l {
        return Err(Error::Domain(format!(
            "need at least one training row with a target, got {} rows / {} targets",
            l,
            targets.len()
        )));
    }
    hyper.validate()?;
    let c = hyper.c;
    let eps = hyper.epsilon;

    let sign = |t: usize| if t < l { 1.0 } else { -1.0 };
    let base = |t: usize| if t < l { t } else { t - l };
    let mut alpha = vec![0.0f64; 2 * l];
    let mut grad: Vec<f64> = (0..2 * l)
        .map(|t| {
            if t < l {
                eps - targets[t]
            } else {
                eps + targets[t - l]
            }
        })
        .collect();

    let in_up = |t: usize, a: f64| if t < l { a < c } else { a > 0.0 };
    let in_low = |t: usize, a: f64| if t < l { a > 0.0 } else { a < c };

    let max_iter = hyper.max_iterations(l);
    let mut iterations = 0;
    let mut gap;
    loop {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..2 * l {
            if in_up(t, alpha[t]) {
                let v = -sign(t) * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = t;
                }
            }
        }
        // j: second-order choice in I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = usize::MAX;
        let mut obj_min = f64::INFINITY;
        if i_sel != usize::MAX {
            let bi = base(i_sel);
            let ki = gram.row(bi);
            for t in 0..2 * l {
                if !in_low(t, alpha[t]) {
                    continue;
                }
                let syg = sign(t) * grad[t];
                if syg > gmax2 {
                    gmax2 = syg;
                }
                let b = gmax + syg;
                if b > 0.0 {
                    let bt = base(t);
                    let mut a = ki[bi] + gram.get(bt, bt) - 2.0 * ki[bt];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let obj = -(b * b) / a;
                    if obj < obj_min {
                        obj_min = obj;
                        j_sel = t;
                    }
                }
            }
        }
        gap = gmax + gmax2;
        if !(gap >= hyper.tol) || j_sel == usize::MAX {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::Convergence {
                variant: None,
                residual: gap,
                iterations,
            });
        }
        iterations += 1;

        let (i, j) = (i_sel, j_sel);
        let (bi, bj) = (base(i), base(j));
        let kii = gram.get(bi, bi);
        let kjj = gram.get(bj, bj);
        let kij = gram.get(bi, bj);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = {
            let q = kii + kjj - 2.0 * kij;
            if q <= 0.0 {
                TAU
            } else {
                q
            }
        };
        if sign(i) != sign(j) {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        // Gradient update: dG_t = Q_ti dA_i + Q_tj dA_j.
        let di = sign(i) * (alpha[i] - old_i);
        let dj = sign(j) * (alpha[j] - old_j);
        let ri = gram.row(bi);
        let rj = gram.row(bj);
        for k in 0..l {
            let d = ri[k] * di + rj[k] * dj;
            grad[k] += d;
            grad[k + l] -= d;
        }
    }

    // Offset: average over free variables, else midpoint of the feasible interval.
    let mut n_free = 0usize;
    let mut sum_free = 0.0;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..2 * l {
        let yg = sign(t) * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if sign(t) < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if sign(t) > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };

    let beta = (0..l).map(|i| alpha[i] - alpha[i + l]).collect();
    Ok(DualSolution {
        beta,
        bias: -rho,
        iterations,
        gap: gap.max(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::FeatureMatrix;

    fn hyper(c: f64, gamma: f64, epsilon: f64) -> SvrHyperParams {
        SvrHyperParams {
            c,
            gamma,
            epsilon,
            tol: 1e-8,
            max_passes: None,
        }
    }

    fn problem(xs: &[f64]) -> Gram {
        let m = FeatureMatrix::from_columns(vec!["x".into()], &[xs.to_vec()], None).unwrap();
        Gram::rbf(&m, 2.0)
    }

    #[test]
    fn one_point_sits_in_the_tube() {
        let g = problem(&[0.4]);
        let s = solve_dual(&g, &[0.7], &hyper(10.0, 2.0, 0.01)).unwrap();
        assert_eq!(s.beta, vec![0.0]);
        assert!((s.bias - 0.7).abs() <= 0.01);
    }

    #[test]
    fn equality_and_box_constraints_hold() {
        let xs = [0.0, 0.2, 0.35, 0.5, 0.8, 0.9, 1.0];
        let ys = [0.1, 0.5, 0.2, 0.9, 0.3, 0.7, 0.0];
        let g = problem(&xs);
        let h = hyper(1.0, 2.0, 0.05);
        let s = solve_dual(&g, &ys, &h).unwrap();
        assert!(s.beta.iter().sum::<f64>().abs() < 1e-12);
        assert!(s.beta.iter().all(|b| b.abs() <= h.c + 1e-12));
        assert!(s.gap < h.tol);
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 / 29.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (6.0 * x).sin()).collect();
        let g = problem(&xs);
        let mut h = hyper(10.0, 2.0, 0.001);
        h.max_passes = Some(2);
        match solve_dual(&g, &ys, &h) {
            Err(Error::Convergence { residual, iterations, .. }) => {
                assert_eq!(iterations, 2);
                assert!(residual > h.tol);
            }
            other => panic!("{other:?}"),
        }
    }
}
