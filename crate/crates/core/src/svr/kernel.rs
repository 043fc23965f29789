use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

/// Gaussian RBF kernel `exp(-gamma * |x - y|^2)`.
pub fn rbf_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "kernel arguments have dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma must be positive, got {gamma}")));
    }
    Ok(rbf(x, y, gamma))
}

#[inline]
pub(crate) fn rbf(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

/// Dense symmetric kernel matrix over the rows of a training set.
#[derive(Debug, Clone)]
pub struct Gram {
    n: usize,
    data: Vec<f64>,
}

impl Gram {
    pub fn rbf(features: &FeatureMatrix, gamma: f64) -> Self {
        let n = features.n_rows();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
            let xi = features.row(i);
            for j in (i + 1)..n {
                let k = rbf(xi, features.row(j), gamma);
                data[i * n + j] = k;
                data[j * n + i] = k;
            }
        }
        Self { n, data }
    }

    pub fn from_dense(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Domain("Gram matrix is not square".into()));
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_points_give_one() {
        assert_eq!(rbf_kernel(&[0.3, -2.0], &[0.3, -2.0], 8.0).unwrap(), 1.0);
    }

    #[test]
    fn unit_distance_gamma_eight() {
        let k = rbf_kernel(&[0.0], &[1.0], 8.0).unwrap();
        assert!((k - 3.354_626_279_025_119e-4).abs() < 1e-16);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(rbf_kernel(&[0.0], &[1.0, 2.0], 1.0).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(
            x in prop::collection::vec(-1.0f64..1.0, 3),
            y in prop::collection::vec(-1.0f64..1.0, 3),
            gamma in 0.01f64..10.0,
        ) {
            let a = rbf_kernel(&x, &y, gamma).unwrap();
            let b = rbf_kernel(&y, &x, gamma).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a <= 1.0 && a > 0.0);
            if x != y {
                prop_assert!(a < 1.0);
            }
        }
    }
}
