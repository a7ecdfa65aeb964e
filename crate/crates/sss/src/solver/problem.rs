//! Problem instances and the cached eigendecomposition of `A^T A`.

use ndarray::prelude::*;
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};

/// A linear measurement instance `A x = b`, optionally carrying the
/// ground-truth signal and the noise level used to produce `b`.
#[derive(Debug, Clone)]
pub struct Problem {
    pub a: Array2<f64>,
    pub b: Array1<f64>,
    /// Ground truth, kept for evaluation only; never read by the solver.
    pub truth: Option<Array1<f64>>,
    /// Noise energy `sigma^2` such that `E ||b - A x*||^2 ~ sigma^2`.
    pub noise_variance: Option<f64>,
}

impl Problem {
    pub fn new(a: Array2<f64>, b: Array1<f64>) -> Result<Self> {
        Self::with_truth(a, b, None, None)
    }

    pub fn with_truth(
        a: Array2<f64>,
        b: Array1<f64>,
        truth: Option<Array1<f64>>,
        noise_variance: Option<f64>,
    ) -> Result<Self> {
        let (m, n) = a.dim();
        if m < 1 || n < 1 {
            return Err(Error::InvalidArgument(format!(
                "matrix must be at least 1x1, got {m}x{n}"
            )));
        }
        if b.len() != m {
            return Err(Error::ShapeMismatch {
                context: "observation length vs matrix rows",
                expected: m,
                actual: b.len(),
            });
        }
        if let Some(t) = &truth {
            if t.len() != n {
                return Err(Error::ShapeMismatch {
                    context: "truth length vs matrix columns",
                    expected: n,
                    actual: t.len(),
                });
            }
        }
        if let Some(v) = noise_variance {
            if !(v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "noise variance must be nonnegative, got {v}"
                )));
            }
        }
        if a.iter().any(|v| !v.is_finite()) || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite input".into()));
        }
        for (j, col) in a.columns().into_iter().enumerate() {
            if col.iter().all(|v| *v == 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "column {j} of the measurement matrix is identically zero"
                )));
            }
        }
        Ok(Self {
            a,
            b,
            truth,
            noise_variance,
        })
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }
}

/// Eigendecomposition `A^T A = L diag(lambda) L^T`, computed once per
/// problem and reused across the continuation sweep.
#[derive(Debug, Clone)]
pub struct EigenFactorization {
    pub eigenvectors: Array2<f64>,
    pub eigenvalues: Array1<f64>,
}

impl EigenFactorization {
    /// Factor `A^T A` for the given measurement matrix.
    pub fn new(a: &Array2<f64>) -> Result<Self> {
        let gram = a.t().dot(a);
        let (eigenvalues, eigenvectors) = gram.eigh(UPLO::Lower)?;
        // A^T A is positive semidefinite; clip the tiny negative rounding
        // left by the backend so downstream 1/(lambda + 2 eta) stays sane.
        let eigenvalues = eigenvalues.mapv(|v| v.max(0.0));
        Ok(Self {
            eigenvectors,
            eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Frobenius-relative reconstruction error `||L D L^T - A^T A|| / ||A^T A||`.
    pub fn reconstruction_error(&self, a: &Array2<f64>) -> f64 {
        let gram = a.t().dot(a);
        let scaled = &self.eigenvectors * &self.eigenvalues; // columns scaled by lambda
        let rebuilt = scaled.dot(&self.eigenvectors.t());
        let num = (&rebuilt - &gram).mapv(|v| v * v).sum().sqrt();
        let den = gram.mapv(|v| v * v).sum().sqrt();
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(m: usize, n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((m, n), |_| rng.sample(StandardNormal))
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let a = random_matrix(4, 6, 0);
        let b = Array1::zeros(5);
        assert!(Problem::new(a, b).is_err());
    }

    #[test]
    fn rejects_zero_column() {
        let mut a = random_matrix(4, 6, 1);
        a.column_mut(2).fill(0.0);
        let b = Array1::zeros(4);
        assert!(Problem::new(a, b).is_err());
    }

    #[test]
    fn factorization_reconstructs_gram() {
        let a = random_matrix(8, 12, 2);
        let f = EigenFactorization::new(&a).unwrap();
        assert!(f.reconstruction_error(&a) <= 1e-8);
        assert!(f.eigenvalues.iter().all(|v| *v >= 0.0));
    }
}
