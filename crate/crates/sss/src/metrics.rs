//! Sparsity measures and the log-surrogate cost with analytic derivatives.
//!
//! The norm-ratio `s(x) = ||x||_1^2 / ||x||_2^2` is a stable lower bound on
//! the number of nonzeros: `1 <= s(x) <= ||x||_0 <= n`. The surrogate cost
//!
//! ```text
//! f(x) = -sum_i log x_i^2 + log ||x||_2^2
//! ```
//!
//! is the quantity the solver drives down on the selected support. Its
//! Hessian is positive definite on the positive orthant, which the test
//! suite checks both analytically and by finite differences.
//!
//! All functions here are pure; they are safe to call concurrently.

use ndarray::prelude::*;

use crate::error::{Error, Result};

/// Hessian of the surrogate cost at a point, together with the squared
/// norm `S2 = sum x_i^2` it was built from.
#[derive(Debug, Clone)]
pub struct Hessian {
    pub entries: Array2<f64>,
    pub s2: f64,
}

fn check_no_zeros(x: ArrayView1<'_, f64>) -> Result<()> {
    if let Some(index) = x.iter().position(|v| *v == 0.0) {
        return Err(Error::UndefinedAtZero { index });
    }
    Ok(())
}

/// Norm-ratio sparsity measure `||x||_1^2 / ||x||_2^2`.
///
/// Returns [`Error::AllZeroSignal`] for the all-zero vector, where the
/// ratio is 0/0.
pub fn sparsity_ratio(x: ArrayView1<'_, f64>) -> Result<f64> {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    let l2sq: f64 = x.iter().map(|v| v * v).sum();
    if l2sq == 0.0 {
        return Err(Error::AllZeroSignal);
    }
    Ok(l1 * l1 / l2sq)
}

/// Surrogate cost `f(x) = -sum_i log x_i^2 + log ||x||_2^2`.
///
/// Undefined when any entry is exactly zero.
pub fn surrogate_cost(x: ArrayView1<'_, f64>) -> Result<f64> {
    check_no_zeros(x)?;
    let s2: f64 = x.iter().map(|v| v * v).sum();
    let log_sum: f64 = x.iter().map(|v| (v * v).ln()).sum();
    Ok(-log_sum + s2.ln())
}

/// Gradient of the surrogate cost: component `i` is `-2/x_i + 2 x_i / S2`.
pub fn surrogate_gradient(x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    check_no_zeros(x)?;
    let s2: f64 = x.iter().map(|v| v * v).sum();
    Ok(x.mapv(|v| -2.0 / v + 2.0 * v / s2))
}

/// Hessian of the surrogate cost.
///
/// Diagonal: `h_ii = 2 (S2 - x_i^2)(2 x_i^2 + S2) / (x_i^2 S2^2)`.
/// Off-diagonal: `h_ij = -4 x_i x_j / S2^2`.
pub fn surrogate_hessian(x: ArrayView1<'_, f64>) -> Result<Hessian> {
    check_no_zeros(x)?;
    let n = x.len();
    let s2: f64 = x.iter().map(|v| v * v).sum();
    let s2sq = s2 * s2;
    let mut entries = Array2::zeros((n, n));
    for i in 0..n {
        let xi2 = x[i] * x[i];
        entries[[i, i]] = 2.0 * (s2 - xi2) * (2.0 * xi2 + s2) / (xi2 * s2sq);
        for j in (i + 1)..n {
            let v = -4.0 * x[i] * x[j] / s2sq;
            entries[[i, j]] = v;
            entries[[j, i]] = v;
        }
    }
    Ok(Hessian { entries, s2 })
}

/// Quadratic form `y^T H y`.
pub fn quadratic_form(h: &Hessian, y: ArrayView1<'_, f64>) -> Result<f64> {
    let n = h.entries.nrows();
    if y.len() != n {
        return Err(Error::ShapeMismatch {
            context: "quadratic form direction",
            expected: n,
            actual: y.len(),
        });
    }
    Ok(y.dot(&h.entries.dot(&y)))
}
