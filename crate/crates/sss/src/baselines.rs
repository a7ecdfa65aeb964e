//! Reference reconstruction algorithms used for comparisons: CoSaMP, which
//! needs a caller-supplied sparsity level `k`, and a plain least-squares
//! solver shared by its support solves.

use ndarray::prelude::*;
use ndarray_linalg::LeastSquaresSvd;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::Problem;

/// CoSaMP parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CosampConfig {
    /// Sparsity estimate supplied by the caller.
    pub k: usize,
    pub max_iterations: usize,
    /// Halt once `||b - A x||_2` drops to this level. Use the noise level
    /// sigma for noisy data.
    pub residual_tolerance: f64,
    /// Keep the previous iterate and halt if a step increases the
    /// residual. Stabilizes badly mis-parameterized runs; disable to watch
    /// the unguarded iteration drift.
    pub monotone_guard: bool,
}

impl Default for CosampConfig {
    fn default() -> Self {
        Self {
            k: 0,
            max_iterations: 100,
            residual_tolerance: 1e-6,
            monotone_guard: true,
        }
    }
}

/// Minimum-norm least-squares solution of `A x = b`.
///
/// Rank-deficient and underdetermined systems resolve in the pseudo-inverse
/// sense; this never fails on finite input.
pub fn least_squares(a: ArrayView2<'_, f64>, b: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
    if b.len() != a.nrows() {
        return Err(Error::ShapeMismatch {
            context: "observation length vs matrix rows",
            expected: a.nrows(),
            actual: b.len(),
        });
    }
    let result = a
        .to_owned()
        .least_squares(&b.to_owned())
        .map_err(Error::Linalg)?;
    Ok(result.solution)
}

/// CoSaMP: iterative support identification via the residual proxy,
/// least squares on the merged support, and pruning back to `k` entries.
///
/// Returns the `k`-sparse estimate and the number of iterations run.
pub fn cosamp(problem: &Problem, config: &CosampConfig) -> Result<(Array1<f64>, usize)> {
    let (m, n) = problem.a.dim();
    let k = config.k;
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "sparsity estimate k = {k} exceeds signal dimension n = {n}"
        )));
    }
    if k == 0 {
        return Ok((Array1::zeros(n), 0));
    }
    if 2 * k > m {
        // 2k <= m is the usual operating regime; outside it the merged
        // support solve is underdetermined.
        eprintln!("warning: cosamp called with 2k = {} > m = {m}", 2 * k);
    }

    let a = &problem.a;
    let b = &problem.b;
    let mut x = Array1::<f64>::zeros(n);
    let mut residual = b.clone();
    let mut residual_norm = residual.dot(&residual).sqrt();
    let mut iterations = 0usize;

    while iterations < config.max_iterations && residual_norm > config.residual_tolerance {
        iterations += 1;

        // Identification: 2k largest proxy correlations.
        let proxy = a.t().dot(&residual);
        let mut by_proxy: Vec<usize> = (0..n).collect();
        by_proxy.sort_by(|&i, &j| proxy[j].abs().total_cmp(&proxy[i].abs()).then(i.cmp(&j)));
        let mut merged: Vec<usize> = by_proxy[..(2 * k).min(n)].to_vec();
        merged.extend(x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i));
        merged.sort_unstable();
        merged.dedup();

        // Estimate: least squares restricted to the merged support.
        let sub = restrict_columns(a, &merged);
        let coeffs = least_squares(sub.view(), b.view())?;

        // Prune: keep the k largest coefficients.
        let mut by_mag: Vec<usize> = (0..merged.len()).collect();
        by_mag.sort_by(|&i, &j| coeffs[j].abs().total_cmp(&coeffs[i].abs()).then(i.cmp(&j)));
        let mut x_next = Array1::<f64>::zeros(n);
        for &local in by_mag.iter().take(k) {
            x_next[merged[local]] = coeffs[local];
        }

        let residual_next = b - &a.dot(&x_next);
        let norm_next = residual_next.dot(&residual_next).sqrt();
        if !norm_next.is_finite() {
            return Err(Error::Numeric(format!(
                "cosamp residual diverged at iteration {iterations}"
            )));
        }
        if config.monotone_guard && norm_next > residual_norm {
            break;
        }
        x = x_next;
        residual = residual_next;
        residual_norm = norm_next;
    }

    Ok((x, iterations))
}

fn restrict_columns(a: &Array2<f64>, columns: &[usize]) -> Array2<f64> {
    let m = a.nrows();
    let mut sub = Array2::zeros((m, columns.len()));
    for (dst, &src) in columns.iter().enumerate() {
        sub.column_mut(dst).assign(&a.column(src));
    }
    sub
}
