//! The three per-iteration operations of the continuation loop: the ridge
//! solve for `x`, the soft support-size selection, and the scaling of the
//! sorted magnitudes into the auxiliary vector `c`.

use ndarray::prelude::*;
use ndarray_linalg::Solve;

use super::problem::EigenFactorization;
use crate::error::{Error, Result};

/// Ridge update `x = (A^T A + 2 eta I)^{-1} (A^T b + 2 eta c)` via a dense
/// direct solve. Kept as the validation path; the continuation loop uses
/// [`x_update_fast`] against a cached factorization.
pub fn x_update(
    a: ArrayView2<'_, f64>,
    b: ArrayView1<'_, f64>,
    c: ArrayView1<'_, f64>,
    eta: f64,
) -> Result<Array1<f64>> {
    if eta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let n = a.ncols();
    if c.len() != n {
        return Err(Error::ShapeMismatch {
            context: "auxiliary vector length vs matrix columns",
            expected: n,
            actual: c.len(),
        });
    }
    let mut lhs = a.t().dot(&a);
    for i in 0..n {
        lhs[[i, i]] += 2.0 * eta;
    }
    let rhs = a.t().dot(&b) + c.mapv(|v| 2.0 * eta * v);
    Ok(lhs.solve_into(rhs)?)
}

/// Ridge update through the cached eigendecomposition of `A^T A`:
/// `x = L (Lambda + 2 eta I)^{-1} L^T (A^T b + 2 eta c)`.
pub fn x_update_fast(
    factorization: &EigenFactorization,
    a: ArrayView2<'_, f64>,
    b: ArrayView1<'_, f64>,
    c: ArrayView1<'_, f64>,
    eta: f64,
) -> Result<Array1<f64>> {
    if eta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let n = a.ncols();
    if factorization.dim() != n {
        return Err(Error::ShapeMismatch {
            context: "factorization dimension vs matrix columns",
            expected: n,
            actual: factorization.dim(),
        });
    }
    if c.len() != n {
        return Err(Error::ShapeMismatch {
            context: "auxiliary vector length vs matrix columns",
            expected: n,
            actual: c.len(),
        });
    }
    let rhs = a.t().dot(&b) + c.mapv(|v| 2.0 * eta * v);
    let mut w = factorization.eigenvectors.t().dot(&rhs);
    ndarray::Zip::from(&mut w)
        .and(&factorization.eigenvalues)
        .for_each(|wi, lam| *wi /= lam + 2.0 * eta);
    Ok(factorization.eigenvectors.dot(&w))
}

/// Soft support-size estimate before rounding: `1 + c^T A^T (A x - b) / 2`.
pub fn select_rho_raw(
    a: ArrayView2<'_, f64>,
    b: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    c: ArrayView1<'_, f64>,
) -> Result<f64> {
    let residual = a.dot(&x) - &b;
    let correlation = a.t().dot(&residual);
    let raw = 1.0 + c.dot(&correlation) / 2.0;
    if !raw.is_finite() {
        return Err(Error::Numeric(format!(
            "support-size estimate is not finite ({raw})"
        )));
    }
    Ok(raw)
}

/// Soft support-size selection: round the raw estimate to the nearest
/// integer and clamp into `[1, n]`.
pub fn select_rho(
    a: ArrayView2<'_, f64>,
    b: ArrayView1<'_, f64>,
    x: ArrayView1<'_, f64>,
    c: ArrayView1<'_, f64>,
) -> Result<usize> {
    let raw = select_rho_raw(a, b, x, c)?;
    Ok(clamp_rho(raw, a.ncols()))
}

/// Rounding and clamping shared by [`select_rho`] and the solve loop.
pub(crate) fn clamp_rho(raw: f64, n: usize) -> usize {
    let rounded = raw.round();
    if rounded < 1.0 {
        1
    } else if rounded >= n as f64 {
        n
    } else {
        rounded as usize
    }
}

/// Magnitude-sorted view of a signal: descending magnitudes, the map from
/// sorted positions back to original indices, and the per-index signs.
#[derive(Debug, Clone)]
pub struct SortedSignal {
    /// `|x|` sorted in descending order.
    pub magnitudes: Array1<f64>,
    /// `order[j]` is the original index of the `j`-th largest magnitude.
    /// Ties break toward the lower original index, so runs are deterministic.
    pub order: Vec<usize>,
    /// `sign(x_i)` per original index, with `sign(0) = 0`.
    pub signs: Array1<f64>,
}

fn sign_of(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Sort magnitudes in descending order, remembering the permutation and
/// signs needed to undo the rearrangement.
pub fn sort_magnitudes(x: ArrayView1<'_, f64>) -> SortedSignal {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)));
    let magnitudes = Array1::from_iter(order.iter().map(|&i| x[i].abs()));
    let signs = x.mapv(sign_of);
    SortedSignal {
        magnitudes,
        order,
        signs,
    }
}

/// Per-component scaling of the top `rho` sorted magnitudes:
/// `c_1 = x_1` exactly, and for `2 <= i <= rho`
///
/// ```text
/// c_i = x_i (1 + sqrt(1 + 4 / (eta x_i^2))) / 2,
/// ```
///
/// the positive root of `c (c - x_i) = 1/eta`. Entries beyond `rho` and
/// entries with zero magnitude stay zero.
pub fn scale_c_per_component(
    sorted_x: ArrayView1<'_, f64>,
    rho: usize,
    eta: f64,
) -> Result<Array1<f64>> {
    validate_scale_args(sorted_x.len(), rho, eta)?;
    let mut c = Array1::zeros(sorted_x.len());
    for i in 0..rho {
        let xi = sorted_x[i];
        if xi <= 0.0 {
            continue;
        }
        c[i] = if i == 0 {
            xi
        } else {
            xi * (1.0 + (1.0 + 4.0 / (eta * xi * xi)).sqrt()) / 2.0
        };
    }
    Ok(c)
}

/// Hypersphere scaling: a uniform stretch `c = alpha x` of the top `rho`
/// magnitudes with
///
/// ```text
/// alpha = 1/2 + sqrt(1/4 + (rho - 1) / (eta ||x||^2)),
/// ```
///
/// which places `c` on the sphere `||c - x/2||^2 = (rho-1)/eta + ||x||^2/4`
/// along the ray through `x`.
pub fn scale_c_hypersphere(
    sorted_x: ArrayView1<'_, f64>,
    rho: usize,
    eta: f64,
) -> Result<Array1<f64>> {
    validate_scale_args(sorted_x.len(), rho, eta)?;
    let support_norm_sq: f64 = sorted_x.iter().take(rho).map(|v| v * v).sum();
    if support_norm_sq == 0.0 {
        return Err(Error::DegenerateSupport);
    }
    let alpha = 0.5 + (0.25 + (rho as f64 - 1.0) / (eta * support_norm_sq)).sqrt();
    let mut c = Array1::zeros(sorted_x.len());
    for i in 0..rho {
        c[i] = alpha * sorted_x[i];
    }
    Ok(c)
}

fn validate_scale_args(len: usize, rho: usize, eta: f64) -> Result<()> {
    if rho < 1 || rho > len {
        return Err(Error::InvalidArgument(format!(
            "rho = {rho} out of range [1, {len}]"
        )));
    }
    if eta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eta must be positive, got {eta}"
        )));
    }
    Ok(())
}

/// Undo the sort: scatter the scaled sorted values back to their original
/// positions and reapply the signs.
pub fn restore_c(scaled: ArrayView1<'_, f64>, sorted: &SortedSignal) -> Result<Array1<f64>> {
    let n = sorted.order.len();
    if scaled.len() != n {
        return Err(Error::ShapeMismatch {
            context: "scaled vector length vs permutation length",
            expected: n,
            actual: scaled.len(),
        });
    }
    let mut c = Array1::zeros(n);
    for (pos, &idx) in sorted.order.iter().enumerate() {
        c[idx] = scaled[pos] * sorted.signs[idx];
    }
    Ok(c)
}
