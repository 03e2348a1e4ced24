//! Dense helpers shared by the solvers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Cholesky factor of `base + noise_var * I`. On failure retries once with
/// the noise variance inflated tenfold. Returns the factor and whether the
/// retry was needed.
pub(crate) fn factor_with_retry(
    base: &DMatrix<f64>,
    noise_var: f64,
    context: Option<usize>,
) -> Result<(Cholesky<f64, Dyn>, bool)> {
    let n = base.nrows();
    let mut m = base.clone();
    for i in 0..n {
        m[(i, i)] += noise_var;
    }
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok((c, false));
    }
    // A zero noise variance has nothing to inflate; fall back to a jitter
    // proportional to the matrix scale.
    let bump = if noise_var > 0.0 {
        9.0 * noise_var
    } else {
        1e-10 * (base.trace().abs() / n.max(1) as f64).max(f64::MIN_POSITIVE)
    };
    for i in 0..n {
        m[(i, i)] += bump;
    }
    Cholesky::new(m).map(|c| (c, true)).ok_or_else(|| {
        Error::conditioning(
            context,
            "covariance of the measurements is not positive definite",
        )
    })
}

/// Solves `L X = B` for lower-triangular `L`, one panel of rows at a time
/// so the bulk of the work is matrix products. `None` on a zero pivot.
pub(crate) fn lower_solve(l: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    const PANEL: usize = 32;
    let n = l.nrows();
    let cols = b.ncols();
    let mut x = b.clone();
    let mut head = DMatrix::zeros(PANEL, cols);
    let mut k = 0;
    while k < n {
        let w = PANEL.min(n - k);
        let mut diag_inv = DMatrix::identity(w, w);
        if !l
            .view((k, k), (w, w))
            .solve_lower_triangular_mut(&mut diag_inv)
        {
            return None;
        }
        let mut head = head.rows_mut(0, w);
        head.gemm(1.0, &diag_inv, &x.rows(k, w), 0.0);
        x.rows_mut(k, w).copy_from(&head);
        if k + w < n {
            let below = l.view((k + w, k), (n - k - w, w));
            x.rows_mut(k + w, n - k - w).gemm(-1.0, &below, &head, 1.0);
        }
        k += w;
    }
    Some(x)
}

/// `r^{|i-j|}` Toeplitz matrix of size `d`.
pub(crate) fn ar1_toeplitz(d: usize, r: f64) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| r.powi(i.abs_diff(j) as i32))
}

/// Projects a symmetric correlation estimate onto unit-diagonal AR(1)
/// Toeplitz form. The coefficient is the mean first superdiagonal over the
/// mean diagonal, clamped to `[-0.99, 0.99]`.
pub(crate) fn ar1_regularize(est: &DMatrix<f64>) -> DMatrix<f64> {
    let d = est.nrows();
    ar1_toeplitz(d, ar1_coefficient(est))
}

pub(crate) fn ar1_coefficient(est: &DMatrix<f64>) -> f64 {
    let d = est.nrows();
    if d < 2 {
        return 0.0;
    }
    let m0 = est.diagonal().mean();
    let m1 = (0..d - 1).map(|i| est[(i, i + 1)]).sum::<f64>() / (d - 1) as f64;
    let r = m1 / m0;
    if m0 > 0.0 && r.is_finite() {
        r.clamp(-0.99, 0.99)
    } else {
        0.0
    }
}

/// Symmetric square root and inverse square root of a positive-definite
/// matrix.
pub(crate) fn sqrt_and_inv_sqrt(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::conditioning(
            None,
            "correlation matrix is not positive definite",
        ));
    }
    let v = &eig.eigenvectors;
    let s = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let si = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok((v * s * v.transpose(), v * si * v.transpose()))
}

pub(crate) fn inverse_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Cholesky::new(m.clone())
        .map(|c| c.inverse())
        .ok_or_else(|| Error::conditioning(None, "matrix is not positive definite"))
}

/// Copies the listed columns of `a` into a new matrix.
pub(crate) fn select_columns(a: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), cols.len());
    for (k, &j) in cols.iter().enumerate() {
        out.column_mut(k).copy_from(&a.column(j));
    }
    out
}

/// Least squares on a tall (or square) full-column-rank matrix via QR.
/// Rank deficiency is a conditioning error.
pub(crate) fn full_rank_least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, k) = a.shape();
    if k == 0 {
        return Ok(DVector::zeros(0));
    }
    if k > n {
        return Err(Error::conditioning(
            None,
            format!("{k} columns cannot have full rank with {n} rows"),
        ));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let scale = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let tiny = scale * 1e-12 * n.max(k) as f64;
    if scale == 0.0 || (0..k).any(|i| r[(i, i)].abs() <= tiny) {
        return Err(Error::conditioning(
            None,
            "selected columns are rank deficient",
        ));
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
        .ok_or_else(|| Error::conditioning(None, "triangular solve failed"))
}

/// Minimum-norm least squares through the SVD.
pub(crate) fn min_norm_least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12 * a.nrows().max(a.ncols()) as f64;
    svd.solve(y, eps)
        .map_err(|e| Error::conditioning(None, e.to_string()))
}
