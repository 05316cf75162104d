//! Mean/covariance estimation and symmetric whitening.
//!
//! Whitening maps the observed series to `U_t = C^{-1/2} (X_t - mean)`
//! with the symmetric (eigen-based) inverse square root of the sample
//! covariance. In whitened space the unit sphere corresponds to
//! unit-variance combinations, which is the geometry the component search
//! relies on; a Cholesky whitener would not be orthogonally equivariant.
//! The covariance uses denominator `T` (not `T - 1`): the factor cancels
//! in the whiten/unwhiten round trip and matches the `1/T` autocovariance
//! convention elsewhere in the crate.

use crate::error::{Error, Result};
use crate::linalg::{inv_sqrt_from_eigen, Mat, SymmetricMatrix};
use crate::series::TimeSeriesMatrix;

/// Default reciprocal condition number below which the covariance is
/// treated as singular.
pub const DEFAULT_RCOND_TOL: f64 = 1e-12;

/// Relative variance below which a column counts as near-constant when
/// diagnosing a singular covariance.
const NEAR_CONSTANT_REL_VAR: f64 = 1e-12;

/// Sample mean and covariance `C = (1/T) (X - mean)^T (X - mean)`.
/// Well-defined for any `T >= 2`; note the covariance has rank at most
/// `T - 1`, so whitening additionally needs `T >= n + 1` (checked by
/// [`fit_whitener`]).
pub fn estimate_mean_cov(x: &TimeSeriesMatrix) -> Result<(Vec<f64>, SymmetricMatrix)> {
    let t = x.len();
    let n = x.n_channels();
    if t < 2 {
        return Err(Error::TooShort { needed: 2, got: t });
    }
    let data = x.data();
    let inv_t = 1.0 / t as f64;
    let mut mean = vec![0.0; n];
    for r in 0..t {
        for (m, &v) in mean.iter_mut().zip(data.row(r)) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m *= inv_t;
    }
    let mut cov = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = 0.0;
            for r in 0..t {
                acc += (data.get(r, i) - mean[i]) * (data.get(r, j) - mean[j]);
            }
            cov.set(i, j, acc * inv_t);
        }
    }
    Ok((mean, cov))
}

/// A fitted whitener: mean, covariance, and its symmetric inverse square
/// root. `inv_sqrt_cov * covariance * inv_sqrt_cov = I` within 1e-8 and
/// `rcond >= 1e-12` hold by construction and are re-validated by
/// [`WhiteningTransform::from_parts`].
#[derive(Clone, Debug)]
pub struct WhiteningTransform {
    mean: Vec<f64>,
    covariance: SymmetricMatrix,
    inv_sqrt_cov: SymmetricMatrix,
    rcond: f64,
}

impl WhiteningTransform {
    /// Rebuilds a transform from stored parts (e.g. a deserialized model),
    /// re-validating the algebraic invariant between the parts.
    pub fn from_parts(
        mean: Vec<f64>,
        covariance: SymmetricMatrix,
        inv_sqrt_cov: SymmetricMatrix,
        rcond: f64,
    ) -> Result<Self> {
        let n = mean.len();
        if covariance.dim() != n || inv_sqrt_cov.dim() != n {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "whitener parts disagree: mean {n}, covariance {}, inverse root {}",
                    covariance.dim(),
                    inv_sqrt_cov.dim()
                ),
            });
        }
        if !mean.iter().all(|v| v.is_finite()) || !rcond.is_finite() {
            return Err(Error::NonFinite {
                location: "whitening transform parts".into(),
            });
        }
        let r = inv_sqrt_cov.to_dense();
        let product = r
            .matmul(&covariance.to_dense())?
            .matmul(&r)?;
        let mut max_dev = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 };
                max_dev = max_dev.max((product.get(i, j) - expect).abs());
            }
        }
        if max_dev > 1e-8 {
            return Err(Error::InvalidParameter {
                name: "inv_sqrt_cov",
                message: format!(
                    "inverse square root does not invert the covariance (max deviation {max_dev:.3e})"
                ),
            });
        }
        Ok(WhiteningTransform {
            mean,
            covariance,
            inv_sqrt_cov,
            rcond,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &SymmetricMatrix {
        &self.covariance
    }

    pub fn inv_sqrt_cov(&self) -> &SymmetricMatrix {
        &self.inv_sqrt_cov
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    /// `U = (X - mean) * inv_sqrt_cov`, keeping the column names.
    pub fn whiten(&self, x: &TimeSeriesMatrix) -> Result<TimeSeriesMatrix> {
        let n = self.dim();
        if x.n_channels() != n {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "whitener of dimension {n} applied to {}-channel series",
                    x.n_channels()
                ),
            });
        }
        let centered = Mat::from_fn(x.len(), n, |r, c| x.data().get(r, c) - self.mean[c]);
        let u = centered.matmul(&self.inv_sqrt_cov.to_dense())?;
        TimeSeriesMatrix::from_mat(u, Some(x.column_names().to_vec()))
    }

    /// Maps whitened-space loadings (rows of `w_u`, one per component)
    /// back to original space: `W_X = W_U * inv_sqrt_cov`, so that
    /// `W_X (X - mean)^T = W_U U^T`.
    pub fn unwhiten_loadings(&self, w_u: &Mat) -> Result<Mat> {
        if w_u.cols() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "loadings have {} columns, whitener dimension is {}",
                    w_u.cols(),
                    self.dim()
                ),
            });
        }
        w_u.matmul(&self.inv_sqrt_cov.to_dense())
    }
}

/// Columns implicated in a singular covariance: near-constant ones
/// (variance tiny relative to the largest), otherwise the members of the
/// collinear group read off the null-space eigenvector.
fn suspicious_columns(cov: &SymmetricMatrix, null_vector: &[f64]) -> Vec<usize> {
    let n = cov.dim();
    let max_var = (0..n).map(|i| cov.get(i, i)).fold(0.0f64, f64::max);
    let near_constant: Vec<usize> = (0..n)
        .filter(|&i| cov.get(i, i) <= NEAR_CONSTANT_REL_VAR * max_var.max(f64::MIN_POSITIVE))
        .collect();
    if !near_constant.is_empty() || max_var == 0.0 {
        if max_var == 0.0 {
            return (0..n).collect();
        }
        return near_constant;
    }
    let max_entry = null_vector.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (0..n)
        .filter(|&i| null_vector[i].abs() >= 0.5 * max_entry)
        .collect()
}

/// Estimates mean and covariance and builds the symmetric whitener.
/// Fails with the implicated columns when the covariance is singular at
/// `rcond_tol` (near-constant or collinear inputs).
pub fn fit_whitener(x: &TimeSeriesMatrix, rcond_tol: f64) -> Result<WhiteningTransform> {
    let t = x.len();
    let n = x.n_channels();
    if t <= n {
        return Err(Error::UnderDetermined { t, n });
    }
    let (mean, covariance) = estimate_mean_cov(x)?;
    let dec = covariance.eigen()?;
    let lam_min = dec.eigenvalues[0];
    let lam_max = *dec.eigenvalues.last().unwrap();
    let rcond = if lam_max > 0.0 { lam_min / lam_max } else { 0.0 };
    if !(lam_min > 0.0) || rcond < rcond_tol {
        let columns = suspicious_columns(&covariance, &dec.vectors.column(0));
        return Err(Error::SingularCovariance {
            eigenvalue: lam_min,
            rcond,
            columns,
        });
    }
    let inv_sqrt_cov = inv_sqrt_from_eigen(&dec);
    Ok(WhiteningTransform {
        mean,
        covariance,
        inv_sqrt_cov,
        rcond,
    })
}
