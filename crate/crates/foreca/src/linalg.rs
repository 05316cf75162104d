//! Dense matrices and the symmetric eigenroutines the estimators are built on.
//!
//! Everything here is deterministic: the Jacobi solver sweeps pivots in a
//! fixed cyclic order and eigenvector signs follow a fixed convention
//! (largest-magnitude entry positive, ties broken by lowest index), so
//! repeated runs produce bitwise identical output. Symmetric matrices store
//! one triangle, which makes exact symmetry a structural property instead of
//! a numerical hope.

use crate::error::{Error, Result};

/// Cyclic Jacobi sweep limit. Quadratic convergence makes this generous;
/// hitting it is reported as an error rather than silently returning junk.
const MAX_JACOBI_SWEEPS: usize = 100;

/// Absolute off-diagonal tolerance for the Jacobi iteration, applied after
/// the matrix is prescaled to unit magnitude.
const JACOBI_OFF_DIAG_TOL: f64 = 1e-12;

/// Orthonormality tolerance for complement-basis inputs.
const ORTHONORMAL_TOL: f64 = 1e-10;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dense row-major matrix. Small, allocation-friendly, no SIMD pretensions;
/// the sizes in this crate are channel counts, not image planes.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "matrix needs at least one row".into(),
            });
        }
        let cols = rows[0].len();
        if cols == 0 {
            return Err(Error::DimensionMismatch {
                context: "matrix needs at least one column".into(),
            });
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "row {} has {} entries, expected {}",
                        i,
                        r.len(),
                        cols
                    ),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Mat {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "cannot multiply {}x{} by {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0.0;
                for k in 0..self.cols {
                    acc += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// `self * other^T`; avoids materializing the transpose.
    pub fn matmul_nt(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "cannot multiply {}x{} by transposed {}x{}",
                    self.rows, self.cols, other.rows, other.cols
                ),
            });
        }
        let mut out = Mat::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                out.set(i, j, dot(self.row(i), other.row(j)));
            }
        }
        Ok(out)
    }

    pub fn transposed(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }
}

/// Symmetric matrix stored as a packed lower triangle, so `a[i][j]` and
/// `a[j][i]` are the same memory and symmetry cannot drift.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    tri: Vec<f64>,
}

#[inline]
fn tri_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

#[inline]
fn tri_idx(i: usize, j: usize) -> usize {
    // caller guarantees i >= j
    i * (i + 1) / 2 + j
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            tri: vec![0.0; tri_len(dim)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SymmetricMatrix::zeros(dim);
        for i in 0..dim {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = SymmetricMatrix::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from a function evaluated once per lower-triangle entry
    /// (`i >= j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymmetricMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Accepts a dense square matrix that is symmetric up to `tol` in
    /// absolute terms and packs its lower triangle.
    pub fn from_dense(m: &Mat, tol: f64) -> Result<Self> {
        if m.rows() != m.cols() {
            return Err(Error::DimensionMismatch {
                context: format!("expected square matrix, got {}x{}", m.rows(), m.cols()),
            });
        }
        for i in 0..m.rows() {
            for j in 0..i {
                let dev = (m.get(i, j) - m.get(j, i)).abs();
                if dev > tol {
                    return Err(Error::DimensionMismatch {
                        context: format!(
                            "matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {dev:.3e}"
                        ),
                    });
                }
            }
        }
        Ok(SymmetricMatrix::from_fn(m.rows(), |i, j| m.get(i, j)))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, tol: f64) -> Result<Self> {
        SymmetricMatrix::from_dense(&Mat::from_rows(rows)?, tol)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        self.tri[tri_idx(a, b)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (a, b) = if i >= j { (i, j) } else { (j, i) };
        self.tri[tri_idx(a, b)] = v;
    }

    pub(crate) fn packed(&self) -> &[f64] {
        &self.tri
    }

    pub(crate) fn packed_mut(&mut self) -> &mut [f64] {
        &mut self.tri
    }

    pub fn is_finite(&self) -> bool {
        self.tri.iter().all(|v| v.is_finite())
    }

    pub fn to_dense(&self) -> Mat {
        Mat::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.to_dense().to_rows()
    }

    /// `self += factor * other`, entry by entry on the shared triangle.
    pub fn add_scaled(&mut self, other: &SymmetricMatrix, factor: f64) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.tri.iter_mut().zip(&other.tri) {
            *a += factor * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in self.tri.iter_mut() {
            *a *= factor;
        }
    }

    /// Quadratic form `w^T A w`, evaluated on the packed triangle in a fixed
    /// order: diagonal terms plus doubled off-diagonal terms.
    pub fn qform(&self, w: &[f64]) -> Result<f64> {
        if w.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "quadratic form: vector length {} does not match dimension {}",
                    w.len(),
                    self.dim
                ),
            });
        }
        let mut acc = 0.0;
        for i in 0..self.dim {
            let wi = w[i];
            acc += wi * wi * self.get(i, i);
            let mut off = 0.0;
            for j in 0..i {
                off += w[j] * self.get(i, j);
            }
            acc += 2.0 * wi * off;
        }
        Ok(acc)
    }

    /// Congruence `B^T A B` for `B` with `dim` rows. Each output entry is
    /// computed once, so the result is exactly symmetric.
    pub fn congruence(&self, b: &Mat) -> Result<SymmetricMatrix> {
        if b.rows() != self.dim {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "congruence: basis has {} rows, matrix has dimension {}",
                    b.rows(),
                    self.dim
                ),
            });
        }
        let m = b.cols();
        // tmp = A * B
        let mut tmp = Mat::zeros(self.dim, m);
        for i in 0..self.dim {
            for c in 0..m {
                let mut acc = 0.0;
                for j in 0..self.dim {
                    acc += self.get(i, j) * b.get(j, c);
                }
                tmp.set(i, c, acc);
            }
        }
        let mut out = SymmetricMatrix::zeros(m);
        for r in 0..m {
            for c in 0..=r {
                let mut acc = 0.0;
                for i in 0..self.dim {
                    acc += b.get(i, r) * tmp.get(i, c);
                }
                out.set(r, c, acc);
            }
        }
        Ok(out)
    }

    /// Full eigendecomposition by cyclic Jacobi rotations.
    ///
    /// The matrix is prescaled by a power of two (exact in floating point)
    /// so the absolute off-diagonal tolerance is meaningful at any input
    /// scale. Eigenvalues come back ascending; eigenvector columns follow
    /// the sign convention that their largest-magnitude entry is positive.
    pub fn eigen(&self) -> Result<EigenDecomposition> {
        if !self.is_finite() {
            return Err(Error::NonFinite {
                location: "symmetric matrix for eigendecomposition".into(),
            });
        }
        let n = self.dim;
        if n == 0 {
            return Err(Error::DimensionMismatch {
                context: "eigendecomposition of an empty matrix".into(),
            });
        }

        let max_abs = self.tri.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // Prescale so max |entry| lands in (0.5, 1]; powers of two are exact.
        let scale = if max_abs > 0.0 {
            f64::exp2(max_abs.log2().ceil())
        } else {
            1.0
        };
        let inv_scale = 1.0 / scale;

        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = self.get(i, j) * inv_scale;
            }
        }
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }

        let mut converged = n < 2;
        let mut last_off = 0.0;
        for _sweep in 0..MAX_JACOBI_SWEEPS {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a[p * n + q].abs());
                }
            }
            last_off = off;
            if off <= JACOBI_OFF_DIAG_TOL {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq.abs() <= JACOBI_OFF_DIAG_TOL {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = {
                        let denom = theta.abs() + (theta * theta + 1.0).sqrt();
                        if theta >= 0.0 {
                            1.0 / denom
                        } else {
                            -1.0 / denom
                        }
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);

                    a[p * n + p] -= t * apq;
                    a[q * n + q] += t * apq;
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    for i in 0..n {
                        if i == p || i == q {
                            continue;
                        }
                        let aip = a[i * n + p];
                        let aiq = a[i * n + q];
                        let new_p = aip - s * (aiq + tau * aip);
                        let new_q = aiq + s * (aip - tau * aiq);
                        a[i * n + p] = new_p;
                        a[p * n + i] = new_p;
                        a[i * n + q] = new_q;
                        a[q * n + i] = new_q;
                    }
                    for i in 0..n {
                        let vip = v[i * n + p];
                        let viq = v[i * n + q];
                        v[i * n + p] = vip - s * (viq + tau * vip);
                        v[i * n + q] = viq + s * (vip - tau * viq);
                    }
                }
            }
        }
        if !converged {
            return Err(Error::EigenDidNotConverge {
                sweeps: MAX_JACOBI_SWEEPS,
                off_diag: last_off * scale,
            });
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            a[i * n + i]
                .partial_cmp(&a[j * n + j])
                .expect("eigenvalues are finite")
                .then(i.cmp(&j))
        });

        let mut eigenvalues = Vec::with_capacity(n);
        let mut vectors = Mat::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            eigenvalues.push(a[src * n + src] * scale);
            // Normalize defensively; Jacobi keeps columns orthonormal to
            // machine precision anyway.
            let mut nrm = 0.0;
            for i in 0..n {
                nrm += v[i * n + src] * v[i * n + src];
            }
            let nrm = nrm.sqrt();
            let inv = if nrm > 0.0 { 1.0 / nrm } else { 1.0 };
            // Sign convention: largest-magnitude entry positive, ties broken
            // by lowest index.
            let mut pivot = 0;
            let mut best = -1.0;
            for i in 0..n {
                let mag = (v[i * n + src] * inv).abs();
                if mag > best {
                    best = mag;
                    pivot = i;
                }
            }
            let flip = if v[pivot * n + src] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..n {
                vectors.set(i, col, v[i * n + src] * inv * flip);
            }
        }

        Ok(EigenDecomposition {
            eigenvalues,
            vectors,
        })
    }

    /// Smallest eigenvalue and its (unit, sign-fixed) eigenvector.
    pub fn min_eigpair(&self) -> Result<(f64, Vec<f64>)> {
        let dec = self.eigen()?;
        Ok((dec.eigenvalues[0], dec.vectors.column(0)))
    }

    /// Symmetric inverse square root `A^{-1/2}` of a positive definite
    /// matrix, via the eigendecomposition. Rejects matrices whose
    /// reciprocal condition number falls below `rcond_tol`, naming the
    /// offending eigenvalue.
    pub fn inv_sqrt(&self, rcond_tol: f64) -> Result<SymmetricMatrix> {
        let dec = self.eigen()?;
        let lam_min = dec.eigenvalues[0];
        let lam_max = dec.eigenvalues[self.dim - 1];
        let rcond = if lam_max > 0.0 { lam_min / lam_max } else { 0.0 };
        if !(lam_max > 0.0) || rcond < rcond_tol {
            return Err(Error::IllConditioned {
                eigenvalue: lam_min,
                rcond,
                rcond_tol,
            });
        }
        Ok(inv_sqrt_from_eigen(&dec))
    }
}

/// `V diag(1/sqrt(lambda)) V^T` assembled one triangle entry at a time.
pub(crate) fn inv_sqrt_from_eigen(dec: &EigenDecomposition) -> SymmetricMatrix {
    let n = dec.eigenvalues.len();
    let inv_roots: Vec<f64> = dec.eigenvalues.iter().map(|l| 1.0 / l.sqrt()).collect();
    SymmetricMatrix::from_fn(n, |i, j| {
        let mut acc = 0.0;
        for k in 0..n {
            acc += dec.vectors.get(i, k) * dec.vectors.get(j, k) * inv_roots[k];
        }
        acc
    })
}

/// Eigenvalues ascending; `vectors` holds the matching eigenvectors as
/// columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub vectors: Mat,
}

/// Orthonormal basis of the orthogonal complement of the column span of `w`
/// (an `n x k` matrix with orthonormal columns, `1 <= k < n`).
///
/// Built from Householder reflections in fixed column order, then sign-fixed
/// per column (largest-magnitude entry positive), so the basis is a
/// deterministic function of the input.
pub fn orthonormal_complement(w: &Mat) -> Result<Mat> {
    let n = w.rows();
    let k = w.cols();
    if k == 0 || k >= n {
        return Err(Error::DimensionMismatch {
            context: format!("complement of {k} column(s) in dimension {n} is not defined"),
        });
    }
    if !w.is_finite() {
        return Err(Error::NonFinite {
            location: "basis for orthonormal complement".into(),
        });
    }
    let mut max_dev = 0.0f64;
    for a in 0..k {
        for b in 0..=a {
            let g = dot(&w.column(a), &w.column(b));
            let expect = if a == b { 1.0 } else { 0.0 };
            max_dev = max_dev.max((g - expect).abs());
        }
    }
    if max_dev > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal {
            max_dev,
            tol: ORTHONORMAL_TOL,
        });
    }

    // Householder QR of w; reflections are accumulated and later applied to
    // the trailing identity columns to read off the complement.
    let mut work = w.clone();
    let mut reflectors: Vec<(usize, Vec<f64>, f64)> = Vec::with_capacity(k);
    for j in 0..k {
        let mut x: Vec<f64> = (j..n).map(|i| work.get(i, j)).collect();
        let xnorm = norm(&x);
        if xnorm < 1e-12 {
            return Err(Error::NotOrthonormal {
                max_dev: 1.0,
                tol: ORTHONORMAL_TOL,
            });
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        x[0] -= alpha;
        let vnorm2 = dot(&x, &x);
        let beta = if vnorm2 > 0.0 { 2.0 / vnorm2 } else { 0.0 };
        for c in (j + 1)..k {
            let mut d = 0.0;
            for i in j..n {
                d += x[i - j] * work.get(i, c);
            }
            let d = beta * d;
            for i in j..n {
                let cur = work.get(i, c);
                work.set(i, c, cur - d * x[i - j]);
            }
        }
        reflectors.push((j, x, beta));
    }

    let mut b = Mat::zeros(n, n - k);
    for m in 0..(n - k) {
        let mut u = vec![0.0; n];
        u[k + m] = 1.0;
        for (j, v, beta) in reflectors.iter().rev() {
            let mut d = 0.0;
            for i in *j..n {
                d += v[i - j] * u[i];
            }
            let d = *beta * d;
            for i in *j..n {
                u[i] -= d * v[i - j];
            }
        }
        let mut pivot = 0;
        let mut best = -1.0;
        for (i, val) in u.iter().enumerate() {
            if val.abs() > best {
                best = val.abs();
                pivot = i;
            }
        }
        let flip = if u[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            b.set(i, m, u[i] * flip);
        }
    }
    Ok(b)
}

/// Free-function form of the quadratic form, for call sites that read better
/// without method syntax.
pub fn qform(w: &[f64], a: &SymmetricMatrix) -> Result<f64> {
    a.qform(w)
}
