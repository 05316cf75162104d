//! End-to-end fitting: whiten, estimate and normalize spectra once, then
//! peel off K components by deflation.
//!
//! Each component is found by the restarted eigenvector iteration inside
//! the current subspace; the subspace then shrinks to the orthogonal
//! complement of the found direction, which keeps components exactly
//! uncorrelated (orthonormal directions in whitened space have identity
//! sample covariance). Deflation happens on the spectral matrices, not the
//! data: congruence by the complement basis is algebraically the same as
//! re-estimating spectra of projected series, costs nothing, and preserves
//! the sum-to-identity normalization exactly.

use crate::em::{fit_component, EmConfig, EmTrace};
use crate::error::{Error, Result};
use crate::linalg::{orthonormal_complement, Mat};
use crate::series::TimeSeriesMatrix;
use crate::spectrum::{renormalize_sequence, wosa_cross_spectrum, WosaConfig};
use crate::whitening::{fit_whitener, WhiteningTransform, DEFAULT_RCOND_TOL};

/// Everything `fit` needs besides the data. Build with [`ForecaParams::new`]
/// and customize with the `with_*` methods.
#[derive(Clone, Copy, Debug)]
pub struct ForecaParams {
    k: usize,
    restarts: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
    segment_length: Option<usize>,
    rcond_tol: f64,
}

impl ForecaParams {
    /// Parameters for extracting `k` components with the defaults:
    /// 5 restarts, tolerance 1e-8, 200 iterations, seed 0, automatic
    /// segment length, covariance rcond floor 1e-12.
    pub fn new(k: usize) -> Self {
        let em = EmConfig::default();
        ForecaParams {
            k,
            restarts: em.restarts,
            tol: em.tol,
            max_iter: em.max_iter,
            seed: 0,
            segment_length: None,
            rcond_tol: DEFAULT_RCOND_TOL,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_segment_length(mut self, segment_length: usize) -> Self {
        self.segment_length = Some(segment_length);
        self
    }

    pub fn with_rcond_tol(mut self, rcond_tol: f64) -> Self {
        self.rcond_tol = rcond_tol;
        self
    }

    /// Fits a [`ForecaModel`] to the series.
    pub fn fit(&self, x: &TimeSeriesMatrix) -> Result<ForecaModel> {
        let n = x.n_channels();
        if self.k == 0 {
            return Err(Error::InvalidParameter {
                name: "k",
                message: "need at least one component".into(),
            });
        }
        if self.k > n {
            return Err(Error::DimensionMismatch {
                context: format!("{} components requested from a {n}-channel series", self.k),
            });
        }
        let whitener = fit_whitener(x, self.rcond_tol)?;
        let u = whitener.whiten(x)?;
        let wosa = WosaConfig {
            segment_length: self.segment_length,
        };
        let segment_length = wosa.resolve_segment_length(x.len())?;
        let seq = renormalize_sequence(&wosa_cross_spectrum(u.data(), &wosa)?)?;
        let em_cfg = EmConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            restarts: self.restarts,
        };

        // Deflation state: `basis` holds orthonormal columns mapping the
        // current subspace back to full whitened coordinates.
        let mut basis = Mat::identity(n);
        let mut current = seq;
        let mut loadings: Vec<Vec<f64>> = Vec::with_capacity(self.k);
        let mut omega = Vec::with_capacity(self.k);
        let mut lambda_min = Vec::with_capacity(self.k);
        let mut traces = Vec::with_capacity(self.k);
        let mut restart_chosen = Vec::with_capacity(self.k);
        for component in 0..self.k {
            let fit = fit_component(&current, &em_cfg, self.seed, component)?;
            let m = basis.cols();
            let lifted: Vec<f64> = (0..n)
                .map(|i| (0..m).map(|c| basis.get(i, c) * fit.loading[c]).sum())
                .collect();
            loadings.push(lifted);
            omega.push(fit.omega);
            lambda_min.push(fit.lambda_min);
            traces.push(fit.trace);
            restart_chosen.push(fit.restart);
            if component + 1 < self.k {
                let w_col = Mat::from_fn(m, 1, |i, _| fit.loading[i]);
                let complement = orthonormal_complement(&w_col)?;
                current = current.deflate(&complement)?;
                basis = basis.matmul(&complement)?;
            }
        }

        // Most forecastable first; extraction order usually matches but
        // restarts can land later components in better basins.
        let mut order: Vec<usize> = (0..self.k).collect();
        order.sort_by(|&a, &b| omega[b].partial_cmp(&omega[a]).unwrap());

        // Canonical sign: largest-magnitude coordinate positive, so
        // repeated fits and serialization round trips are stable.
        let mut loadings_whitened = Mat::zeros(self.k, n);
        for (row, &src) in order.iter().enumerate() {
            let w = &loadings[src];
            let mut pivot = 0;
            for (i, v) in w.iter().enumerate() {
                if v.abs() > w[pivot].abs() {
                    pivot = i;
                }
            }
            let flip = if w[pivot] < 0.0 { -1.0 } else { 1.0 };
            for (i, v) in w.iter().enumerate() {
                loadings_whitened.set(row, i, flip * v);
            }
        }
        let loadings_original = whitener.unwhiten_loadings(&loadings_whitened)?;

        Ok(ForecaModel {
            column_names: x.column_names().to_vec(),
            whitener,
            loadings_whitened,
            loadings_original,
            omega: order.iter().map(|&i| omega[i]).collect(),
            lambda_min: order.iter().map(|&i| lambda_min[i]).collect(),
            traces: order.iter().map(|&i| traces[i].clone()).collect(),
            restart_chosen: order.iter().map(|&i| restart_chosen[i]).collect(),
            segment_length,
            seed: self.seed,
            restarts: self.restarts,
            tol: self.tol,
            max_iter: self.max_iter,
        })
    }
}

/// Raw fields for rebuilding a model from storage; validated by
/// [`ForecaModel::from_parts`].
#[derive(Clone, Debug)]
pub struct ForecaModelParts {
    pub column_names: Vec<String>,
    pub whitener: WhiteningTransform,
    pub loadings_whitened: Mat,
    pub loadings_original: Mat,
    pub omega: Vec<f64>,
    pub lambda_min: Vec<f64>,
    pub segment_length: usize,
    pub seed: u64,
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
}

/// A fitted decomposition: K whitened-space directions (orthonormal rows),
/// their original-space counterparts, and the forecastability scores, most
/// forecastable first (`omega[k] = 1 - lambda_min[k]`).
#[derive(Clone, Debug)]
pub struct ForecaModel {
    column_names: Vec<String>,
    whitener: WhiteningTransform,
    loadings_whitened: Mat,
    loadings_original: Mat,
    omega: Vec<f64>,
    lambda_min: Vec<f64>,
    traces: Vec<EmTrace>,
    restart_chosen: Vec<usize>,
    segment_length: usize,
    seed: u64,
    restarts: usize,
    tol: f64,
    max_iter: usize,
}

impl ForecaModel {
    /// Rebuilds a model from stored parts, re-validating the invariants
    /// (orthonormal whitened rows, descending omega, omega/lambda
    /// consistency, loadings consistency with the whitener). Iteration
    /// traces are runtime diagnostics and come back empty.
    pub fn from_parts(parts: ForecaModelParts) -> Result<Self> {
        let n = parts.whitener.dim();
        let k = parts.loadings_whitened.rows();
        if k == 0 || k > n {
            return Err(Error::DimensionMismatch {
                context: format!("{k} components for dimension {n}"),
            });
        }
        if parts.column_names.len() != n
            || parts.loadings_whitened.cols() != n
            || parts.loadings_original.rows() != k
            || parts.loadings_original.cols() != n
            || parts.omega.len() != k
            || parts.lambda_min.len() != k
        {
            return Err(Error::DimensionMismatch {
                context: "model parts have inconsistent shapes".into(),
            });
        }
        if !parts.loadings_whitened.is_finite()
            || !parts.loadings_original.is_finite()
            || !parts.omega.iter().all(|v| v.is_finite())
            || !parts.lambda_min.iter().all(|v| v.is_finite())
        {
            return Err(Error::NonFinite {
                location: "model parts".into(),
            });
        }
        let mut max_dev = 0.0f64;
        for a in 0..k {
            for b in 0..=a {
                let mut d = 0.0;
                for c in 0..n {
                    d += parts.loadings_whitened.get(a, c) * parts.loadings_whitened.get(b, c);
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                max_dev = max_dev.max((d - expect).abs());
            }
        }
        if max_dev > 1e-8 {
            return Err(Error::NotOrthonormal {
                max_dev,
                tol: 1e-8,
            });
        }
        for pair in parts.omega.windows(2) {
            if pair[1] > pair[0] + 1e-12 {
                return Err(Error::InvalidParameter {
                    name: "omega",
                    message: format!("not sorted descending: {} before {}", pair[0], pair[1]),
                });
            }
        }
        for (o, l) in parts.omega.iter().zip(&parts.lambda_min) {
            if (o - (1.0 - l)).abs() > 1e-8 {
                return Err(Error::InvalidParameter {
                    name: "lambda_min",
                    message: format!("omega {o} does not complement lambda_min {l}"),
                });
            }
        }
        let expected = parts.whitener.unwhiten_loadings(&parts.loadings_whitened)?;
        for r in 0..k {
            for c in 0..n {
                if (expected.get(r, c) - parts.loadings_original.get(r, c)).abs() > 1e-8 {
                    return Err(Error::InvalidParameter {
                        name: "loadings_original",
                        message: format!(
                            "entry ({r},{c}) disagrees with the whitener mapping"
                        ),
                    });
                }
            }
        }
        Ok(ForecaModel {
            column_names: parts.column_names,
            whitener: parts.whitener,
            loadings_whitened: parts.loadings_whitened,
            loadings_original: parts.loadings_original,
            omega: parts.omega,
            lambda_min: parts.lambda_min,
            traces: Vec::new(),
            restart_chosen: Vec::new(),
            segment_length: parts.segment_length,
            seed: parts.seed,
            restarts: parts.restarts,
            tol: parts.tol,
            max_iter: parts.max_iter,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.whitener.dim()
    }

    pub fn n_components(&self) -> usize {
        self.loadings_whitened.rows()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn whitener(&self) -> &WhiteningTransform {
        &self.whitener
    }

    /// K x n, orthonormal rows, one whitened-space direction per row.
    pub fn loadings_whitened(&self) -> &Mat {
        &self.loadings_whitened
    }

    /// K x n, rows applied to the demeaned original series.
    pub fn loadings_original(&self) -> &Mat {
        &self.loadings_original
    }

    /// Forecastability per component, descending.
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn lambda_min(&self) -> &[f64] {
        &self.lambda_min
    }

    /// Per-component iteration traces (empty on a deserialized model).
    pub fn traces(&self) -> &[EmTrace] {
        &self.traces
    }

    /// Winning restart index per component (empty on a deserialized model).
    pub fn restart_chosen(&self) -> &[usize] {
        &self.restart_chosen
    }

    pub fn segment_length(&self) -> usize {
        self.segment_length
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter
    }

    /// Applies the fitted decomposition: `(X - mean)` mapped through the
    /// original-space loadings, giving the K component series `ForeC1..K`
    /// (unit variance, mutually uncorrelated on the training data).
    pub fn transform(&self, x: &TimeSeriesMatrix) -> Result<TimeSeriesMatrix> {
        let n = self.n_channels();
        if x.n_channels() != n {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "model expects {n} columns, series has {}",
                    x.n_channels()
                ),
            });
        }
        let mean = self.whitener.mean();
        let centered = Mat::from_fn(x.len(), n, |r, c| x.data().get(r, c) - mean[c]);
        let out = centered.matmul_nt(&self.loadings_original)?;
        let names = (1..=self.n_components())
            .map(|i| format!("ForeC{i}"))
            .collect();
        TimeSeriesMatrix::from_mat(out, Some(names))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecastability::omega_of_series;
    use crate::linalg::SymmetricMatrix;
    use crate::spectrum::SpectrumEstimator;
    use crate::whitening::estimate_mean_cov;

    fn xorshift(state: &mut u64) -> f64 {
        *state ^= *state << 13;
        *state ^= *state >> 7;
        *state ^= *state << 17;
        (*state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }

    fn noise(state: &mut u64) -> f64 {
        let mut acc = 0.0;
        for _ in 0..12 {
            acc += xorshift(state);
        }
        acc * 0.5
    }

    /// Channel 0: on-grid sinusoid plus mild noise. Channel 1: noise.
    fn planted_series(t: usize, seed: u64) -> TimeSeriesMatrix {
        let mut state = seed;
        let rows: Vec<Vec<f64>> = (0..t)
            .map(|i| {
                let s = (2.0 * std::f64::consts::PI * 16.0 * i as f64 / 512.0).sin();
                vec![s + 0.3 * noise(&mut state), noise(&mut state)]
            })
            .collect();
        TimeSeriesMatrix::from_rows(rows, None).unwrap()
    }

    #[test]
    fn rejects_bad_component_counts() {
        let x = planted_series(256, 1);
        assert!(matches!(
            ForecaParams::new(0).fit(&x),
            Err(Error::InvalidParameter { name: "k", .. })
        ));
        assert!(matches!(
            ForecaParams::new(3).fit(&x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_channel_fit_equals_the_univariate_score() {
        let mut state = 0x0123_4567u64;
        let mut prev = 0.0;
        let y: Vec<f64> = (0..2048)
            .map(|_| {
                prev = 0.8 * prev + noise(&mut state);
                prev
            })
            .collect();
        let x = TimeSeriesMatrix::from_rows(y.iter().map(|&v| vec![v]).collect(), None).unwrap();
        let model = ForecaParams::new(1).with_seed(3).fit(&x).unwrap();
        let direct = omega_of_series(&y, &SpectrumEstimator::Wosa(WosaConfig::default()))
            .unwrap()
            .omega;
        assert!(
            (model.omega()[0] - direct).abs() < 1e-8,
            "{} vs {direct}",
            model.omega()[0]
        );
    }

    #[test]
    fn planted_component_is_recovered_and_ordered() {
        let x = planted_series(2048, 0xfeed);
        let model = ForecaParams::new(2)
            .with_seed(7)
            .with_restarts(3)
            .fit(&x)
            .unwrap();
        let omega = model.omega();
        assert!(omega[0] > omega[1] + 0.1, "omegas {omega:?}");
        for (o, l) in omega.iter().zip(model.lambda_min()) {
            assert!((o - (1.0 - l)).abs() < 1e-8);
        }
        // The forecastable direction is channel 0 (up to whitening).
        let row = model.loadings_original().row(0);
        let nrm = (row[0] * row[0] + row[1] * row[1]).sqrt();
        assert!(
            row[0].abs() / nrm > 0.99,
            "loading not aligned with the planted channel: {row:?}"
        );
        // Whitened rows orthonormal.
        let lw = model.loadings_whitened();
        for a in 0..2 {
            for b in 0..=a {
                let d: f64 = (0..2).map(|c| lw.get(a, c) * lw.get(b, c)).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((d - expect).abs() < 1e-8);
            }
        }
        // Components are unit-variance and uncorrelated on training data.
        let comps = model.transform(&x).unwrap();
        assert_eq!(comps.column_names(), ["ForeC1", "ForeC2"]);
        let (_, cov) = estimate_mean_cov(&comps).unwrap();
        for i in 0..2 {
            for j in 0..=i {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (cov.get(i, j) - expect).abs() < 1e-6,
                    "component cov ({i},{j}) = {}",
                    cov.get(i, j)
                );
            }
        }
        // Internal consistency: scoring the extracted series reproduces
        // the model's omega closely (deflated-space renormalization means
        // exact equality is not expected).
        let c1 = comps.channel(0);
        let rescored = omega_of_series(
            &c1,
            &SpectrumEstimator::Wosa(WosaConfig::with_segment_length(
                model.segment_length(),
            )),
        )
        .unwrap()
        .omega;
        assert!(
            (rescored - omega[0]).abs() < 0.02,
            "rescored {rescored} vs model {}",
            omega[0]
        );
    }

    #[test]
    fn repeated_fits_are_bitwise_identical() {
        let x = planted_series(1024, 0xabc);
        let params = ForecaParams::new(2).with_seed(11).with_restarts(2);
        let a = params.fit(&x).unwrap();
        let b = params.fit(&x).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert_eq!(
                    a.loadings_original().get(r, c).to_bits(),
                    b.loadings_original().get(r, c).to_bits()
                );
            }
            assert_eq!(a.omega()[r].to_bits(), b.omega()[r].to_bits());
        }
    }

    #[test]
    fn transform_validates_column_count() {
        let x = planted_series(512, 5);
        let model = ForecaParams::new(1).fit(&x).unwrap();
        let wrong = TimeSeriesMatrix::from_rows(vec![vec![1.0, 2.0, 3.0]; 32], None).unwrap();
        assert!(matches!(
            model.transform(&wrong),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn identity_whitener_with_basis_loading_returns_the_demeaned_column() {
        let whitener = WhiteningTransform::from_parts(
            vec![2.0, -1.0],
            SymmetricMatrix::identity(2),
            SymmetricMatrix::identity(2),
            1.0,
        )
        .unwrap();
        let model = ForecaModel::from_parts(ForecaModelParts {
            column_names: vec!["a".into(), "b".into()],
            whitener,
            loadings_whitened: Mat::from_rows(vec![vec![1.0, 0.0]]).unwrap(),
            loadings_original: Mat::from_rows(vec![vec![1.0, 0.0]]).unwrap(),
            omega: vec![0.5],
            lambda_min: vec![0.5],
            segment_length: 64,
            seed: 0,
            restarts: 5,
            tol: 1e-8,
            max_iter: 200,
        })
        .unwrap();
        let x = TimeSeriesMatrix::from_rows(
            vec![vec![3.0, 4.0], vec![1.0, 0.0], vec![2.5, -2.0]],
            None,
        )
        .unwrap();
        let out = model.transform(&x).unwrap();
        assert_eq!(out.channel(0), vec![1.0, -1.0, 0.5]);
    }

    #[test]
    fn from_parts_rejects_broken_invariants() {
        let whitener = || {
            WhiteningTransform::from_parts(
                vec![0.0, 0.0],
                SymmetricMatrix::identity(2),
                SymmetricMatrix::identity(2),
                1.0,
            )
            .unwrap()
        };
        let base = |omega: Vec<f64>, lambda: Vec<f64>, rows: Vec<Vec<f64>>| ForecaModelParts {
            column_names: vec!["a".into(), "b".into()],
            whitener: whitener(),
            loadings_whitened: Mat::from_rows(rows.clone()).unwrap(),
            loadings_original: Mat::from_rows(rows).unwrap(),
            omega,
            lambda_min: lambda,
            segment_length: 64,
            seed: 0,
            restarts: 5,
            tol: 1e-8,
            max_iter: 200,
        };
        // Non-orthonormal rows.
        assert!(matches!(
            ForecaModel::from_parts(base(
                vec![0.5],
                vec![0.5],
                vec![vec![1.0, 1.0]]
            )),
            Err(Error::NotOrthonormal { .. })
        ));
        // Ascending omega.
        assert!(matches!(
            ForecaModel::from_parts(base(
                vec![0.2, 0.5],
                vec![0.8, 0.5],
                vec![vec![1.0, 0.0], vec![0.0, 1.0]]
            )),
            Err(Error::InvalidParameter { name: "omega", .. })
        ));
        // Omega and lambda that do not complement.
        assert!(matches!(
            ForecaModel::from_parts(base(
                vec![0.5],
                vec![0.1],
                vec![vec![1.0, 0.0]]
            )),
            Err(Error::InvalidParameter { name: "lambda_min", .. })
        ));
    }
}
