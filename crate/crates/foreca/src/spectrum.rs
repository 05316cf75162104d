//! Spectral estimation on the folded one-sided frequency grid.
//!
//! All estimators report power on the grid `omega_j = j / S` for
//! `j = 1..=S/2` (S = segment length): the DC bin is dropped (data are
//! demeaned) and the redundant conjugate half is folded in, so bin `j`
//! carries `I(j) + I(S - j)` and the Nyquist bin is unpaired. Folding
//! preserves totals for power spectra and realifies cross-spectral
//! matrices, which keeps the downstream eigenproblems real symmetric.
//!
//! The workhorse estimator is Welch overlapped segment averaging (WOSA):
//! Hann-tapered segments with 50% overlap, each segment demeaned, the taper
//! normalized so its squared sum equals the segment length (white noise of
//! variance 1 then averages to spectral level 2 per folded interior bin).
//! The raw one-segment periodogram is available behind the same interface,
//! mainly because its line-spectrum behavior is exact where WOSA smears.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{Mat, SymmetricMatrix};
use crate::par;

/// Reciprocal condition number floor for the summed spectral matrix in
/// [`renormalize_sequence`].
const SPECTRUM_RCOND_TOL: f64 = 1e-12;

/// Folded one-sided frequency grid for an even segment length `S`:
/// frequencies `j / S` for `j = 1..=S/2`, strictly increasing in
/// `(0, 1/2]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyGrid {
    segment_length: usize,
}

impl FrequencyGrid {
    pub fn new(segment_length: usize) -> Result<Self> {
        if segment_length < 4 || segment_length % 2 != 0 {
            return Err(Error::InvalidParameter {
                name: "segment_length",
                message: format!("must be an even integer >= 4, got {segment_length}"),
            });
        }
        Ok(FrequencyGrid { segment_length })
    }

    #[inline]
    pub fn segment_length(&self) -> usize {
        self.segment_length
    }

    #[inline]
    pub fn n_bins(&self) -> usize {
        self.segment_length / 2
    }

    /// Frequency of folded bin `bin` (0-based); bin 0 is `1/S`, the last
    /// bin is Nyquist at `1/2`.
    #[inline]
    pub fn frequency(&self, bin: usize) -> f64 {
        (bin + 1) as f64 / self.segment_length as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n_bins()).map(|b| self.frequency(b)).collect()
    }
}

/// Nonnegative power per folded grid bin, not normalized.
#[derive(Clone, Debug)]
pub struct RawSpectrum {
    grid: FrequencyGrid,
    values: Vec<f64>,
}

impl RawSpectrum {
    pub(crate) fn new(grid: FrequencyGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.n_bins(), values.len());
        RawSpectrum { grid, values }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total_power(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Discrete spectral density: nonnegative values over the folded grid that
/// sum to 1 (exactly when produced by [`normalize_density`]; within the
/// renormalization tolerance when produced by [`combination_density`]).
#[derive(Clone, Debug)]
pub struct SpectralDensity {
    grid: FrequencyGrid,
    values: Vec<f64>,
}

impl SpectralDensity {
    pub(crate) fn new(grid: FrequencyGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.n_bins(), values.len());
        SpectralDensity { grid, values }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n_bins(&self) -> usize {
        self.values.len()
    }
}

/// One real symmetric spectral matrix per folded grid bin.
///
/// Estimated sequences are positive semidefinite per bin up to roundoff
/// (smallest eigenvalue >= -1e-10). After [`renormalize_sequence`] the
/// matrices sum to the identity within 1e-8 per entry and `normalized()`
/// reports true; the EM-side operations require that.
#[derive(Clone, Debug)]
pub struct SpectralMatrixSequence {
    grid: FrequencyGrid,
    dim: usize,
    matrices: Vec<SymmetricMatrix>,
    normalized: bool,
}

impl SpectralMatrixSequence {
    pub fn new(grid: FrequencyGrid, matrices: Vec<SymmetricMatrix>) -> Result<Self> {
        if matrices.len() != grid.n_bins() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "{} matrices for a grid of {} bins",
                    matrices.len(),
                    grid.n_bins()
                ),
            });
        }
        let dim = matrices[0].dim();
        if dim == 0 {
            return Err(Error::DimensionMismatch {
                context: "spectral matrices must have dimension >= 1".into(),
            });
        }
        for (j, m) in matrices.iter().enumerate() {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "matrix at bin {j} has dimension {}, expected {dim}",
                        m.dim()
                    ),
                });
            }
            if !m.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("spectral matrix at bin {j}"),
                });
            }
        }
        Ok(SpectralMatrixSequence {
            grid,
            dim,
            matrices,
            normalized: false,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_bins(&self) -> usize {
        self.matrices.len()
    }

    pub fn matrices(&self) -> &[SymmetricMatrix] {
        &self.matrices
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    /// Sum of all matrices in bin order.
    pub fn sum_matrix(&self) -> SymmetricMatrix {
        let mut m = SymmetricMatrix::zeros(self.dim);
        for s in &self.matrices {
            m.add_scaled(s, 1.0);
        }
        m
    }

    /// Projects the sequence onto the subspace spanned by the orthonormal
    /// columns of `basis` (`dim x m`, `1 <= m <= dim`): every matrix
    /// becomes `B^T S_j B`. Congruence by an orthonormal basis maps an
    /// identity sum to an identity sum, so the normalization tag carries
    /// over; the basis is checked so the tag cannot be forged through
    /// here.
    pub fn deflate(&self, basis: &Mat) -> Result<SpectralMatrixSequence> {
        let m = basis.cols();
        if basis.rows() != self.dim || m == 0 || m > self.dim {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "deflation basis is {}x{}, sequence dimension is {}",
                    basis.rows(),
                    m,
                    self.dim
                ),
            });
        }
        let mut max_dev = 0.0f64;
        for c1 in 0..m {
            for c2 in 0..=c1 {
                let mut d = 0.0;
                for r in 0..basis.rows() {
                    d += basis.get(r, c1) * basis.get(r, c2);
                }
                let expect = if c1 == c2 { 1.0 } else { 0.0 };
                max_dev = max_dev.max((d - expect).abs());
            }
        }
        if max_dev > 1e-10 {
            return Err(Error::NotOrthonormal {
                max_dev,
                tol: 1e-10,
            });
        }
        let matrices: Vec<SymmetricMatrix> = par::map_indexed(self.matrices.len(), |j| {
            self.matrices[j]
                .congruence(basis)
                .expect("dimensions validated above")
        });
        Ok(SpectralMatrixSequence {
            grid: self.grid.clone(),
            dim: m,
            matrices,
            normalized: self.normalized,
        })
    }
}

/// Settings for the WOSA estimator. `segment_length` of `None` picks the
/// default rule: the largest power of two at most `T/4`, clamped to
/// `[64, 1024]`; for `T < 256` the largest power of two at most `T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WosaConfig {
    pub segment_length: Option<usize>,
}

impl Default for WosaConfig {
    fn default() -> Self {
        WosaConfig {
            segment_length: None,
        }
    }
}

impl WosaConfig {
    pub fn with_segment_length(segment_length: usize) -> Self {
        WosaConfig {
            segment_length: Some(segment_length),
        }
    }

    /// Segment length that will be used for a series of length `t`.
    pub fn resolve_segment_length(&self, t: usize) -> Result<usize> {
        match self.segment_length {
            Some(s) => {
                if s < 4 || s % 2 != 0 {
                    return Err(Error::InvalidParameter {
                        name: "segment_length",
                        message: format!("must be an even integer >= 4, got {s}"),
                    });
                }
                if s > t {
                    return Err(Error::InvalidParameter {
                        name: "segment_length",
                        message: format!("{s} exceeds the series length {t}"),
                    });
                }
                Ok(s)
            }
            None => Ok(default_segment_length(t)),
        }
    }
}

fn largest_power_of_two_at_most(x: usize) -> usize {
    debug_assert!(x >= 1);
    1usize << (usize::BITS - 1 - x.leading_zeros())
}

fn default_segment_length(t: usize) -> usize {
    if t < 256 {
        largest_power_of_two_at_most(t)
    } else {
        largest_power_of_two_at_most(t / 4).clamp(64, 1024)
    }
}

/// Which univariate spectrum estimator to run. Both produce a
/// [`RawSpectrum`] on the folded grid, so omega computations are agnostic
/// to the choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumEstimator {
    /// Welch overlapped segment averaging with the given settings.
    Wosa(WosaConfig),
    /// Single-segment raw periodogram over the whole series.
    Periodogram,
}

impl SpectrumEstimator {
    pub fn univariate(&self, y: &[f64]) -> Result<RawSpectrum> {
        match self {
            SpectrumEstimator::Wosa(cfg) => wosa_univariate(y, cfg),
            SpectrumEstimator::Periodogram => periodogram(y),
        }
    }
}

fn ensure_finite_series(y: &[f64]) -> Result<()> {
    for (t, v) in y.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                location: format!("series value at index {t}"),
            });
        }
    }
    Ok(())
}

/// Full two-sided periodogram `I(omega_j) = |T^{-1/2} sum_t y_t e^{-2 pi i j t / T}|^2`
/// for `j = 0..T-1`. Satisfies the discrete Parseval identity
/// `sum_j I(omega_j) = sum_t y_t^2`.
pub fn periodogram_full(y: &[f64]) -> Result<Vec<f64>> {
    let t = y.len();
    if t < 4 {
        return Err(Error::TooShort { needed: 4, got: t });
    }
    ensure_finite_series(y)?;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(t);
    let mut buf: Vec<Complex<f64>> = y.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft.process(&mut buf);
    let inv_t = 1.0 / t as f64;
    Ok(buf.iter().map(|c| c.norm_sqr() * inv_t).collect())
}

/// Folds a full two-sided spectrum onto the one-sided grid: bin `j` becomes
/// `full[j] + full[len - j]` for `1 <= j < len/2`, Nyquist stays unpaired,
/// DC is dropped. Total power is preserved up to the dropped DC term.
pub fn fold_spectrum(full: &[f64]) -> Result<Vec<f64>> {
    let len = full.len();
    if len % 2 != 0 {
        return Err(Error::OddLength { len });
    }
    if len < 4 {
        return Err(Error::TooShort { needed: 4, got: len });
    }
    let half = len / 2;
    let mut folded = Vec::with_capacity(half);
    for j in 1..half {
        folded.push(full[j] + full[len - j]);
    }
    folded.push(full[half]);
    Ok(folded)
}

/// Raw periodogram of the whole series on the folded grid.
pub fn periodogram(y: &[f64]) -> Result<RawSpectrum> {
    let full = periodogram_full(y)?;
    let folded = fold_spectrum(&full)?;
    Ok(RawSpectrum::new(FrequencyGrid::new(y.len())?, folded))
}

/// Hann taper scaled so its squared sum equals the segment length.
fn power_normalized_hann(s: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..s)
        .map(|t| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * t as f64 / s as f64).cos())
        .collect();
    let ssq: f64 = w.iter().map(|x| x * x).sum();
    let scale = (s as f64 / ssq).sqrt();
    for x in w.iter_mut() {
        *x *= scale;
    }
    w
}

struct WosaPlan {
    segment_length: usize,
    offsets: Vec<usize>,
    taper: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

fn wosa_plan(t: usize, cfg: &WosaConfig) -> Result<WosaPlan> {
    if t < 16 {
        return Err(Error::TooShort { needed: 16, got: t });
    }
    let s = cfg.resolve_segment_length(t)?;
    let hop = s / 2;
    let offsets: Vec<usize> = (0..=(t - s) / hop).map(|k| k * hop).collect();
    let mut planner = FftPlanner::new();
    Ok(WosaPlan {
        segment_length: s,
        offsets,
        taper: power_normalized_hann(s),
        fft: planner.plan_fft_forward(s),
    })
}

/// Demeans a segment, tapers it, and returns its DFT.
fn tapered_segment_dft(
    seg: &[f64],
    taper: &[f64],
    fft: &Arc<dyn Fft<f64>>,
) -> Vec<Complex<f64>> {
    let s = seg.len();
    let mean = seg.iter().sum::<f64>() / s as f64;
    let mut buf: Vec<Complex<f64>> = seg
        .iter()
        .zip(taper)
        .map(|(&v, &h)| Complex::new((v - mean) * h, 0.0))
        .collect();
    fft.process(&mut buf);
    buf
}

/// WOSA spectrum of one series: Hann-tapered, 50%-overlap segment
/// periodograms averaged on the folded grid. Each segment is demeaned on
/// its own, so the estimate is shift invariant and a constant series folds
/// to (numerically) zero power.
pub fn wosa_univariate(y: &[f64], cfg: &WosaConfig) -> Result<RawSpectrum> {
    ensure_finite_series(y)?;
    let plan = wosa_plan(y.len(), cfg)?;
    let s = plan.segment_length;
    let half = s / 2;

    let per_segment: Vec<Vec<f64>> = par::map_indexed(plan.offsets.len(), |seg_idx| {
        let off = plan.offsets[seg_idx];
        let d = tapered_segment_dft(&y[off..off + s], &plan.taper, &plan.fft);
        let mut folded = Vec::with_capacity(half);
        for j in 1..half {
            folded.push(d[j].norm_sqr() + d[s - j].norm_sqr());
        }
        folded.push(d[half].norm_sqr());
        folded
    });

    let mut acc = vec![0.0; half];
    for seg in &per_segment {
        for (a, v) in acc.iter_mut().zip(seg) {
            *a += v;
        }
    }
    let scale = 1.0 / (s as f64 * plan.offsets.len() as f64);
    for a in acc.iter_mut() {
        *a *= scale;
    }
    Ok(RawSpectrum::new(FrequencyGrid::new(s)?, acc))
}

/// WOSA cross-spectral matrices of a multichannel series on the folded
/// grid. Folding adds each bin's conjugate partner, which cancels the
/// imaginary parts, so the output is a sequence of real symmetric positive
/// semidefinite matrices. The diagonal reproduces [`wosa_univariate`] of
/// each column exactly: both run the identical segment pipeline.
pub fn wosa_cross_spectrum(x: &Mat, cfg: &WosaConfig) -> Result<SpectralMatrixSequence> {
    let n = x.cols();
    let t = x.rows();
    if n == 0 {
        return Err(Error::DimensionMismatch {
            context: "cross-spectrum needs at least one column".into(),
        });
    }
    if !x.is_finite() {
        return Err(Error::NonFinite {
            location: "multichannel series".into(),
        });
    }
    let plan = wosa_plan(t, cfg)?;
    let s = plan.segment_length;
    let half = s / 2;
    let tri = n * (n + 1) / 2;

    // Per segment: one tapered DFT per channel, then folded lower-triangle
    // outer products, flat-packed [bin][i >= l].
    let per_segment: Vec<Vec<f64>> = par::map_indexed(plan.offsets.len(), |seg_idx| {
        let off = plan.offsets[seg_idx];
        let dfts: Vec<Vec<Complex<f64>>> = (0..n)
            .map(|c| {
                let seg: Vec<f64> = (off..off + s).map(|row| x.get(row, c)).collect();
                tapered_segment_dft(&seg, &plan.taper, &plan.fft)
            })
            .collect();
        let mut out = vec![0.0; half * tri];
        for (slot, j) in (1..=half).enumerate() {
            let base = slot * tri;
            let mut k = 0;
            for i in 0..n {
                let di = &dfts[i];
                for l in 0..=i {
                    let dl = &dfts[l];
                    // re(a * conj(b)) at bin j, plus the conjugate partner
                    // bin S - j (absent for Nyquist).
                    let mut v = di[j].re * dl[j].re + di[j].im * dl[j].im;
                    if j < half {
                        v += di[s - j].re * dl[s - j].re + di[s - j].im * dl[s - j].im;
                    }
                    out[base + k] = v;
                    k += 1;
                }
            }
        }
        out
    });

    let mut acc = vec![0.0; half * tri];
    for seg in &per_segment {
        for (a, v) in acc.iter_mut().zip(seg) {
            *a += v;
        }
    }
    let scale = 1.0 / (s as f64 * plan.offsets.len() as f64);
    for a in acc.iter_mut() {
        *a *= scale;
    }

    let grid = FrequencyGrid::new(s)?;
    let matrices: Vec<SymmetricMatrix> = (0..half)
        .map(|slot| {
            let mut m = SymmetricMatrix::zeros(n);
            m.packed_mut()
                .copy_from_slice(&acc[slot * tri..(slot + 1) * tri]);
            m
        })
        .collect();
    SpectralMatrixSequence::new(grid, matrices)
}

/// Normalizes nonnegative spectral power to a discrete probability
/// density. A zero spectrum (constant input series) is degenerate.
pub fn normalize_density(raw: &RawSpectrum) -> Result<SpectralDensity> {
    let sum: f64 = raw.values.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::DegenerateSeries {
            context: "spectrum is identically zero (constant series?)".into(),
        });
    }
    let values = raw.values.iter().map(|v| v / sum).collect();
    Ok(SpectralDensity::new(raw.grid.clone(), values))
}

/// Congruence-normalizes a spectral matrix sequence so it sums to the
/// identity: with `M = sum_j S_j`, each matrix becomes
/// `M^{-1/2} S_j M^{-1/2}`. For dimension 1 this reduces to
/// [`normalize_density`]. Fails if `M` is singular to working precision
/// (rank-deficient spectrum).
pub fn renormalize_sequence(seq: &SpectralMatrixSequence) -> Result<SpectralMatrixSequence> {
    let m = seq.sum_matrix();
    let r = m.inv_sqrt(SPECTRUM_RCOND_TOL).map_err(|e| match e {
        Error::IllConditioned {
            eigenvalue,
            rcond,
            rcond_tol,
        } => Error::DegenerateSpectrum {
            eigenvalue,
            rcond,
            rcond_tol,
        },
        other => other,
    })?;
    let rd = r.to_dense();
    let matrices: Vec<SymmetricMatrix> = par::map_indexed(seq.matrices.len(), |j| {
        seq.matrices[j]
            .congruence(&rd)
            .expect("dimensions match by construction")
    });
    Ok(SpectralMatrixSequence {
        grid: seq.grid.clone(),
        dim: seq.dim,
        matrices,
        normalized: true,
    })
}

/// Density of the scalar series `w^T y_t` under a normalized spectral
/// matrix sequence: the per-bin quadratic forms `w^T S_j w`. Roundoff
/// negatives (bounded by the PSD tolerance) clamp to zero; the values sum
/// to `w^T I w = 1` within the renormalization tolerance.
pub fn combination_density(w: &[f64], seq: &SpectralMatrixSequence) -> Result<SpectralDensity> {
    if !seq.normalized {
        return Err(Error::UnnormalizedSequence);
    }
    if w.len() != seq.dim {
        return Err(Error::DimensionMismatch {
            context: format!(
                "weight vector length {} does not match sequence dimension {}",
                w.len(),
                seq.dim
            ),
        });
    }
    let values = seq
        .matrices
        .iter()
        .map(|s| s.qform(w).map(|q| q.max(0.0)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(SpectralDensity::new(seq.grid.clone(), values))
}

/// Autocovariances `gamma(k) = T^{-1} sum_{t=k}^{T-1} (y_t - m)(y_{t-k} - m)`
/// and autocorrelations `rho = gamma / gamma(0)` for lags `0..=max_lag`.
/// The `1/T` denominator keeps the sequence positive semidefinite, so
/// `|rho| <= 1`.
#[derive(Clone, Debug)]
pub struct AutocovarianceSequence {
    pub gamma: Vec<f64>,
    pub rho: Vec<f64>,
}

pub fn sample_acf(y: &[f64], max_lag: usize) -> Result<AutocovarianceSequence> {
    ensure_finite_series(y)?;
    let t = y.len();
    if max_lag >= t {
        return Err(Error::InvalidParameter {
            name: "max_lag",
            message: format!("{max_lag} must be smaller than the series length {t}"),
        });
    }
    let mean = y.iter().sum::<f64>() / t as f64;
    let inv_t = 1.0 / t as f64;
    let mut gamma = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let mut acc = 0.0;
        for i in k..t {
            acc += (y[i] - mean) * (y[i - k] - mean);
        }
        gamma.push(acc * inv_t);
    }
    if !(gamma[0] > 0.0) {
        return Err(Error::DegenerateSeries {
            context: "zero sample variance (constant series)".into(),
        });
    }
    let rho = gamma.iter().map(|g| g / gamma[0]).collect();
    Ok(AutocovarianceSequence { gamma, rho })
}
