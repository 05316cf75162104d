use thiserror::Error;

/// Errors raised across the estimation pipeline.
///
/// Variants are grouped by cause: malformed input (dimensions, non-finite
/// values, short series), degenerate data (constant series, singular
/// covariance, rank-deficient spectra), and numerical failure inside the
/// optimizer. Callers that need exit-code style classification can use
/// [`Error::is_input_error`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at {location}")]
    NonFinite { location: String },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error(
        "full two-sided spectrum has odd length {len}; folding needs an even \
         grid, so use even segment lengths"
    )]
    OddLength { len: usize },

    #[error(
        "under-determined moment estimate: {t} observations for {n} columns \
         (need at least n + 1)"
    )]
    UnderDetermined { t: usize, n: usize },

    #[error(
        "matrix is singular to working precision: smallest eigenvalue \
         {eigenvalue:.6e} gives reciprocal condition number {rcond:.6e} \
         below {rcond_tol:.1e}"
    )]
    IllConditioned {
        eigenvalue: f64,
        rcond: f64,
        rcond_tol: f64,
    },

    #[error(
        "singular covariance: smallest eigenvalue {eigenvalue:.6e} \
         (reciprocal condition number {rcond:.6e}); near-constant or \
         collinear columns: {columns:?}"
    )]
    SingularCovariance {
        eigenvalue: f64,
        rcond: f64,
        columns: Vec<usize>,
    },

    #[error("degenerate series: {context}")]
    DegenerateSeries { context: String },

    #[error(
        "degenerate spectrum: the summed spectral matrix has reciprocal \
         condition number {rcond:.6e} (smallest eigenvalue {eigenvalue:.6e}), \
         below {rcond_tol:.1e}"
    )]
    DegenerateSpectrum {
        eigenvalue: f64,
        rcond: f64,
        rcond_tol: f64,
    },

    #[error("spectral matrix sequence is not normalized; renormalize it first")]
    UnnormalizedSequence,

    #[error("basis is not orthonormal: max deviation {max_dev:.3e} exceeds {tol:.1e}")]
    NotOrthonormal { max_dev: f64, tol: f64 },

    #[error("entropy normalization undefined for {n_bins} frequency bin(s); need at least 2")]
    UndefinedNormalization { n_bins: usize },

    #[error("eigendecomposition did not converge after {sweeps} sweeps (off-diagonal {off_diag:.3e})")]
    EigenDidNotConverge { sweeps: usize, off_diag: f64 },

    #[error("numerical failure at iteration {iteration}: objective became non-finite")]
    NumericalFailure { iteration: usize },

    #[error("all {restarts} restart(s) failed; last error: {last}")]
    AllRestartsFailed { restarts: usize, last: Box<Error> },
}

impl Error {
    /// True for errors caused by malformed input rather than by degenerate
    /// data or numerical failure. CLI layers map this to usage-style exits.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::DimensionMismatch { .. }
                | Error::TooShort { .. }
                | Error::InvalidParameter { .. }
                | Error::OddLength { .. }
                | Error::UnderDetermined { .. }
                | Error::UndefinedNormalization { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
