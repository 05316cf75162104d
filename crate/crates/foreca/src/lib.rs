//! Forecastable component analysis for multivariate time series.
//!
//! A stationary series with a flat spectrum is white noise and cannot be
//! forecast; a series whose spectral mass concentrates in a few frequencies
//! is highly forecastable. This crate measures that with an entropy-based
//! forecastability score `omega` in `[0, 1]` (0 = white noise, 1 = a pure
//! sinusoid) and finds the linear combinations of a multivariate series
//! that maximize it: mutually uncorrelated components, ordered from most to
//! least forecastable, extracted by a provably descending eigenvector
//! iteration on frequency-weighted spectral matrices.
//!
//! The pipeline: estimate smoothed spectral density matrices (Welch-style
//! averaged, Hann-tapered, overlapping segments), whiten the data, normalize
//! the spectral matrices so they sum to the identity, then alternate between
//! entropy-weighting the matrices and taking the smallest eigenvector until
//! the weight vector settles. Each component's score is one minus the final
//! smallest eigenvalue; further components repeat the search in the
//! orthogonal complement.
//!
//! ```
//! use foreca::{ForecaParams, TimeSeriesMatrix};
//!
//! // Two channels: a slow oscillation plus noise, and pure noise.
//! let mut state = 0x1234_5678_9abc_def0u64;
//! let mut noise = move || {
//!     state ^= state << 13;
//!     state ^= state >> 7;
//!     state ^= state << 17;
//!     (state >> 11) as f64 / 4503599627370496.0 - 1.0
//! };
//! let t = 512usize;
//! let rows: Vec<Vec<f64>> = (0..t)
//!     .map(|i| {
//!         let s = (2.0 * std::f64::consts::PI * 16.0 * i as f64 / t as f64).sin();
//!         vec![s + 0.1 * noise(), noise()]
//!     })
//!     .collect();
//! let x = TimeSeriesMatrix::from_rows(rows, None).unwrap();
//! let model = ForecaParams::new(1).with_seed(7).fit(&x).unwrap();
//! assert!(model.omega()[0] > 0.5);
//! ```

pub mod em;
mod error;
mod fit;
pub mod forecastability;
pub mod linalg;
mod par;
mod series;
pub mod spectrum;
pub mod whitening;

pub use error::{Error, Result};
pub use fit::{ForecaModel, ForecaModelParts, ForecaParams};
pub use forecastability::{omega_of_series, OmegaValue};
pub use linalg::{orthonormal_complement, qform, EigenDecomposition, Mat, SymmetricMatrix};
pub use series::TimeSeriesMatrix;
pub use spectrum::{SpectrumEstimator, WosaConfig};
