//! Helpers shared by the integration suites.
#![allow(dead_code)]

use foreca::spectrum::{
    renormalize_sequence, wosa_cross_spectrum, SpectralMatrixSequence, WosaConfig,
};
use foreca::whitening::fit_whitener;
use foreca::{omega_of_series, SpectrumEstimator, TimeSeriesMatrix};
use rand::Rng;

/// Default-config WOSA forecastability of a single series.
pub fn omega_wosa(y: &[f64]) -> f64 {
    omega_of_series(y, &SpectrumEstimator::Wosa(WosaConfig::default()))
        .unwrap()
        .omega
}

/// Whiten, estimate the cross-spectrum, and renormalize: the sequence the
/// optimizer consumes.
pub fn pipeline_sequence(x: &TimeSeriesMatrix) -> SpectralMatrixSequence {
    let whitener = fit_whitener(x, 1e-12).unwrap();
    let u = whitener.whiten(x).unwrap();
    let raw = wosa_cross_spectrum(u.data(), &WosaConfig::default()).unwrap();
    renormalize_sequence(&raw).unwrap()
}

/// A probability vector drawn uniformly from the interior of the simplex.
pub fn random_density<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = v.iter().sum();
        if total > 1e-9 {
            return v.iter().map(|x| x / total).collect();
        }
    }
}

/// A unit vector with direction drawn from the cube, redrawn when degenerate.
pub fn random_unit<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}
