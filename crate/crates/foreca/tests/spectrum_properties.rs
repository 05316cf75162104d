//! Estimator-level properties: energy accounting, folding, flatness, and
//! positivity of the cross-spectrum pipeline on synthetic inputs.

mod common;

use common::{pipeline_sequence, random_unit};
use foreca::spectrum::{
    combination_density, fold_spectrum, periodogram_full, sample_acf, wosa_univariate, WosaConfig,
};
use foreca::Mat;
use foreca_synth::{mixed_series, ProcessSpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    /// Folding drops the DC bin and regroups everything else, so the folded
    /// total must equal the non-DC total of the two-sided input.
    #[test]
    fn folding_conserves_non_dc_power(
        full in (2usize..=32).prop_flat_map(|half| prop::collection::vec(0.0f64..1e3, 2 * half))
    ) {
        let folded = fold_spectrum(&full).unwrap();
        prop_assert_eq!(folded.len(), full.len() / 2);
        let non_dc: f64 = full[1..].iter().sum();
        let total: f64 = folded.iter().sum();
        prop_assert!((total - non_dc).abs() <= 1e-9 * non_dc.max(1.0));
    }

    /// Discrete Parseval identity for the two-sided periodogram.
    #[test]
    fn periodogram_satisfies_parseval(
        y in prop::collection::vec(-100.0f64..100.0, 16..=128)
    ) {
        let spectrum = periodogram_full(&y).unwrap();
        let spectral: f64 = spectrum.iter().sum();
        let temporal: f64 = y.iter().map(|v| v * v).sum();
        prop_assert!((spectral - temporal).abs() <= 1e-8 * temporal.max(1.0));
    }
}

/// Summing the folded WOSA estimate over the grid (weight 1/segment_length
/// per bin) recovers the sample variance to within estimation error.
#[test]
fn wosa_total_power_matches_sample_variance() {
    for (seed, phi) in [(1u64, 0.6), (2, -0.4), (3, 0.8)] {
        let y = ProcessSpec::ar(vec![phi], 4096, seed).unwrap().generate();
        let acf = sample_acf(&y, 1).unwrap();
        let variance = acf.gamma[0];

        let raw = wosa_univariate(&y, &WosaConfig::default()).unwrap();
        let seg = raw.grid().segment_length() as f64;
        let integrated = raw.total_power() / seg;
        assert!(
            (integrated - variance).abs() <= 0.10 * variance,
            "phi {phi}: integrated {integrated} vs variance {variance}"
        );
    }
}

/// White-noise spectrum is flat: with segment_length 256 and T = 4096 (31
/// averaged segments) every folded bin sits within 50% of the uniform level.
#[test]
fn white_noise_spectrum_is_flat() {
    let y = ProcessSpec::white_noise(1.0, 4096, 30).unwrap().generate();
    let raw = wosa_univariate(&y, &WosaConfig::with_segment_length(256)).unwrap();
    let mean = raw.total_power() / raw.values().len() as f64;
    for (bin, &v) in raw.values().iter().enumerate() {
        let dev = (v - mean).abs() / mean;
        assert!(dev < 0.5, "bin {bin}: level {v} vs mean {mean} (dev {dev:.3})");
    }
}

/// Every folded cross-spectral matrix from the whitened pipeline is positive
/// semi-definite up to round-off.
#[test]
fn pipeline_matrices_are_positive_semidefinite() {
    let specs = [
        ProcessSpec::ar(vec![0.7], 2048, 11).unwrap(),
        ProcessSpec::sinusoid(0.2, 1.0, 0.5, 2048, 12).unwrap(),
        ProcessSpec::white_noise(1.0, 2048, 13).unwrap(),
    ];
    let mixing = Mat::from_rows(vec![
        vec![1.0, 0.4, -0.2],
        vec![-0.3, 1.0, 0.5],
        vec![0.2, -0.6, 1.0],
    ])
    .unwrap();
    let x = mixed_series(&specs, &mixing).unwrap();
    let seq = pipeline_sequence(&x);
    for (bin, m) in seq.matrices().iter().enumerate() {
        let (min_eig, _) = m.min_eigpair().unwrap();
        assert!(min_eig >= -1e-10, "bin {bin}: min eigenvalue {min_eig}");
    }
}

/// Quadratic forms against a normalized sequence are nonnegative for any
/// direction, so every combination density is a genuine density.
#[test]
fn combination_density_nonnegative_for_many_directions() {
    let specs = [
        ProcessSpec::ar(vec![1.35, -0.45], 1024, 21).unwrap(),
        ProcessSpec::white_noise(1.0, 1024, 22).unwrap(),
        ProcessSpec::sinusoid(0.1, 1.0, 0.3, 1024, 23).unwrap(),
    ];
    let mixing = Mat::from_rows(vec![
        vec![0.9, -0.1, 0.3],
        vec![0.2, 1.1, -0.4],
        vec![-0.5, 0.3, 0.8],
    ])
    .unwrap();
    let x = mixed_series(&specs, &mixing).unwrap();
    let seq = pipeline_sequence(&x);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..1000 {
        let w = random_unit(&mut rng, 3);
        let density = combination_density(&w, &seq).unwrap();
        assert!(density.values().iter().all(|&v| v >= 0.0));
    }
}

/// The sample ACF of iid noise stays inside the +-3/sqrt(T) band for the
/// vast majority of lags.
#[test]
fn white_noise_acf_stays_in_band() {
    let t = 2048;
    let y = ProcessSpec::white_noise(1.0, t, 99).unwrap().generate();
    let acf = sample_acf(&y, 64).unwrap();
    let band = 3.0 / (t as f64).sqrt();
    let inside = acf.rho[1..].iter().filter(|r| r.abs() < band).count();
    assert!(inside >= 58, "only {inside}/64 lags inside band {band:.4}");
    assert!((acf.rho[0] - 1.0).abs() < 1e-12);
}
