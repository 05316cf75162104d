//! Entropy-based forecastability scores.
//!
//! For a discrete spectral density `p` over `n` folded frequency bins the
//! normalized spectral entropy is `H(p) = -sum_j p_j ln p_j / ln n`, which
//! lies in `[0, 1]`: 1 for a flat spectrum (white noise, nothing to
//! forecast) and 0 for a single spectral line (a pure sinusoid, perfectly
//! forecastable). Forecastability is its complement, `omega = 1 - H`.

use crate::error::{Error, Result};
use crate::spectrum::{
    combination_density, normalize_density, SpectralDensity, SpectralMatrixSequence,
    SpectrumEstimator,
};

/// Density values at or below this floor contribute zero to the entropy
/// sum (the `0 ln 0 = 0` convention), and their logarithms are clamped
/// here when used as weights, keeping every weight finite.
pub(crate) const DENSITY_FLOOR: f64 = 1e-300;

/// Forecastability of one series or linear combination.
#[derive(Clone, Copy, Debug)]
pub struct OmegaValue {
    /// `1 - entropy_normalized`, in `[0, 1]`; larger is more forecastable.
    pub omega: f64,
    /// Spectral entropy normalized by `ln n_bins`, in `[0, 1]`.
    pub entropy_normalized: f64,
    /// Number of folded frequency bins the entropy was taken over.
    pub n_bins: usize,
}

/// `-sum v ln v` over entries above the floor.
pub(crate) fn entropy_sum(values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &v in values {
        if v > DENSITY_FLOOR {
            acc += v * v.ln();
        }
    }
    -acc
}

/// Entropy of nonnegative density values, normalized by `ln(values.len())`.
/// Needs at least two bins; with one bin the normalizer `ln 1 = 0` leaves
/// the quantity undefined.
pub fn normalized_entropy(values: &[f64]) -> Result<f64> {
    let n_bins = values.len();
    if n_bins < 2 {
        return Err(Error::UndefinedNormalization { n_bins });
    }
    for (j, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                location: format!("density value at bin {j}"),
            });
        }
        if v < 0.0 {
            return Err(Error::InvalidParameter {
                name: "density",
                message: format!("negative value {v} at bin {j}"),
            });
        }
    }
    Ok(entropy_sum(values) / (n_bins as f64).ln())
}

/// Normalized spectral entropy of a density.
pub fn spectral_entropy(density: &SpectralDensity) -> Result<f64> {
    normalized_entropy(density.values())
}

/// Forecastability of a density: `omega = 1 - H`, clamped into `[0, 1]`
/// (the mathematical range; roundoff can put the raw value a few ulps
/// outside).
pub fn omega_from_density(density: &SpectralDensity) -> Result<OmegaValue> {
    let h = spectral_entropy(density)?;
    Ok(OmegaValue {
        omega: (1.0 - h).clamp(0.0, 1.0),
        entropy_normalized: h,
        n_bins: density.n_bins(),
    })
}

/// Forecastability of a univariate series under the given spectrum
/// estimator: estimate, normalize to a density, score.
pub fn omega_of_series(y: &[f64], estimator: &SpectrumEstimator) -> Result<OmegaValue> {
    let raw = estimator.univariate(y)?;
    let density = normalize_density(&raw)?;
    omega_from_density(&density)
}

/// The objective the component search minimizes: normalized spectral
/// entropy of the combination `w^T y_t` under a normalized spectral matrix
/// sequence. Unclamped, so exact descent comparisons stay honest; equals
/// `1 - omega` of the combination up to the sequence's normalization
/// tolerance.
pub fn h_objective(w: &[f64], seq: &SpectralMatrixSequence) -> Result<f64> {
    let density = combination_density(w, seq)?;
    let n_bins = density.n_bins();
    if n_bins < 2 {
        return Err(Error::UndefinedNormalization { n_bins });
    }
    Ok(entropy_sum(density.values()) / (n_bins as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymmetricMatrix;
    use crate::spectrum::{FrequencyGrid, WosaConfig};

    fn density(values: Vec<f64>) -> SpectralDensity {
        let grid = FrequencyGrid::new(2 * values.len()).unwrap();
        SpectralDensity::new(grid, values)
    }

    #[test]
    fn frozen_three_bin_example() {
        // Independently computed: H = -(0.5 ln 0.5 + 2 * 0.25 ln 0.25) / ln 3.
        let d = density(vec![0.5, 0.25, 0.25]);
        let h = spectral_entropy(&d).unwrap();
        assert!((h - 0.946394630357186).abs() < 1e-12, "entropy {h}");
        let o = omega_from_density(&d).unwrap();
        assert!((o.omega - 0.05360536964281404).abs() < 1e-12, "omega {}", o.omega);
        assert_eq!(o.n_bins, 3);
    }

    #[test]
    fn uniform_density_has_unit_entropy_and_zero_omega() {
        for n in [2usize, 4, 7, 64] {
            let d = density(vec![1.0 / n as f64; n]);
            let o = omega_from_density(&d).unwrap();
            assert!((o.entropy_normalized - 1.0).abs() < 1e-12);
            assert!(o.omega.abs() < 1e-12);
            assert!(o.omega >= 0.0, "clamped into range");
        }
    }

    #[test]
    fn one_hot_density_has_zero_entropy_and_unit_omega() {
        let mut values = vec![0.0; 16];
        values[5] = 1.0;
        let o = omega_from_density(&density(values)).unwrap();
        assert_eq!(o.entropy_normalized, 0.0);
        assert_eq!(o.omega, 1.0);
    }

    #[test]
    fn values_at_the_floor_contribute_nothing() {
        let o = omega_from_density(&density(vec![1.0, 1e-310, 0.0, 0.0])).unwrap();
        assert_eq!(o.entropy_normalized, 0.0);
        assert_eq!(o.omega, 1.0);
    }

    #[test]
    fn normalized_entropy_rejects_bad_inputs() {
        assert!(matches!(
            normalized_entropy(&[1.0]),
            Err(Error::UndefinedNormalization { n_bins: 1 })
        ));
        assert!(matches!(
            normalized_entropy(&[]),
            Err(Error::UndefinedNormalization { n_bins: 0 })
        ));
        assert!(matches!(
            normalized_entropy(&[0.5, -0.1, 0.6]),
            Err(Error::InvalidParameter { name: "density", .. })
        ));
        assert!(matches!(
            normalized_entropy(&[0.5, f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn grid_sinusoid_has_omega_one_under_the_raw_periodogram() {
        let t = 512;
        let y: Vec<f64> = (0..t)
            .map(|i| (2.0 * std::f64::consts::PI * 20.0 * i as f64 / t as f64).sin())
            .collect();
        let o = omega_of_series(&y, &SpectrumEstimator::Periodogram).unwrap();
        assert!(o.omega > 1.0 - 1e-10, "omega {}", o.omega);
    }

    #[test]
    fn white_noise_has_omega_near_zero() {
        // Fixed seed; T=2048 with the default WOSA segment rule. Typical
        // value is ~0.01; the 0.05 ceiling is the calibrated bound.
        let mut state = 0x00de_fee7u64;
        let mut noise = || {
            let mut acc = 0.0;
            for _ in 0..12 {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                acc += (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0;
            }
            acc * 0.5
        };
        let y: Vec<f64> = (0..2048).map(|_| noise()).collect();
        let o = omega_of_series(&y, &SpectrumEstimator::Wosa(WosaConfig::default())).unwrap();
        assert!(o.omega < 0.05, "omega {}", o.omega);
    }

    #[test]
    fn omega_is_invariant_under_affine_scaling() {
        let mut state = 0x5ca1_ab1eu64;
        let mut rand = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let y: Vec<f64> = (0..1024)
            .map(|i| (0.07 * i as f64).sin() + 0.4 * rand())
            .collect();
        let est = SpectrumEstimator::Wosa(WosaConfig::default());
        let base = omega_of_series(&y, &est).unwrap().omega;
        for (a, b) in [(-3.0, 0.0), (0.5, 10.0), (100.0, -4.0)] {
            let z: Vec<f64> = y.iter().map(|&v| a * v + b).collect();
            let o = omega_of_series(&z, &est).unwrap().omega;
            assert!(
                (o - base).abs() < 1e-12,
                "a={a} b={b}: {o} vs {base}"
            );
        }
    }

    #[test]
    fn h_objective_in_dimension_one_is_the_density_entropy() {
        let p = [0.5, 0.2, 0.2, 0.1];
        let grid = FrequencyGrid::new(8).unwrap();
        let matrices: Vec<SymmetricMatrix> = p
            .iter()
            .map(|&v| SymmetricMatrix::from_diagonal(&[v]))
            .collect();
        let seq = crate::spectrum::renormalize_sequence(
            &SpectralMatrixSequence::new(grid, matrices).unwrap(),
        )
        .unwrap();
        let h = h_objective(&[1.0], &seq).unwrap();
        let expect = normalized_entropy(&p).unwrap();
        assert!((h - expect).abs() < 1e-12, "{h} vs {expect}");
        // Sign flips leave the quadratic forms untouched.
        let h_neg = h_objective(&[-1.0], &seq).unwrap();
        assert_eq!(h, h_neg);
    }
}
