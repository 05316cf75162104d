//! Brute-force oracles: exhaustive search and closed-form population
//! values that implementation tests are measured against.

use foreca::forecastability::h_objective;
use foreca::spectrum::SpectralMatrixSequence;

use crate::{Result, SynthError};

/// Exhaustive minimizer of the entropy objective over the unit circle for
/// two-channel sequences: evaluates `w(theta) = (cos theta, sin theta)`
/// at `n_angles` equally spaced angles in `[0, pi)` (antipodes are
/// equivalent) and returns the best vector and objective, ties to the
/// lowest angle index.
pub fn angle_sweep_oracle(
    seq: &SpectralMatrixSequence,
    n_angles: usize,
) -> Result<([f64; 2], f64)> {
    if seq.dim() != 2 {
        return Err(SynthError::Dimension(format!(
            "angle sweep needs a two-channel sequence, got dimension {}",
            seq.dim()
        )));
    }
    if n_angles == 0 {
        return Err(SynthError::InvalidParameter {
            name: "n_angles",
            message: "need at least one angle".into(),
        });
    }
    let mut best_w = [1.0, 0.0];
    let mut best_objective = f64::INFINITY;
    for i in 0..n_angles {
        let theta = std::f64::consts::PI * i as f64 / n_angles as f64;
        let w = [theta.cos(), theta.sin()];
        let h = h_objective(&w, seq)?;
        if h < best_objective {
            best_objective = h;
            best_w = w;
        }
    }
    Ok((best_w, best_objective))
}

/// Population forecastability of a Gaussian AR(1) with parameter `phi`,
/// discretized on the folded grid with `n_bins` bins: the spectral
/// density `f(lambda) proportional to 1 / (1 - 2 phi cos(lambda) + phi^2)`
/// is evaluated literally at `lambda_j = 2 pi j / (2 n_bins)`,
/// normalized, and scored. Literal evaluation (no interior-bin doubling)
/// keeps `phi = 0` at exactly uniform density, hence omega 0.
pub fn omega_population_ar1(phi: f64, n_bins: usize) -> Result<f64> {
    if !phi.is_finite() || phi.abs() >= 1.0 {
        return Err(SynthError::InvalidParameter {
            name: "phi",
            message: format!("must lie in (-1, 1), got {phi}"),
        });
    }
    if n_bins < 2 {
        return Err(SynthError::InvalidParameter {
            name: "n_bins",
            message: format!("need at least 2 bins, got {n_bins}"),
        });
    }
    let s = 2 * n_bins;
    let mut density: Vec<f64> = (1..=n_bins)
        .map(|j| {
            let lambda = std::f64::consts::TAU * j as f64 / s as f64;
            1.0 / (1.0 - 2.0 * phi * lambda.cos() + phi * phi)
        })
        .collect();
    let total: f64 = density.iter().sum();
    for d in density.iter_mut() {
        *d /= total;
    }
    // Entropy spelled out locally so the oracle stays independent of the
    // library's scoring code.
    let h_nat: f64 = -density
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>();
    Ok(1.0 - h_nat / (n_bins as f64).ln())
}
