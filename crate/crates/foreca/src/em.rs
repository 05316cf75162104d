//! The component search: an EM-flavored alternating minimization.
//!
//! For a unit vector `w` and a normalized spectral matrix sequence, the
//! objective is the normalized spectral entropy `h(w)` of the combination
//! density `q_j = w^T S_j w`. The key identity: `h(w) = w^T Sbar(w) w`
//! where `Sbar(w) = -sum_j S_j ln(q_j) / ln(n_bins)` is the
//! entropy-weighted spectrum. `Sbar` is positive semidefinite, so moving
//! `w` to its smallest eigenvector minimizes the quadratic form, and the
//! log-sum (Gibbs) inequality closes the loop:
//!
//! `h(w_i) = w_i^T Sbar(w_i) w_i  >=  w_{i+1}^T Sbar(w_i) w_{i+1}  >=  h(w_{i+1})`.
//!
//! The objective therefore never increases, and the iteration converges to
//! a local minimum. Random restarts guard against bad basins; each
//! restart's starting vector comes from its own counter-derived PRNG
//! stream, so runs are reproducible bit for bit regardless of how many
//! threads execute them.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::forecastability::{h_objective, DENSITY_FLOOR};
use crate::linalg::{norm, SymmetricMatrix};
use crate::par;
use crate::spectrum::{combination_density, SpectralMatrixSequence};

/// Knobs for the iteration. Defaults: gap tolerance 1e-8, at most 200
/// iterations, 5 random restarts.
#[derive(Clone, Copy, Debug)]
pub struct EmConfig {
    /// Stop when the sign-aligned step `||w_{i+1} - w_i||` falls below this.
    pub tol: f64,
    /// Iteration cap per restart; hitting it is reported, not an error.
    pub max_iter: usize,
    /// Number of random starting vectors per component.
    pub restarts: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            tol: 1e-8,
            max_iter: 200,
            restarts: 5,
        }
    }
}

/// Per-run diagnostics. `objective_values[i]` is the objective at iterate
/// `i` (starting vector included), non-increasing within 1e-12 per step.
#[derive(Clone, Debug)]
pub struct EmTrace {
    pub objective_values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `||w_final - w_previous||` after sign alignment.
    pub final_gap: f64,
}

/// Best run for one component.
#[derive(Clone, Debug)]
pub struct ComponentFit {
    /// Unit vector in the searched space.
    pub loading: Vec<f64>,
    /// `1 - lambda_min`.
    pub omega: f64,
    /// Smallest quadratic form of the converged weighted spectrum.
    pub lambda_min: f64,
    pub trace: EmTrace,
    /// Index of the winning restart.
    pub restart: usize,
}

/// Entropy-weighted spectrum `Sbar(w) = -sum_j S_j ln(q_j) / ln(n_bins)`
/// with `q_j = w^T S_j w` clamped below at the density floor before the
/// log, so a zero-weight bin contributes a finite (bounded) coefficient.
/// Positive semidefinite whenever the sequence is, and
/// `w^T Sbar(w) w` equals the entropy objective within 1e-10.
pub fn weighted_spectrum(
    w: &[f64],
    seq: &SpectralMatrixSequence,
) -> Result<SymmetricMatrix> {
    let density = combination_density(w, seq)?;
    let n_bins = density.n_bins();
    if n_bins < 2 {
        return Err(Error::UndefinedNormalization { n_bins });
    }
    let inv_ln = 1.0 / (n_bins as f64).ln();
    let coeffs: Vec<f64> = density
        .values()
        .iter()
        .map(|&q| -q.max(DENSITY_FLOOR).ln() * inv_ln)
        .collect();

    let n = seq.dim();
    let tri = n * (n + 1) / 2;
    let matrices = seq.matrices();
    // One packed entry per task; the inner bin loop runs in fixed order, so
    // the sums are identical no matter how entries are scheduled.
    let packed: Vec<f64> = par::map_indexed(tri, |idx| {
        let mut acc = 0.0;
        for (m, &c) in matrices.iter().zip(&coeffs) {
            acc += m.packed()[idx] * c;
        }
        acc
    });
    let mut out = SymmetricMatrix::zeros(n);
    out.packed_mut().copy_from_slice(&packed);
    Ok(out)
}

fn aligned_gap(next: &[f64], prev: &[f64]) -> f64 {
    let mut minus = 0.0;
    let mut plus = 0.0;
    for (a, b) in next.iter().zip(prev) {
        minus += (a - b) * (a - b);
        plus += (a + b) * (a + b);
    }
    minus.min(plus).sqrt()
}

/// One descent step: the smallest eigenvector of the weighted spectrum at
/// `w`, sign-flipped so its inner product with `w` is nonnegative
/// (eigenvectors are sign-ambiguous; alignment keeps the iterate path and
/// the convergence gap well defined).
pub fn em_step(w: &[f64], seq: &SpectralMatrixSequence) -> Result<Vec<f64>> {
    let sbar = weighted_spectrum(w, seq)?;
    let (_, mut v) = sbar.min_eigpair()?;
    let d: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
    if d < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    Ok(v)
}

/// Runs the iteration from `w0` until the sign-aligned step is below
/// `tol` or `max_iter` steps have run. Non-convergence is reported in the
/// trace, not as an error; a non-finite objective is an error naming the
/// iteration. Returns the final vector, its smallest quadratic form
/// `lambda_min = w^T Sbar(w) w`, and the trace.
pub fn em_run(
    w0: &[f64],
    seq: &SpectralMatrixSequence,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, EmTrace)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            message: format!("must be positive, got {tol}"),
        });
    }
    if max_iter == 0 {
        return Err(Error::InvalidParameter {
            name: "max_iter",
            message: "must be at least 1".into(),
        });
    }
    let nrm = norm(w0);
    if !nrm.is_finite() || nrm < 1e-9 {
        return Err(Error::InvalidParameter {
            name: "w0",
            message: format!("starting vector has unusable norm {nrm}"),
        });
    }
    let mut w: Vec<f64> = w0.iter().map(|x| x / nrm).collect();

    let h0 = h_objective(&w, seq)?;
    if !h0.is_finite() {
        return Err(Error::NumericalFailure { iteration: 0 });
    }
    let mut objective_values = vec![h0];
    let mut iterations = 0;
    let mut converged = false;
    let mut final_gap = f64::INFINITY;

    for it in 1..=max_iter {
        let next = em_step(&w, seq)?;
        let h = h_objective(&next, seq)?;
        if !h.is_finite() {
            return Err(Error::NumericalFailure { iteration: it });
        }
        objective_values.push(h);
        let gap = aligned_gap(&next, &w);
        w = next;
        iterations = it;
        final_gap = gap;
        if gap < tol {
            converged = true;
            break;
        }
    }

    let lambda_min = weighted_spectrum(&w, seq)?.qform(&w)?;
    Ok((
        w,
        lambda_min,
        EmTrace {
            objective_values,
            iterations,
            converged,
            final_gap,
        },
    ))
}

/// Starting vector: uniform draw from the hypercube `(-1, 1)^n`,
/// normalized; degenerate draws (norm below 1e-9) are redrawn.
fn draw_start(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nrm = norm(&v);
        if nrm > 1e-9 {
            return v.iter().map(|x| x / nrm).collect();
        }
    }
}

/// PRNG for one (component, restart) cell: a fixed seed selects the
/// generator, and the stream index packs the pair, so every restart is an
/// independent, reproducible stream regardless of execution order.
fn restart_rng(seed: u64, component: usize, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((component as u64) << 32) | restart as u64);
    rng
}

/// Searches for the most forecastable unit vector under `seq`: runs the
/// iteration from `cfg.restarts` random starts (in parallel when enabled)
/// and keeps the run with the smallest final objective, ties to the lowest
/// restart index. Errors only if every restart failed numerically.
pub fn fit_component(
    seq: &SpectralMatrixSequence,
    cfg: &EmConfig,
    seed: u64,
    component: usize,
) -> Result<ComponentFit> {
    if cfg.restarts == 0 {
        return Err(Error::InvalidParameter {
            name: "restarts",
            message: "must be at least 1".into(),
        });
    }
    let n = seq.dim();
    let runs: Vec<Result<(Vec<f64>, f64, EmTrace)>> =
        par::map_indexed(cfg.restarts, |r| {
            let mut rng = restart_rng(seed, component, r);
            let w0 = draw_start(&mut rng, n);
            em_run(&w0, seq, cfg.tol, cfg.max_iter)
        });

    let mut best: Option<(usize, Vec<f64>, f64, EmTrace)> = None;
    let mut last_err: Option<Error> = None;
    for (r, run) in runs.into_iter().enumerate() {
        match run {
            Ok((w, lambda, trace)) => {
                let obj = *trace.objective_values.last().unwrap();
                let replace = match &best {
                    None => true,
                    Some((_, _, _, best_trace)) => {
                        obj < *best_trace.objective_values.last().unwrap()
                    }
                };
                if replace {
                    best = Some((r, w, lambda, trace));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((restart, loading, lambda_min, trace)) => Ok(ComponentFit {
            loading,
            omega: 1.0 - lambda_min,
            lambda_min,
            trace,
            restart,
        }),
        None => Err(Error::AllRestartsFailed {
            restarts: cfg.restarts,
            last: Box::new(last_err.expect("restarts >= 1, so at least one error")),
        }),
    }
}
