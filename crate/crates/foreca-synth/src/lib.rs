//! Synthetic time-series generators and brute-force oracles for testing
//! the `foreca` crate. Everything here is bitwise deterministic given a
//! seed, so derived test values can be frozen as regression constants.

mod oracle;

pub use oracle::{angle_sweep_oracle, omega_population_ar1};

use foreca::{Mat, TimeSeriesMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("AR coefficients {coeffs:?} are non-stationary (reflection coefficient {reflection} has magnitude >= 1)")]
    NonStationary { coeffs: Vec<f64>, reflection: f64 },
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },
    #[error("mixing matrix is singular (pivot {pivot:.3e} at elimination column {column})")]
    SingularMixing { pivot: f64, column: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Foreca(#[from] foreca::Error),
}

pub type Result<T> = std::result::Result<T, SynthError>;

#[derive(Clone, Debug)]
enum Kind {
    WhiteNoise {
        sd: f64,
    },
    Ar {
        coeffs: Vec<f64>,
    },
    Sinusoid {
        frequency: f64,
        amplitude: f64,
        noise_sd: f64,
    },
    /// `sqrt(2) cos(2 pi Y t + theta)` with `Y` drawn once per realization
    /// from a discrete frequency distribution and `theta` uniform on
    /// `[0, 2 pi)`: individually a pure tone, marginally white across
    /// realizations, and perfectly forecastable either way.
    Harmonic {
        frequencies: Vec<f64>,
        probabilities: Vec<f64>,
    },
}

/// One univariate process to simulate: a kind, a length, and a seed.
/// Constructors validate parameters, so a constructed spec always
/// generates.
#[derive(Clone, Debug)]
pub struct ProcessSpec {
    kind: Kind,
    t: usize,
    seed: u64,
}

/// Stationarity of the AR polynomial `1 - c_1 z - ... - c_p z^p` via the
/// step-down (reverse Levinson) recursion: the process is stationary iff
/// every reflection coefficient has magnitude below 1. Pure arithmetic,
/// no root finding.
fn check_stationary(coeffs: &[f64]) -> Result<()> {
    let mut a = coeffs.to_vec();
    for m in (1..=coeffs.len()).rev() {
        let k = a[m - 1];
        if !(k.abs() < 1.0) {
            return Err(SynthError::NonStationary {
                coeffs: coeffs.to_vec(),
                reflection: k,
            });
        }
        if m > 1 {
            let denom = 1.0 - k * k;
            let prev: Vec<f64> = (0..m - 1)
                .map(|j| (a[j] + k * a[m - 2 - j]) / denom)
                .collect();
            a = prev;
        }
    }
    Ok(())
}

fn require_length(t: usize) -> Result<()> {
    if t == 0 {
        return Err(SynthError::InvalidParameter {
            name: "t",
            message: "length must be positive".into(),
        });
    }
    Ok(())
}

impl ProcessSpec {
    pub fn white_noise(sd: f64, t: usize, seed: u64) -> Result<Self> {
        require_length(t)?;
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(SynthError::InvalidParameter {
                name: "sd",
                message: format!("must be a positive real, got {sd}"),
            });
        }
        Ok(ProcessSpec {
            kind: Kind::WhiteNoise { sd },
            t,
            seed,
        })
    }

    /// AR(p) with unit-variance Gaussian innovations:
    /// `x_t = sum_j coeffs[j] x_{t-1-j} + e_t`.
    pub fn ar(coeffs: Vec<f64>, t: usize, seed: u64) -> Result<Self> {
        require_length(t)?;
        if coeffs.is_empty() || !coeffs.iter().all(|c| c.is_finite()) {
            return Err(SynthError::InvalidParameter {
                name: "coeffs",
                message: "need at least one finite coefficient".into(),
            });
        }
        check_stationary(&coeffs)?;
        Ok(ProcessSpec {
            kind: Kind::Ar { coeffs },
            t,
            seed,
        })
    }

    /// `amplitude * sin(2 pi frequency t + phase) + noise`, with the phase
    /// drawn uniformly from the seed. Frequency is in cycles per sample,
    /// in `(0, 0.5]`.
    pub fn sinusoid(frequency: f64, amplitude: f64, noise_sd: f64, t: usize, seed: u64) -> Result<Self> {
        require_length(t)?;
        if !(frequency > 0.0 && frequency <= 0.5) {
            return Err(SynthError::InvalidParameter {
                name: "frequency",
                message: format!("must be in (0, 0.5] cycles per sample, got {frequency}"),
            });
        }
        if !(amplitude > 0.0) || !(noise_sd >= 0.0) {
            return Err(SynthError::InvalidParameter {
                name: "amplitude",
                message: format!(
                    "need amplitude > 0 and noise_sd >= 0, got {amplitude} and {noise_sd}"
                ),
            });
        }
        Ok(ProcessSpec {
            kind: Kind::Sinusoid {
                frequency,
                amplitude,
                noise_sd,
            },
            t,
            seed,
        })
    }

    /// Random pure tone: frequency drawn from the discrete distribution
    /// (`frequencies[i]` with probability `probabilities[i]`), phase
    /// uniform.
    pub fn harmonic(
        frequencies: Vec<f64>,
        probabilities: Vec<f64>,
        t: usize,
        seed: u64,
    ) -> Result<Self> {
        require_length(t)?;
        if frequencies.is_empty() || frequencies.len() != probabilities.len() {
            return Err(SynthError::InvalidParameter {
                name: "frequencies",
                message: "need equally many frequencies and probabilities, at least one".into(),
            });
        }
        if !frequencies.iter().all(|f| *f > 0.0 && *f <= 0.5) {
            return Err(SynthError::InvalidParameter {
                name: "frequencies",
                message: "frequencies must lie in (0, 0.5] cycles per sample".into(),
            });
        }
        let sum: f64 = probabilities.iter().sum();
        if !probabilities.iter().all(|p| *p >= 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(SynthError::InvalidParameter {
                name: "probabilities",
                message: format!("must be nonnegative and sum to 1, sum is {sum}"),
            });
        }
        Ok(ProcessSpec {
            kind: Kind::Harmonic {
                frequencies,
                probabilities,
            },
            t,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.t
    }

    pub fn is_empty(&self) -> bool {
        self.t == 0
    }

    /// Simulates the process: one vector of length `t`, bitwise
    /// deterministic given the seed. AR runs `10 p` burn-in steps from
    /// zero initial conditions and discards them.
    pub fn generate(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        match &self.kind {
            Kind::WhiteNoise { sd } => (0..self.t)
                .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            Kind::Ar { coeffs } => {
                let p = coeffs.len();
                let burn = 10 * p;
                let mut x = Vec::with_capacity(burn + self.t);
                for i in 0..burn + self.t {
                    let mut v: f64 = rng.sample(StandardNormal);
                    for (j, c) in coeffs.iter().enumerate() {
                        if i > j {
                            v += c * x[i - 1 - j];
                        }
                    }
                    x.push(v);
                }
                x.split_off(burn)
            }
            Kind::Sinusoid {
                frequency,
                amplitude,
                noise_sd,
            } => {
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                (0..self.t)
                    .map(|i| {
                        let s = amplitude
                            * (std::f64::consts::TAU * frequency * i as f64 + phase).sin();
                        if *noise_sd > 0.0 {
                            s + noise_sd * rng.sample::<f64, _>(StandardNormal)
                        } else {
                            s
                        }
                    })
                    .collect()
            }
            Kind::Harmonic {
                frequencies,
                probabilities,
            } => {
                let u: f64 = rng.gen_range(0.0..1.0);
                let mut cum = 0.0;
                let mut y = *frequencies.last().unwrap();
                for (f, p) in frequencies.iter().zip(probabilities) {
                    cum += p;
                    if u < cum {
                        y = *f;
                        break;
                    }
                }
                let theta = rng.gen_range(0.0..std::f64::consts::TAU);
                (0..self.t)
                    .map(|i| {
                        std::f64::consts::SQRT_2
                            * (std::f64::consts::TAU * y * i as f64 + theta).cos()
                    })
                    .collect()
            }
        }
    }
}

/// Checks invertibility by Gaussian elimination with partial pivoting;
/// a pivot below `1e-12` times the matrix scale counts as singular.
fn ensure_invertible(a: &Mat) -> Result<()> {
    let n = a.rows();
    if n != a.cols() {
        return Err(SynthError::Dimension(format!(
            "mixing matrix must be square, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let scale = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a.get(i, j).abs())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut work: Vec<Vec<f64>> = a.to_rows();
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, work[r][col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if pivot < 1e-12 * scale {
            return Err(SynthError::SingularMixing { pivot, column: col });
        }
        work.swap(col, pivot_row);
        for r in col + 1..n {
            let f = work[r][col] / work[col][col];
            for c in col..n {
                work[r][c] -= f * work[col][c];
            }
        }
    }
    Ok(())
}

/// Mixes source columns into observed channels: `X = S A^T`, so row `i`
/// of `A` holds the source weights of observed channel `i`.
pub fn mix(sources: &Mat, a: &Mat) -> Result<TimeSeriesMatrix> {
    if a.cols() != sources.cols() {
        return Err(SynthError::Dimension(format!(
            "{} sources but mixing matrix has {} columns",
            sources.cols(),
            a.cols()
        )));
    }
    ensure_invertible(a)?;
    let x = sources.matmul_nt(a)?;
    Ok(TimeSeriesMatrix::from_mat(x, None)?)
}

/// Stacks generated processes as the columns of a source matrix; all
/// specs must share the same length.
pub fn generate_matrix(specs: &[ProcessSpec]) -> Result<Mat> {
    if specs.is_empty() {
        return Err(SynthError::InvalidParameter {
            name: "specs",
            message: "need at least one process".into(),
        });
    }
    let t = specs[0].len();
    if !specs.iter().all(|s| s.len() == t) {
        return Err(SynthError::Dimension(
            "all processes must have the same length".into(),
        ));
    }
    let columns: Vec<Vec<f64>> = specs.iter().map(|s| s.generate()).collect();
    Ok(Mat::from_fn(t, specs.len(), |r, c| columns[c][r]))
}

/// Convenience: generate and mix in one call.
pub fn mixed_series(specs: &[ProcessSpec], a: &Mat) -> Result<TimeSeriesMatrix> {
    let sources = generate_matrix(specs)?;
    mix(&sources, a)
}

/// A rotation matrix, handy for planting directions in two channels.
pub fn rotation2(theta: f64) -> Mat {
    let (s, c) = theta.sin_cos();
    Mat::from_rows(vec![vec![c, -s], vec![s, c]]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use foreca::spectrum::sample_acf;

    #[test]
    fn stationarity_gate() {
        assert!(ProcessSpec::ar(vec![0.9], 100, 0).is_ok());
        assert!(ProcessSpec::ar(vec![1.35, -0.45], 100, 0).is_ok());
        assert!(ProcessSpec::ar(vec![1.7, -0.72], 100, 0).is_ok());
        for bad in [vec![1.0], vec![1.5], vec![0.5, 0.5], vec![-1.0]] {
            assert!(
                matches!(
                    ProcessSpec::ar(bad.clone(), 100, 0),
                    Err(SynthError::NonStationary { .. })
                ),
                "{bad:?} should be rejected"
            );
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = ProcessSpec::ar(vec![0.7], 256, 42).unwrap();
        assert_eq!(spec.generate(), spec.generate());
        let other = ProcessSpec::ar(vec![0.7], 256, 43).unwrap();
        assert_ne!(spec.generate(), other.generate());
    }

    #[test]
    fn white_noise_moments() {
        let spec = ProcessSpec::white_noise(2.0, 8192, 7).unwrap();
        let y = spec.generate();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / y.len() as f64;
        assert!(mean.abs() < 0.1, "mean {mean}");
        assert!((var - 4.0).abs() < 0.4, "variance {var}");
    }

    #[test]
    fn ar_one_matches_the_population_autocorrelation() {
        let spec = ProcessSpec::ar(vec![0.9], 8192, 11).unwrap();
        let y = spec.generate();
        let acf = sample_acf(&y, 1).unwrap();
        assert!((acf.rho[1] - 0.9).abs() < 0.05, "rho(1) = {}", acf.rho[1]);
    }

    #[test]
    fn noiseless_sinusoid_is_periodic() {
        let spec = ProcessSpec::sinusoid(0.1, 1.0, 0.0, 400, 3).unwrap();
        let y = spec.generate();
        for i in 0..y.len() - 10 {
            assert!((y[i + 10] - y[i]).abs() < 1e-9, "period break at {i}");
        }
    }

    #[test]
    fn harmonic_is_a_bounded_pure_tone() {
        let spec = ProcessSpec::harmonic(vec![0.1, 0.25], vec![0.5, 0.5], 512, 9).unwrap();
        let y = spec.generate();
        assert_eq!(y, spec.generate());
        let bound = std::f64::consts::SQRT_2 + 1e-12;
        assert!(y.iter().all(|v| v.abs() <= bound));
        // A pure tone satisfies the second-order recurrence
        // x_{t+1} + x_{t-1} = 2 cos(2 pi Y) x_t.
        let c = (y[2] + y[0]) / y[1];
        for t in 2..y.len() - 1 {
            assert!((y[t + 1] + y[t - 1] - c * y[t]).abs() < 1e-6);
        }
    }

    #[test]
    fn mixing_by_rotations() {
        let specs = [
            ProcessSpec::white_noise(1.0, 64, 1).unwrap(),
            ProcessSpec::white_noise(1.0, 64, 2).unwrap(),
        ];
        let sources = generate_matrix(&specs).unwrap();
        let id = mix(&sources, &rotation2(0.0)).unwrap();
        for r in 0..64 {
            assert_eq!(id.data().get(r, 0), sources.get(r, 0));
            assert_eq!(id.data().get(r, 1), sources.get(r, 1));
        }
        // Rotation by pi/2: x1 = -s2, x2 = s1.
        let quarter = mix(&sources, &rotation2(std::f64::consts::FRAC_PI_2)).unwrap();
        for r in 0..64 {
            assert!((quarter.data().get(r, 0) + sources.get(r, 1)).abs() < 1e-12);
            assert!((quarter.data().get(r, 1) - sources.get(r, 0)).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_mixing_is_rejected() {
        let specs = [
            ProcessSpec::white_noise(1.0, 32, 1).unwrap(),
            ProcessSpec::white_noise(1.0, 32, 2).unwrap(),
        ];
        let sources = generate_matrix(&specs).unwrap();
        let a = Mat::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            mix(&sources, &a),
            Err(SynthError::SingularMixing { .. })
        ));
    }
}
