//! End-to-end fitting properties: planted-direction recovery, component
//! orthogonality, score consistency, and behavior on structureless input.

mod common;

use common::omega_wosa;
use foreca::{ForecaParams, Mat, TimeSeriesMatrix};
use foreca_synth::{mixed_series, rotation2, ProcessSpec};

fn unit_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).abs()
}

/// Rotate (persistent AR, white noise) by a known angle: the top component
/// must recover the hidden AR direction with a clear forecastability gap.
#[test]
fn planted_rotation_is_recovered() {
    for (i, theta) in [0.3f64, 0.8, 1.2, 1.9, 2.6, 0.5, 1.5, 2.1, 2.9, 0.1]
        .iter()
        .enumerate()
    {
        let specs = [
            ProcessSpec::ar(vec![1.35, -0.45], 2048, 5000 + i as u64).unwrap(),
            ProcessSpec::white_noise(1.0, 2048, 6000 + i as u64).unwrap(),
        ];
        let x = mixed_series(&specs, &rotation2(*theta)).unwrap();
        let model = ForecaParams::new(2)
            .with_seed(7)
            .with_restarts(3)
            .fit(&x)
            .unwrap();

        let planted = [theta.cos(), theta.sin()];
        let cos = unit_cosine(&model.loadings_original().row(0), &planted);
        assert!(cos > 0.99, "theta {theta}: |cos| {cos}");
        assert!(
            model.omega()[0] > model.omega()[1] + 0.1,
            "theta {theta}: omegas {:?}",
            model.omega()
        );
    }
}

/// Transformed training components are uncorrelated with unit variance, the
/// whitened loadings are orthonormal, and each component's score is
/// consistent with rescoring its own output series.
#[test]
fn components_are_orthonormal_and_scores_consistent() {
    let specs = [
        ProcessSpec::ar(vec![0.8], 2048, 31).unwrap(),
        ProcessSpec::ar(vec![1.35, -0.45], 2048, 32).unwrap(),
        ProcessSpec::sinusoid(0.1, 1.0, 0.5, 2048, 33).unwrap(),
        ProcessSpec::white_noise(1.0, 2048, 34).unwrap(),
    ];
    let mixing = Mat::from_rows(vec![
        vec![0.9, -0.2, 0.4, 0.1],
        vec![0.3, 1.0, -0.5, 0.2],
        vec![-0.4, 0.6, 1.1, -0.3],
        vec![0.2, -0.1, 0.3, 0.9],
    ])
    .unwrap();
    let x = mixed_series(&specs, &mixing).unwrap();
    let model = ForecaParams::new(3).with_seed(11).fit(&x).unwrap();

    // Whitened loadings: rows orthonormal.
    let w = model.loadings_whitened();
    for i in 0..3 {
        for j in 0..3 {
            let dot: f64 = (0..4).map(|c| w.get(i, c) * w.get(j, c)).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((dot - expect).abs() <= 1e-8, "gram[{i}][{j}] = {dot}");
        }
    }

    // Corollary identity for every component.
    for k in 0..3 {
        assert!((model.omega()[k] - (1.0 - model.lambda_min()[k])).abs() <= 1e-8);
    }

    // Training transform: unit variance, zero cross-correlation.
    let z = model.transform(&x).unwrap();
    let t = z.len() as f64;
    for i in 0..3 {
        let yi = z.channel(i);
        let mean_i: f64 = yi.iter().sum::<f64>() / t;
        for j in i..3 {
            let yj = z.channel(j);
            let mean_j: f64 = yj.iter().sum::<f64>() / t;
            let cov: f64 = yi
                .iter()
                .zip(&yj)
                .map(|(a, b)| (a - mean_i) * (b - mean_j))
                .sum::<f64>()
                / t;
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((cov - expect).abs() <= 1e-6, "cov[{i}][{j}] = {cov}");
        }
    }

    // Rescoring each component series lands near the model's omega.
    for k in 0..3 {
        let rescored = omega_wosa(&z.channel(k));
        assert!(
            (rescored - model.omega()[k]).abs() <= 0.02,
            "component {k}: rescored {rescored} vs model {}",
            model.omega()[k]
        );
    }
}

/// Structureless input: every extracted component of iid noise scores near
/// zero and the loadings still form an orthonormal family.
#[test]
fn iid_noise_yields_unforecastable_components() {
    let rows: Vec<Vec<f64>> = {
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|c| ProcessSpec::white_noise(1.0, 2048, 700 + c).unwrap().generate())
            .collect();
        (0..2048).map(|t| cols.iter().map(|col| col[t]).collect()).collect()
    };
    let x = TimeSeriesMatrix::from_rows(rows, None).unwrap();
    let model = ForecaParams::new(4).with_seed(3).fit(&x).unwrap();
    for (k, omega) in model.omega().iter().enumerate() {
        assert!(*omega < 0.05, "component {k}: omega {omega}");
    }
    let w = model.loadings_whitened();
    for i in 0..4 {
        for j in 0..4 {
            let dot: f64 = (0..4).map(|c| w.get(i, c) * w.get(j, c)).sum();
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((dot - expect).abs() <= 1e-8);
        }
    }
}

/// With a single channel the fit reduces to scoring that series.
#[test]
fn single_channel_fit_reduces_to_omega() {
    let y = ProcessSpec::ar(vec![0.7], 2048, 77).unwrap().generate();
    let direct = omega_wosa(&y);
    let x = TimeSeriesMatrix::from_rows(y.iter().map(|&v| vec![v]).collect(), None).unwrap();
    let model = ForecaParams::new(1).with_seed(1).fit(&x).unwrap();
    assert!((model.omega()[0] - direct).abs() <= 1e-8);
}
