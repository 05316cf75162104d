//! The on-disk model document: a versioned JSON object holding everything
//! needed to reproduce transforms, with floats written to 17 significant
//! digits so stored values round-trip exactly.

use std::io;
use std::path::Path;

use foreca::whitening::WhiteningTransform;
use foreca::{ForecaModel, ForecaModelParts, Mat, SymmetricMatrix};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSummary {
    pub iterations: usize,
    pub converged: bool,
    pub final_gap: f64,
    pub objective_values: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub schema_version: u32,
    pub n_channels: usize,
    pub n_components: usize,
    pub column_names: Vec<String>,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub inv_sqrt_cov: Vec<Vec<f64>>,
    pub rcond: f64,
    pub loadings_whitened: Vec<Vec<f64>>,
    pub loadings_original: Vec<Vec<f64>>,
    pub omega: Vec<f64>,
    pub lambda_min: Vec<f64>,
    pub traces: Vec<TraceSummary>,
    pub restart_chosen: Vec<usize>,
    pub segment_length: usize,
    pub seed: u64,
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
}

pub fn from_model(model: &ForecaModel) -> ModelFile {
    let whitener = model.whitener();
    ModelFile {
        schema_version: SCHEMA_VERSION,
        n_channels: model.n_channels(),
        n_components: model.n_components(),
        column_names: model.column_names().to_vec(),
        mean: whitener.mean().to_vec(),
        covariance: whitener.covariance().to_rows(),
        inv_sqrt_cov: whitener.inv_sqrt_cov().to_rows(),
        rcond: whitener.rcond(),
        loadings_whitened: model.loadings_whitened().to_rows(),
        loadings_original: model.loadings_original().to_rows(),
        omega: model.omega().to_vec(),
        lambda_min: model.lambda_min().to_vec(),
        traces: model
            .traces()
            .iter()
            .map(|t| TraceSummary {
                iterations: t.iterations,
                converged: t.converged,
                final_gap: t.final_gap,
                objective_values: t.objective_values.clone(),
            })
            .collect(),
        restart_chosen: model.restart_chosen().to_vec(),
        segment_length: model.segment_length(),
        seed: model.seed(),
        restarts: model.restarts(),
        tol: model.tol(),
        max_iter: model.max_iter(),
    }
}

/// Rebuilds and re-validates the model; stored diagnostics (traces) are not
/// reattached since they describe the original fitting run only.
pub fn into_model(file: ModelFile) -> Result<ForecaModel, CliError> {
    if file.schema_version != SCHEMA_VERSION {
        return Err(CliError::Input(format!(
            "unsupported model schema version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    let covariance = SymmetricMatrix::from_rows(file.covariance, 1e-12)?;
    let inv_sqrt_cov = SymmetricMatrix::from_rows(file.inv_sqrt_cov, 1e-12)?;
    let whitener = WhiteningTransform::from_parts(file.mean, covariance, inv_sqrt_cov, file.rcond)?;
    let parts = ForecaModelParts {
        column_names: file.column_names,
        whitener,
        loadings_whitened: Mat::from_rows(file.loadings_whitened)?,
        loadings_original: Mat::from_rows(file.loadings_original)?,
        omega: file.omega,
        lambda_min: file.lambda_min,
        segment_length: file.segment_length,
        seed: file.seed,
        restarts: file.restarts,
        tol: file.tol,
        max_iter: file.max_iter,
    };
    let model = ForecaModel::from_parts(parts)?;
    if model.n_channels() != file.n_channels || model.n_components() != file.n_components {
        return Err(CliError::Input(format!(
            "model file header claims {} channels / {} components but the stored matrices are {}x{}",
            file.n_channels,
            file.n_components,
            model.n_components(),
            model.n_channels()
        )));
    }
    Ok(model)
}

pub fn load(path: &Path) -> Result<ModelFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: invalid model file: {e}", path.display())))
}

/// JSON with every float at 17 significant digits.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

pub fn to_json_bytes(file: &ModelFile) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    file.serialize(&mut ser)
        .expect("in-memory model serialization cannot fail");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_are_written_with_17_significant_digits() {
        let file = ModelFile {
            schema_version: 1,
            n_channels: 1,
            n_components: 1,
            column_names: vec!["c1".into()],
            mean: vec![0.1],
            covariance: vec![vec![1.0]],
            inv_sqrt_cov: vec![vec![1.0]],
            rcond: 1.0,
            loadings_whitened: vec![vec![1.0]],
            loadings_original: vec![vec![1.0]],
            omega: vec![0.5],
            lambda_min: vec![0.5],
            traces: vec![],
            restart_chosen: vec![],
            segment_length: 64,
            seed: 0,
            restarts: 5,
            tol: 1e-8,
            max_iter: 200,
        };
        let text = String::from_utf8(to_json_bytes(&file)).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        let back: ModelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.mean[0].to_bits(), 0.1f64.to_bits());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = serde_json::from_str::<ModelFile>("{\"schema_version\":1,\"surprise\":true}")
            .unwrap_err();
        assert!(err.to_string().contains("surprise"));
    }
}
