//! Model persistence: a JSON manifest describing the architecture plus one
//! raw little-endian `f64` file holding every parameter block in declaration
//! order. Save followed by load is bitwise exact.

use crate::error::{NeuralError, Result};
use crate::model::{ModelSpec, NeuralHssModel};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const MODEL_MANIFEST_FILE: &str = "model.json";
pub const MODEL_PARAMS_FILE: &str = "params.bin";
pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelManifest {
    pub schema_version: u32,
    pub spec: ModelSpec,
    /// Activation slopes at save time, informational; `params.bin` is the
    /// source of truth.
    pub alphas: Vec<f64>,
    pub residual_scale: Option<f64>,
    pub init_seed: u64,
    pub init_scale: f64,
    pub param_count: usize,
    pub params_file: String,
}

pub fn save_model(
    dir: &Path,
    model: &NeuralHssModel,
    init_seed: u64,
    init_scale: f64,
) -> Result<ModelManifest> {
    fs::create_dir_all(dir)?;
    let params = model.write_params();
    let manifest = ModelManifest {
        schema_version: MODEL_SCHEMA_VERSION,
        spec: model.spec.clone(),
        alphas: model.alphas(),
        residual_scale: model.residual_scale,
        init_seed,
        init_scale,
        param_count: params.len(),
        params_file: MODEL_PARAMS_FILE.to_string(),
    };
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| NeuralError::Manifest(e.to_string()))?;
    fs::write(dir.join(MODEL_MANIFEST_FILE), json + "\n")?;
    let mut bytes = Vec::with_capacity(params.len() * 8);
    for p in &params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    fs::write(dir.join(MODEL_PARAMS_FILE), bytes)?;
    Ok(manifest)
}

pub fn load_model(dir: &Path) -> Result<(NeuralHssModel, ModelManifest)> {
    let manifest_path = dir.join(MODEL_MANIFEST_FILE);
    let json = fs::read_to_string(&manifest_path)?;
    let manifest: ModelManifest =
        serde_json::from_str(&json).map_err(|e| NeuralError::Manifest(e.to_string()))?;
    if manifest.schema_version != MODEL_SCHEMA_VERSION {
        return Err(NeuralError::Manifest(format!(
            "schema version {} unsupported (expected {})",
            manifest.schema_version, MODEL_SCHEMA_VERSION
        )));
    }
    let bytes = fs::read(dir.join(&manifest.params_file))?;
    if bytes.len() != manifest.param_count * 8 {
        return Err(NeuralError::Manifest(format!(
            "parameter file {} holds {} bytes, manifest expects {}",
            manifest.params_file,
            bytes.len(),
            manifest.param_count * 8
        )));
    }
    let params: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut model = NeuralHssModel::build(&manifest.spec, manifest.init_seed, manifest.init_scale)?;
    model.read_params(&params)?;
    model.residual_scale = manifest.residual_scale;
    let alphas = model.alphas();
    if alphas != manifest.alphas {
        return Err(NeuralError::Manifest(
            "manifest alphas disagree with the parameter file".to_string(),
        ));
    }
    Ok((model, manifest))
}
