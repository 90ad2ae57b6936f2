//! Versioned JSON weights file with base64 little-endian `f64` payloads.

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::network::{Dense, InputTransform, NetworkWeights, OutputHead};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ActivationSpec {
    input: String,
    hidden: String,
    aggregation: String,
    output: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerRecord {
    name: String,
    rows: usize,
    cols: usize,
    weight: String,
    bias: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightsFile {
    version: u32,
    model: String,
    layer_dims: Vec<[usize; 2]>,
    activation_spec: ActivationSpec,
    param_order: Vec<String>,
    trained_steps: u64,
    #[serde(default)]
    loss_lambda: f64,
    psi_layers: usize,
    layers: Vec<LayerRecord>,
}

fn encode(values: impl Iterator<Item = f64>) -> String {
    let bytes: Vec<u8> = values.flat_map(f64::to_le_bytes).collect();
    STANDARD.encode(bytes)
}

fn decode(s: &str, expected: usize, context: &str) -> Result<Vec<f64>> {
    let fail = |message: String| Error::WeightsFormat {
        context: context.to_string(),
        message,
    };
    let bytes = STANDARD
        .decode(s)
        .map_err(|e| fail(format!("invalid base64: {e}")))?;
    if bytes.len() != expected * 8 {
        return Err(fail(format!(
            "expected {expected} values ({} bytes), found {} bytes",
            expected * 8,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
        return Err(fail(format!("non-finite value at offset {pos}")));
    }
    Ok(values)
}

pub fn to_json(w: &NetworkWeights) -> Result<String> {
    let n_psi = w.psi.len();
    let layers = w
        .layers()
        .enumerate()
        .map(|(i, l)| LayerRecord {
            name: if i < n_psi {
                format!("psi.{i}")
            } else {
                format!("phi.{}", i - n_psi)
            },
            rows: l.output_dim(),
            cols: l.input_dim(),
            weight: encode(l.weight.iter().copied()),
            bias: encode(l.bias.iter().copied()),
        })
        .collect();
    let file = WeightsFile {
        version: FORMAT_VERSION,
        model: w.head.name().into(),
        layer_dims: w.layer_dims().iter().map(|&(i, o)| [i, o]).collect(),
        activation_spec: ActivationSpec {
            input: w.input_transform.name().into(),
            hidden: "relu".into(),
            aggregation: "mean".into(),
            output: w.head.activations().iter().map(|s| s.to_string()).collect(),
        },
        param_order: w.head.param_names().iter().map(|s| s.to_string()).collect(),
        trained_steps: w.trained_steps,
        loss_lambda: w.loss_lambda,
        psi_layers: n_psi,
        layers,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn from_json(s: &str) -> Result<NetworkWeights> {
    let file: WeightsFile = serde_json::from_str(s).map_err(|e| Error::WeightsFormat {
        context: "header".into(),
        message: e.to_string(),
    })?;
    let header = |message: String| Error::WeightsFormat {
        context: "header".into(),
        message,
    };
    if file.version != FORMAT_VERSION {
        return Err(header(format!(
            "unsupported version {} (expected {FORMAT_VERSION})",
            file.version
        )));
    }
    let head = OutputHead::from_name(&file.model)
        .ok_or_else(|| header(format!("unknown model {:?}", file.model)))?;
    let input_transform = InputTransform::from_name(&file.activation_spec.input)
        .ok_or_else(|| header(format!("unknown input transform {:?}", file.activation_spec.input)))?;
    if file.layers.len() != file.layer_dims.len() || file.psi_layers > file.layers.len() {
        return Err(header("layer count does not match layer_dims".into()));
    }
    let mut dense = Vec::with_capacity(file.layers.len());
    for (i, (rec, dims)) in file.layers.iter().zip(&file.layer_dims).enumerate() {
        let context = format!("layer {i} ({})", rec.name);
        if [rec.cols, rec.rows] != *dims {
            return Err(Error::WeightsFormat {
                context,
                message: format!(
                    "shape {}x{} disagrees with layer_dims {:?}",
                    rec.rows, rec.cols, dims
                ),
            });
        }
        let wv = decode(&rec.weight, rec.rows * rec.cols, &format!("{context} weight"))?;
        let bv = decode(&rec.bias, rec.rows, &format!("{context} bias"))?;
        dense.push(Dense {
            weight: Array2::from_shape_vec((rec.rows, rec.cols), wv).expect("checked length"),
            bias: Array1::from_vec(bv),
        });
    }
    let phi = dense.split_off(file.psi_layers);
    let w = NetworkWeights {
        psi: dense,
        phi,
        head,
        input_transform,
        trained_steps: file.trained_steps,
        loss_lambda: file.loss_lambda,
    };
    w.validate().map_err(|e| header(e.to_string()))?;
    Ok(w)
}

pub fn save_weights(w: &NetworkWeights, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(w)?)?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<NetworkWeights> {
    from_json(&std::fs::read_to_string(path)?)
}
