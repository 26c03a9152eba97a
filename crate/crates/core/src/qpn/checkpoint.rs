//! Versioned JSON checkpoints.
//!
//! Weights are written as decimal text in their shortest round-trip form, so a loaded
//! network reproduces the saved one bit for bit.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dataset::{EncodingSchema, SplitFractions};
use crate::error::{Error, Result};

use super::network::{LayerSizes, Matrix, QpnNetwork};
use super::optimizer::TrainConfig;

pub const CHECKPOINT_FORMAT: &str = "p53qpn-checkpoint";
pub const CHECKPOINT_VERSION: &str = "1";

const SCHEMA_KEYS: [&str; 5] = ["wt_dict", "mut_dict", "cancer_dict", "numeric_ranges", "target_range"];

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: QpnNetwork,
    pub schema: EncodingSchema,
    pub config: TrainConfig,
    /// Fractions used when the training data had no split tags.
    pub split: Option<SplitFractions>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: String,
    layer_sizes: [usize; 3],
    hidden_weights: Vec<f64>,
    output_weights: Vec<f64>,
    schema: EncodingSchema,
    train_config: TrainConfig,
    #[serde(default)]
    split: Option<SplitFractions>,
}

pub fn save_checkpoint<W: Write>(out: W, checkpoint: &Checkpoint) -> Result<()> {
    let sizes = checkpoint.network.sizes();
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION.into(),
        layer_sizes: [sizes.input, sizes.hidden, sizes.output],
        hidden_weights: checkpoint.network.hidden_weights().data.clone(),
        output_weights: checkpoint.network.output_weights().data.clone(),
        schema: checkpoint.schema.clone(),
        train_config: checkpoint.config.clone(),
        split: checkpoint.split,
    };
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, &file).map_err(|e| Error::CheckpointFormat(e.to_string()))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn load_checkpoint<R: Read>(mut input: R) -> Result<Checkpoint> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::CheckpointFormat(e.to_string()))?;

    if value.get("format").and_then(Value::as_str) != Some(CHECKPOINT_FORMAT) {
        return Err(Error::CheckpointFormat("not a p53qpn checkpoint".into()));
    }
    let version = match value.get("version") {
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
        None => String::new(),
    };
    if version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointVersion { found: version, expected: CHECKPOINT_VERSION.into() });
    }
    let schema = value.get("schema").ok_or_else(|| Error::CheckpointInconsistent("missing schema".into()))?;
    for key in SCHEMA_KEYS {
        if schema.get(key).is_none() {
            return Err(Error::CheckpointInconsistent(format!("schema is missing {key}")));
        }
    }

    let file: CheckpointFile = serde_json::from_value(value).map_err(|e| Error::CheckpointFormat(e.to_string()))?;
    file.schema.validate().map_err(|e| Error::CheckpointInconsistent(e.to_string()))?;
    let [input, hidden, output] = file.layer_sizes;
    if input != file.schema.feature_width() {
        return Err(Error::CheckpointInconsistent(format!(
            "network expects {input} inputs but the schema encodes {}",
            file.schema.feature_width()
        )));
    }
    let inconsistent = |e: Error| Error::CheckpointInconsistent(e.to_string());
    let hidden_m = Matrix::from_vec(hidden, input + 1, file.hidden_weights).map_err(inconsistent)?;
    let output_m = Matrix::from_vec(output, hidden + 1, file.output_weights).map_err(inconsistent)?;
    let network =
        QpnNetwork::from_weights(LayerSizes::new(input, hidden, output), hidden_m, output_m).map_err(inconsistent)?;
    Ok(Checkpoint { network, schema: file.schema, config: file.train_config, split: file.split })
}
