//! Portable JSON checkpoints.
//!
//! ```json
//! {
//!   "format": "qgate-dueling-net",
//!   "version": 1,
//!   "seed": 7,
//!   "updates": 1200,
//!   "architecture": { "input": 8, "actions": 2, "encoder": [64, 64], ... },
//!   "layers": [ { "inputs": 8, "outputs": 64, "activation": "relu",
//!                 "weights": [...row-major...], "biases": [...] }, ... ]
//! }
//! ```
//!
//! Layers appear encoder first, then the value head, then the advantage head.
//! Floats are written with shortest round-trip formatting, so a load after a
//! save reproduces every parameter bit for bit.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, Architecture, DuelingNet};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "qgate-dueling-net";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub updates: u64,
    pub architecture: Architecture,
    pub layers: Vec<LayerRecord>,
}

impl Checkpoint {
    pub fn from_net(net: &DuelingNet) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            seed: net.seed,
            updates: net.updates,
            architecture: net.arch.clone(),
            layers: net
                .layers()
                .map(|l| LayerRecord {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    activation: l.activation,
                    weights: l.weights.iter().copied().collect(),
                    biases: l.biases.to_vec(),
                })
                .collect(),
        }
    }

    pub fn into_net(self) -> Result<DuelingNet> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let mut net = DuelingNet::zeros(self.architecture)?;
        let count = net.layers().count();
        if count != self.layers.len() {
            return Err(Error::ArchitectureMismatch(format!(
                "checkpoint has {} layers, architecture needs {count}",
                self.layers.len()
            )));
        }
        for (i, (layer, rec)) in net.layers_mut().zip(self.layers).enumerate() {
            if rec.inputs != layer.inputs()
                || rec.outputs != layer.outputs()
                || rec.activation != layer.activation
            {
                return Err(Error::ArchitectureMismatch(format!("layer {i} shape differs")));
            }
            layer.weights = Array2::from_shape_vec((rec.outputs, rec.inputs), rec.weights)
                .map_err(|e| Error::ArchitectureMismatch(format!("layer {i} weights: {e}")))?;
            if rec.biases.len() != rec.outputs {
                return Err(Error::ArchitectureMismatch(format!("layer {i} biases")));
            }
            layer.biases = Array1::from(rec.biases);
        }
        net.seed = self.seed;
        net.updates = self.updates;
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }
}

impl DuelingNet {
    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        Checkpoint::from_net(self).save(path)
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        Checkpoint::load(path)?.into_net()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let net = DuelingNet::new(Architecture::uniform(8, 2, 2, 1, 7), 99).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        net.save_checkpoint(&path).unwrap();
        let back = DuelingNet::load_checkpoint(&path).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn rejects_foreign_format() {
        let mut ck = Checkpoint::from_net(&DuelingNet::new(Architecture::uniform(2, 2, 1, 1, 2), 0).unwrap());
        ck.version = 9;
        assert!(ck.into_net().is_err());
    }
}
