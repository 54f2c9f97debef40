use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DynamicsNet, FeatureEncoder, LearnedWorldModel};
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "gawm-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Network parameters plus the encoder that produced its latents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub latent_dim: usize,
    pub hidden: usize,
    pub encoder_seed: u64,
    pub obs_noise_sigma: f64,
    pub gen_noise_sigma: f64,
    pub steps: usize,
    pub projection: Vec<[f64; 4]>,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(
        encoder: &FeatureEncoder,
        net: &DynamicsNet,
        gen_noise_sigma: f64,
        steps: usize,
    ) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            latent_dim: net.latent_dim(),
            hidden: net.hidden(),
            encoder_seed: encoder.seed,
            obs_noise_sigma: encoder.obs_noise_sigma,
            gen_noise_sigma,
            steps,
            projection: encoder.projection_rows(),
            params: net.params().to_vec(),
        }
    }

    pub fn encoder(&self) -> Result<FeatureEncoder> {
        FeatureEncoder::from_projection(&self.projection, self.encoder_seed, self.obs_noise_sigma)
    }

    pub fn net(&self) -> Result<DynamicsNet> {
        DynamicsNet::from_params(self.latent_dim, self.hidden, self.params.clone())
    }

    pub fn world_model(&self, name: impl Into<String>) -> Result<LearnedWorldModel> {
        Ok(LearnedWorldModel::new(
            self.encoder()?,
            self.net()?,
            self.gen_noise_sigma,
            name,
        ))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec(self).expect("checkpoint serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_slice(bytes).map_err(|e| Error::parse("checkpoint", e))?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::parse(
                "checkpoint",
                format!("unsupported format {} v{}", ck.format, ck.version),
            ));
        }
        if ck.projection.len() != ck.latent_dim {
            return Err(Error::LengthMismatch {
                left: ck.latent_dim,
                right: ck.projection.len(),
            });
        }
        Ok(ck)
    }

    /// Hex SHA-256 of the serialized bytes.
    pub fn hash(&self) -> String {
        hex_digest(&self.to_bytes())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::data::write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
