//! Experiment configuration: one file fixes every seed and size of a run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::DatasetSpec;
use crate::latent::FeatureEncoder;
use crate::metrics::{GarSpec, ProbeGrid};
use crate::training::{GALossConfig, TrainRunConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSpec {
    pub latent_dim: usize,
    pub seed: u64,
    /// Observation noise on encoded training states.
    pub obs_noise_sigma: f64,
    /// Per-step latent sampling noise of the learned world model at
    /// evaluation time.
    pub gen_noise_sigma: f64,
}

impl Default for EncoderSpec {
    fn default() -> Self {
        EncoderSpec {
            latent_dim: 16,
            seed: 3,
            obs_noise_sigma: 0.0,
            gen_noise_sigma: 0.02,
        }
    }
}

impl EncoderSpec {
    pub fn build(&self) -> Result<FeatureEncoder> {
        FeatureEncoder::new(self.latent_dim, self.seed, self.obs_noise_sigma)
    }
}

/// Prediction-only training that every run starts from. The GA objective
/// is only ever applied while fine-tuning this network. Batch size,
/// optimizer, width, init and clipping come from `[train]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainSpec {
    /// `0` disables pretraining: runs start from the random init.
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for PretrainSpec {
    fn default() -> Self {
        PretrainSpec {
            steps: 10000,
            learning_rate: 3e-3,
            seed: 5,
        }
    }
}

impl PretrainSpec {
    pub fn run_config(&self, train: &TrainRunConfig) -> TrainRunConfig {
        TrainRunConfig {
            steps: self.steps,
            learning_rate: self.learning_rate,
            seed: self.seed,
            ..train.clone()
        }
    }
}

/// Sweep axes for `ablate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSpec {
    pub lambdas: Vec<f64>,
    pub spans: Vec<usize>,
}

impl Default for AblationSpec {
    fn default() -> Self {
        AblationSpec {
            lambdas: vec![0.0, 0.1, 0.5, 1.0],
            spans: vec![2, 4, 6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub dataset: DatasetSpec,
    pub encoder: EncoderSpec,
    pub pretrain: PretrainSpec,
    pub train: TrainRunConfig,
    pub ga: GALossConfig,
    pub probes: ProbeGrid,
    pub gar: GarSpec,
    pub ablation: AblationSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            output_dir: PathBuf::from("runs/default"),
            dataset: DatasetSpec::default(),
            encoder: EncoderSpec::default(),
            pretrain: PretrainSpec::default(),
            train: TrainRunConfig::default(),
            ga: GALossConfig::default(),
            probes: ProbeGrid::default(),
            gar: GarSpec::default(),
            ablation: AblationSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigFormat {
    Toml,
    Json,
}

impl ConfigFormat {
    /// `.json` selects JSON; anything else is read as TOML.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ConfigFormat::Json,
            _ => ConfigFormat::Toml,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.dataset.actions.validate()?;
        self.train.validate()?;
        if self.pretrain.steps > 0 {
            self.pretrain.run_config(&self.train).validate()?;
        }
        self.ga.validate()?;
        self.probes.settings()?;
        if self.encoder.latent_dim < 4 {
            return Err(Error::InvalidArgument(format!(
                "latent_dim must be >= 4, got {}",
                self.encoder.latent_dim
            )));
        }
        for s in [self.encoder.obs_noise_sigma, self.encoder.gen_noise_sigma] {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "noise sigmas must be finite and >= 0, got {s}"
                )));
            }
        }
        if self.gar.n_rollouts < 2 {
            return Err(Error::InvalidArgument("gar.n_rollouts must be >= 2".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str, format: ConfigFormat) -> Result<Self> {
        let cfg: ExperimentConfig = match format {
            ConfigFormat::Toml => toml::from_str(text).map_err(|e| Error::parse("config", e))?,
            ConfigFormat::Json => {
                serde_json::from_str(text).map_err(|e| Error::parse("config", e))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn render(&self, format: ConfigFormat) -> String {
        match format {
            ConfigFormat::Toml => toml::to_string(self).expect("config serializes to TOML"),
            ConfigFormat::Json => {
                serde_json::to_string_pretty(self).expect("config serializes to JSON") + "\n"
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, ConfigFormat::from_path(path))
    }

    /// Canonical JSON bytes; the config hash is taken over these.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("config serializes to JSON")
    }

    pub fn data_dir(&self) -> PathBuf {
        if self.train.dataset.is_absolute() {
            self.train.dataset.clone()
        } else {
            self.output_dir.join(&self.train.dataset)
        }
    }

    /// Replaces every top-level seed with one derived from `seed`.
    pub fn reseed(&mut self, seed: u64) {
        use crate::rng::derive_seed;
        self.dataset.seed = derive_seed(seed, &[1]);
        self.encoder.seed = derive_seed(seed, &[2]);
        self.train.seed = derive_seed(seed, &[3]);
        self.ga.dirichlet.seed = derive_seed(seed, &[4]);
        self.probes.seed = derive_seed(seed, &[5]);
        self.gar.seed = derive_seed(seed, &[6]);
        self.pretrain.seed = derive_seed(seed, &[7]);
    }
}
