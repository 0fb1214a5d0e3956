//! Experiment files: one base training config plus the variants to compare.

use std::fs;
use std::path::{Path, PathBuf};

use mfpinn::training::{parse_scale, TrainConfig};
use mfpinn::Activation;
use serde::{Deserialize, Deserializer, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Prefix of every output file.
    pub label: String,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    pub train: TrainConfig,
    pub variants: Vec<Variant>,
}

/// Overrides of the base config for one table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    #[serde(default)]
    pub activation: Option<Activation>,
    #[serde(default, deserialize_with = "deserialize_opt_scale")]
    pub scale_b: Option<f64>,
    #[serde(default)]
    pub width: Option<usize>,
    #[serde(default)]
    pub epochs: Option<usize>,
    #[serde(default)]
    pub residual_epochs: Option<usize>,
}

fn deserialize_opt_scale<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Option::<Raw>::deserialize(d)? {
        None => Ok(None),
        Some(Raw::Num(v)) => Ok(Some(v)),
        Some(Raw::Text(s)) => parse_scale(&s).map(Some).map_err(serde::de::Error::custom),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let ok_name = |s: &str| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c));
        if !ok_name(&self.label) {
            return Err(CliError::Config(format!("label {:?} must be non-empty [A-Za-z0-9_.-]", self.label)));
        }
        if self.variants.is_empty() {
            return Err(CliError::Config("experiment has no variants".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for v in &self.variants {
            if !ok_name(&v.name) {
                return Err(CliError::Config(format!("variant name {:?} must be non-empty [A-Za-z0-9_.-]", v.name)));
            }
            if !seen.insert(&v.name) {
                return Err(CliError::Config(format!("duplicate variant {:?}", v.name)));
            }
            self.resolve(v, 0, None)?;
        }
        Ok(())
    }

    /// The training config of one variant, with seeds shifted by `seed_offset`
    /// and, if given, both stages' epochs replaced.
    pub fn resolve(&self, v: &Variant, seed_offset: u64, epochs_override: Option<usize>) -> Result<TrainConfig, CliError> {
        let mut c = self.train.clone();
        if let Some(a) = v.activation {
            c.network.activation = a;
        }
        if let Some(w) = v.width {
            c.network.width = w;
        }
        if let Some(b) = v.scale_b {
            c.scale_b = b;
        }
        if let Some(e) = v.epochs {
            c.epochs = e;
        }
        if let (Some(e), Some(r)) = (v.residual_epochs, c.residual.as_mut()) {
            r.epochs = e;
        }
        if let Some(e) = epochs_override {
            c.epochs = e;
            if let Some(r) = c.residual.as_mut() {
                r.epochs = e;
            }
        }
        c.seeds = c.seeds.iter().map(|s| s + seed_offset).collect();
        c.validate().map_err(|e| CliError::Config(format!("variant {}: {e}", v.name)))?;
        Ok(c)
    }
}

/// Hex SHA-256 of the canonical JSON of a resolved config.
pub fn config_hash(c: &TrainConfig) -> String {
    let json = serde_json::to_string(c).expect("configs serialize");
    hex::encode(Sha256::digest(json.as_bytes()))
}
