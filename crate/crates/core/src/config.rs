//! Run configuration, stored as TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::DEFAULT_FRACTIONS;
use crate::error::{Error, Result};
use crate::explain::{AttributionConfig, Method};
use crate::model::{ArchKind, TrainConfig};
use crate::retrain::{SharpRise, SweepConfig};

/// Environment variable holding the default output root.
pub const OUT_ENV: &str = "GRAPHROAR_OUT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    /// `BA2Motifs` and `BA3Motifs` are generated; anything else is read
    /// from `path` in TU format.
    pub name: String,
    pub path: Option<PathBuf>,
    /// Generator seed.
    pub seed: u64,
    pub split: [f64; 3],
    pub split_seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            name: "BA2Motifs".into(),
            path: None,
            seed: 0,
            split: DEFAULT_FRACTIONS,
            split_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub arch: ArchKind,
    pub hidden_dim: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            arch: ArchKind::Gcn,
            hidden_dim: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub attributors: Vec<Method>,
    pub attribution: AttributionConfig,
    pub sweep: SweepConfig,
    pub sharp_rise: SharpRise,
    /// Output root; empty means `$GRAPHROAR_OUT`, falling back to `runs`.
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig {
                early_stop_patience: 100,
                ..TrainConfig::default()
            },
            attributors: Method::ALL.to_vec(),
            attribution: AttributionConfig::default(),
            sweep: SweepConfig::default(),
            sharp_rise: SharpRise::default(),
            out: PathBuf::new(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(&bad) = self.sweep.levels.iter().find(|&&l| l > 100) {
            return Err(Error::Config(format!("sparsity level {bad} is above 100")));
        }
        if self.model.hidden_dim == 0 {
            return Err(Error::Config("hidden_dim must be positive".into()));
        }
        if self.train.epochs == 0 || self.train.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be positive".into()));
        }
        Ok(())
    }

    /// `out`, else the environment default, else `runs`.
    pub fn out_dir(&self) -> PathBuf {
        if !self.out.as_os_str().is_empty() {
            return self.out.clone();
        }
        std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        assert_eq!(RunConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = RunConfig::parse("attributors = [\"gradcam\", \"random\"]\n[model]\narch = \"GIN\"\n").unwrap();
        assert_eq!(cfg.model.arch, ArchKind::Gin);
        assert_eq!(cfg.model.hidden_dim, 64);
        assert_eq!(cfg.attributors, vec![Method::GradCam, Method::Random]);
        assert_eq!(cfg.train.learning_rate, 0.001);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(RunConfig::parse("[sweep]\nlevels = [0, 150]\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("[model]\narch = \"GAT\"\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse("out = 3\n"), Err(Error::Config(_))));
    }
}
