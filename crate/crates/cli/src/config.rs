//! Experiment configuration file.
//!
//! ```toml
//! schema_version = 1
//! configuration = "C"              # used by featurize/train/evaluate
//! configurations = ["A", "B", "C"] # used by run-all
//! output_dir = "ethcast-out"
//!
//! [data]                           # relative paths resolve against this file
//! eth = "ETH-USD.csv"
//! btc = "BTC-USD.csv"              # correlation only
//! ada = "ADA-USD.csv"
//! dot = "DOT-USD.csv"
//! sentiment = "sentiment.jsonl"
//!
//! [features]   # window, max_fill_days, normalization, constant_volume_fallback
//! [sentiment]  # per-source weights: twitter, reddit, news
//! [model]      # num_blocks, model_dim, num_heads, head_dim, ff_channels, dropout, ...
//! [train]      # learning_rate, batch_size, max_epochs, seed, patience, ...
//! ```
//!
//! `model.window_len` and `model.num_features` follow from the feature
//! settings and configuration and are overwritten when a model is built.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ethcast_core::market::FeatureOptions;
use ethcast_core::sentiment::SourceWeights;
use ethcast_core::{FeatureConfig, ModelConfig, TrainConfig};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_OUTPUT_DIR: &str = "ethcast-out";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub eth: Option<PathBuf>,
    pub btc: Option<PathBuf>,
    pub ada: Option<PathBuf>,
    pub dot: Option<PathBuf>,
    pub sentiment: Option<PathBuf>,
}

impl DataPaths {
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.eth,
            &mut self.btc,
            &mut self.ada,
            &mut self.dot,
            &mut self.sentiment,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    /// Coin files in fixed order, with the config key naming each.
    pub fn coins(&self) -> Vec<(&'static str, &Path)> {
        [
            ("eth", &self.eth),
            ("btc", &self.btc),
            ("ada", &self.ada),
            ("dot", &self.dot),
        ]
        .into_iter()
        .filter_map(|(k, p)| p.as_deref().map(|p| (k, p)))
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default = "default_configuration")]
    pub configuration: FeatureConfig,
    #[serde(default = "all_configurations")]
    pub configurations: Vec<FeatureConfig>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub data: DataPaths,
    #[serde(default)]
    pub features: FeatureOptions,
    #[serde(default)]
    pub sentiment: SourceWeights,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
}

fn default_configuration() -> FeatureConfig {
    FeatureConfig::C
}

fn all_configurations() -> Vec<FeatureConfig> {
    FeatureConfig::ALL.to_vec()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            configuration: default_configuration(),
            configurations: all_configurations(),
            output_dir: None,
            data: DataPaths::default(),
            features: FeatureOptions::default(),
            sentiment: SourceWeights::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text)?;
        if cfg.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (this build reads version {SCHEMA_VERSION})",
                cfg.schema_version
            );
        }
        cfg.data.resolve(base);
        if let Some(out) = &mut cfg.output_dir {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    /// The resolved settings as TOML, for manifests and reports. The output
    /// location is left out: it does not affect any result.
    pub fn echo(&self) -> String {
        let settings = Self {
            output_dir: None,
            ..self.clone()
        };
        toml::to_string(&settings).unwrap_or_else(|e| format!("# unserializable config: {e}\n"))
    }

    /// Checks that every file `configuration` needs is configured and exists.
    pub fn preflight(&self, configuration: FeatureConfig) -> Result<()> {
        let mut needed = vec![("eth", "ETH price series", &self.data.eth)];
        if configuration.needs_sentiment() {
            needed.push(("sentiment", "sentiment triplet file", &self.data.sentiment));
        }
        if configuration.needs_cross_assets() {
            needed.push(("ada", "ADA price series", &self.data.ada));
            needed.push(("dot", "DOT price series", &self.data.dot));
        }
        for (key, what, path) in needed {
            match path {
                None => bail!(
                    "missing input: configuration {configuration} needs the {what} (set data.{key} or pass --{key})"
                ),
                Some(p) if !p.is_file() => bail!(
                    "missing input: {what} for configuration {configuration} not found at {} (data.{key})",
                    p.display()
                ),
                Some(_) => {}
            }
        }
        Ok(())
    }
}
