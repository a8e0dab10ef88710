use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diffnum::{BackboneSpec, OptimizerSpec};
use crate::error::{Error, Result};
use crate::io;
use crate::ordinal::{HeadKind, LossConfig, DEFAULT_FOCAL_GAMMA};

/// Starting values for the head's bias terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasInit {
    #[default]
    Zeros,
    /// Log-odds (or log-frequencies for softmax/focal) of the training labels.
    Prior,
}

/// Everything a training run depends on besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_head")]
    pub head: HeadKind,
    #[serde(default = "default_classes")]
    pub num_classes: usize,
    #[serde(default)]
    pub backbone: BackboneSpec,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub seed: u64,
    /// CORAL level weights and reduction; uniform weights with mean
    /// reduction when absent.
    #[serde(default)]
    pub loss: Option<LossConfig>,
    #[serde(default = "default_gamma")]
    pub focal_gamma: f64,
    /// Parametrize CORAL biases so they are non-increasing by construction.
    #[serde(default)]
    pub coral_ordered_biases: bool,
    #[serde(default)]
    pub bias_init: BiasInit,
    /// Random horizontal and vertical flips of training images.
    #[serde(default)]
    pub augment_flips: bool,
}

fn default_head() -> HeadKind {
    HeadKind::Coral
}
fn default_classes() -> usize {
    3
}
fn default_epochs() -> usize {
    30
}
fn default_batch() -> usize {
    16
}
fn default_gamma() -> f64 {
    DEFAULT_FOCAL_GAMMA
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            head: default_head(),
            num_classes: default_classes(),
            backbone: BackboneSpec::default(),
            optimizer: OptimizerSpec::default(),
            epochs: default_epochs(),
            batch_size: default_batch(),
            seed: 0,
            loss: None,
            focal_gamma: default_gamma(),
            coral_ordered_biases: false,
            bias_init: BiasInit::default(),
            augment_flips: false,
        }
    }
}

impl TrainConfig {
    pub fn with_head(head: HeadKind) -> Self {
        Self {
            head,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {}", self.num_classes)));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be at least 1".into()));
        }
        if !self.focal_gamma.is_finite() || self.focal_gamma < 0.0 {
            return Err(Error::Config(format!("focal_gamma must be >= 0, got {}", self.focal_gamma)));
        }
        self.backbone.validate()?;
        self.optimizer.validate()?;
        self.loss_config().validate(self.num_classes)
    }

    pub fn loss_config(&self) -> LossConfig {
        self.loss.clone().unwrap_or_else(|| LossConfig::uniform(self.num_classes))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = io::read_to_string(path)?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
