use serde::{Deserialize, Serialize};

use crate::corpus::DEFAULT_MAX_TOKENS;
use crate::embeddings::DEFAULT_EMBEDDING_DIM;
use crate::error::{Error, Result};
use crate::nn::AdamConfig;
use crate::tokenizer::DEFAULT_NUM_WORDS;
use crate::vae::{DEFAULT_HIDDEN_SIZE, DEFAULT_Z_DIM};

/// Scalar type used for parameters and arithmetic during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl Precision {
    pub fn bytes(self) -> usize {
        match self {
            Precision::F32 => 4,
            Precision::F64 => 8,
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "f32" | "32" => Ok(Precision::F32),
            "f64" | "64" => Ok(Precision::F64),
            _ => Err(format!("unknown precision `{s}` (expected f32 or f64)")),
        }
    }
}

impl std::fmt::Display for Precision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub z_dim: usize,
    pub hidden_size: usize,
    pub embedding_dim: usize,
    pub num_words: usize,
    pub max_tokens: usize,
    /// Steps over which the KL weight ramps linearly to 1; 0 keeps it at 1.
    pub kl_warmup_steps: u64,
    pub word_dropout: f64,
    pub mc_samples: usize,
    pub seed: u64,
    pub precision: Precision,
    pub freeze_embeddings: bool,
    /// Global gradient-norm ceiling; 0 disables clipping.
    pub clip_norm: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 100,
            batch_size: 32,
            lr: 1e-3,
            z_dim: DEFAULT_Z_DIM,
            hidden_size: DEFAULT_HIDDEN_SIZE,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            num_words: DEFAULT_NUM_WORDS,
            max_tokens: DEFAULT_MAX_TOKENS,
            kl_warmup_steps: 2000,
            word_dropout: 0.25,
            mc_samples: 1,
            seed: 0,
            precision: Precision::F32,
            freeze_embeddings: false,
            clip_norm: 5.0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("z_dim", self.z_dim),
            ("hidden_size", self.hidden_size),
            ("embedding_dim", self.embedding_dim),
            ("max_tokens", self.max_tokens),
            ("mc_samples", self.mc_samples),
        ];
        for (key, value) in positive {
            if value == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        if self.num_words < 2 {
            return Err(Error::config(
                "num_words",
                format!("{} < 2", self.num_words),
            ));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::config(
                "lr",
                format!("{} is not a positive number", self.lr),
            ));
        }
        if !(0.0..=1.0).contains(&self.word_dropout) {
            return Err(Error::config(
                "word_dropout",
                format!("{} not in [0, 1]", self.word_dropout),
            ));
        }
        if !(self.clip_norm.is_finite() && self.clip_norm >= 0.0) {
            return Err(Error::config(
                "clip_norm",
                format!("{} is negative", self.clip_norm),
            ));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = TrainingConfig::default();
        c.validate().unwrap();
        assert_eq!((c.epochs, c.batch_size, c.kl_warmup_steps), (100, 32, 2000));
        assert_eq!(c.word_dropout, 0.25);
    }

    #[test]
    fn errors_name_the_key() {
        let c = TrainingConfig {
            num_words: 1,
            ..TrainingConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config { key, .. }) if key == "num_words"));
        let c = TrainingConfig {
            word_dropout: 1.5,
            ..TrainingConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config { key, .. }) if key == "word_dropout"));
    }

    #[test]
    fn json_rejects_unknown_keys_and_fills_defaults() {
        let c: TrainingConfig =
            serde_json::from_str(r#"{"epochs": 3, "precision": "f64"}"#).unwrap();
        assert_eq!(c.epochs, 3);
        assert_eq!(c.precision, Precision::F64);
        assert_eq!(c.batch_size, 32);
        assert!(serde_json::from_str::<TrainingConfig>(r#"{"epoch": 3}"#).is_err());
    }
}
