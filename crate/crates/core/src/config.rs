use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every tunable threshold of the extraction pipeline.
///
/// Serialized as JSON with exactly these fields; missing fields take the
/// defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Books whose KL divergence (bits) from the corpus exceeds this are dropped.
    pub kl_threshold: f64,
    /// Books with fewer tokens are exempt from the KL pre-filter.
    pub kl_min_words: usize,
    /// Minimum opening delimiters per 10 000 tokens.
    pub delimiter_ratio: f64,
    /// A narrative gap longer than this starts a new dialogue.
    pub gap_chars: usize,
    /// Utterances with more tokens than this are removed.
    pub max_utt_words: usize,
    /// Size of the frequency vocabulary used by the rare-word filter.
    pub rare_vocab_top: usize,
    /// Dialogues with a larger share of out-of-vocabulary tokens are dropped.
    pub rare_ratio: f64,
    /// Train, validation and test shares of dialogues.
    pub split_ratios: [f64; 3],
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            kl_threshold: 2.0,
            kl_min_words: 20_000,
            delimiter_ratio: 150.0,
            gap_chars: 150,
            max_utt_words: 100,
            rare_vocab_top: 100_000,
            rare_ratio: 0.20,
            split_ratios: [0.90, 0.05, 0.05],
            seed: 42,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let cfg: PipelineConfig =
            serde_json::from_str(json).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }

    /// Thresholds that let every input through unchanged.
    pub fn permissive() -> Self {
        PipelineConfig {
            kl_threshold: f64::INFINITY,
            kl_min_words: 0,
            delimiter_ratio: 0.0,
            max_utt_words: usize::MAX,
            rare_ratio: 1.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.kl_threshold.is_nan() || self.kl_threshold < 0.0 {
            return fail(format!("kl_threshold must be >= 0, got {}", self.kl_threshold));
        }
        if self.delimiter_ratio.is_nan() || self.delimiter_ratio < 0.0 {
            return fail(format!("delimiter_ratio must be >= 0, got {}", self.delimiter_ratio));
        }
        if self.max_utt_words == 0 {
            return fail("max_utt_words must be > 0".into());
        }
        if self.rare_vocab_top == 0 {
            return fail("rare_vocab_top must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.rare_ratio) {
            return fail(format!("rare_ratio must be in [0, 1], got {}", self.rare_ratio));
        }
        if self.split_ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return fail(format!("split ratios must be in [0, 1]: {:?}", self.split_ratios));
        }
        let sum: f64 = self.split_ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return fail(format!("split ratios sum to {sum}, not 1"));
        }
        Ok(())
    }
}
