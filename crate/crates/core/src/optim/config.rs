//! Training configuration and its flat `key = value` file format.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::EncoderConfig;
use crate::error::{Error, Result};
use crate::optim::loss::{LossKind, Similarity};

/// Learning rate used for the pretrained-transformer setting; the
/// from-scratch encoder defaults to [`DEFAULT_LR`].
pub const PRETRAINED_LR: f64 = 2e-5;
pub const DEFAULT_LR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub loss: LossKind,
    /// Triplet margin ε.
    pub margin: f64,
    /// Multiple-negatives score scale.
    pub scale: f64,
    pub similarity: Similarity,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub warmup_fraction: f64,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
    pub dim: usize,
    pub use_block: bool,
    pub normalize_output: bool,
    pub max_len: usize,
    pub vocab_size: usize,
    /// Worker threads for per-sentence encode/backprop; 1 forces strictly
    /// serial execution. Results do not depend on it.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let enc = EncoderConfig::default();
        Self {
            loss: LossKind::MultipleNegatives,
            margin: 1.0,
            scale: 20.0,
            similarity: Similarity::Cosine,
            batch_size: 50,
            learning_rate: DEFAULT_LR,
            warmup_fraction: 0.10,
            epochs: 1,
            weight_decay: 0.01,
            seed: 42,
            dim: enc.dim,
            use_block: enc.use_block,
            normalize_output: enc.normalize_output,
            max_len: enc.max_len,
            vocab_size: 30_000,
            threads: 1,
        }
    }
}

pub const CONFIG_KEYS: [&str; 16] = [
    "loss",
    "margin",
    "scale",
    "similarity",
    "batch_size",
    "learning_rate",
    "warmup_fraction",
    "epochs",
    "weight_decay",
    "seed",
    "dim",
    "use_block",
    "normalize_output",
    "max_len",
    "vocab_size",
    "threads",
];

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(format!("expected a boolean, got {s:?}")),
    }
}

fn parse_num<N: std::str::FromStr>(s: &str) -> std::result::Result<N, String> {
    s.parse()
        .map_err(|_| format!("expected a number, got {s:?}"))
}

impl TrainConfig {
    pub fn encoder(&self) -> EncoderConfig {
        EncoderConfig {
            dim: self.dim,
            use_block: self.use_block,
            normalize_output: self.normalize_output,
            max_len: self.max_len,
        }
    }

    /// Applies one `key = value` setting, returning a message on failure.
    fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "loss" => self.loss = value.parse().map_err(|e: Error| e.to_string())?,
            "margin" => self.margin = parse_num(value)?,
            "scale" => self.scale = parse_num(value)?,
            "similarity" => self.similarity = value.parse().map_err(|e: Error| e.to_string())?,
            "batch_size" => self.batch_size = parse_num(value)?,
            "learning_rate" | "lr" => self.learning_rate = parse_num(value)?,
            "warmup_fraction" => self.warmup_fraction = parse_num(value)?,
            "epochs" => self.epochs = parse_num(value)?,
            "weight_decay" => self.weight_decay = parse_num(value)?,
            "seed" => self.seed = parse_num(value)?,
            "dim" => self.dim = parse_num(value)?,
            "use_block" => self.use_block = parse_bool(value)?,
            "normalize_output" => self.normalize_output = parse_bool(value)?,
            "max_len" => self.max_len = parse_num(value)?,
            "vocab_size" => self.vocab_size = parse_num(value)?,
            "threads" => self.threads = parse_num(value)?,
            _ => {
                return Err(format!(
                    "unknown key {key:?}; valid keys: {}",
                    CONFIG_KEYS.join(", ")
                ))
            }
        }
        Ok(())
    }

    /// Applies settings in order; every problem is reported in one error.
    pub fn with_overrides<'a, I>(mut self, settings: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut problems = Vec::new();
        for (k, v) in settings {
            if let Err(m) = self.apply(k.trim(), v.trim()) {
                problems.push(format!("{}: {m}", k.trim()));
            }
        }
        problems.extend(self.problems());
        if problems.is_empty() {
            Ok(self)
        } else {
            Err(Error::Usage(problems.join("; ")))
        }
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        let mut problems = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    out.insert(k.trim().to_string(), v.trim().to_string());
                }
                None => problems.push(format!("line {}: expected `key = value`", n + 1)),
            }
        }
        if problems.is_empty() {
            Ok(out)
        } else {
            Err(Error::Usage(problems.join("; ")))
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let map = Self::parse_flat(&text)?;
        Self::default().with_overrides(map.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    pub fn to_flat(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        for key in CONFIG_KEYS {
            let val = &v[key];
            let s = match val {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("{key} = {s}\n"));
        }
        out
    }

    fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if self.loss == LossKind::MultipleNegatives && self.batch_size < 2 {
            p.push(format!(
                "batch_size must be at least 2 for MultipleNegatives, got {}",
                self.batch_size
            ));
        }
        if self.batch_size < 1 {
            p.push("batch_size must be positive".into());
        }
        if self.loss == LossKind::Triplet && self.batch_size < 2 {
            p.push(
                "batch_size must be at least 2 for Triplet (negatives come from the batch)".into(),
            );
        }
        if !(0.0..=1.0).contains(&self.warmup_fraction) {
            p.push(format!(
                "warmup_fraction must lie in [0, 1], got {}",
                self.warmup_fraction
            ));
        }
        if self.margin.is_nan() || self.margin < 0.0 {
            p.push(format!("margin must be non-negative, got {}", self.margin));
        }
        if self.scale.is_nan() || self.scale <= 0.0 {
            p.push(format!("scale must be positive, got {}", self.scale));
        }
        if self.learning_rate.is_nan() || self.learning_rate < 0.0 {
            p.push(format!(
                "learning_rate must be non-negative, got {}",
                self.learning_rate
            ));
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            p.push(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            ));
        }
        if self.epochs < 1 {
            p.push("epochs must be at least 1".into());
        }
        if self.dim < 2 {
            p.push(format!("dim must be at least 2, got {}", self.dim));
        }
        if self.max_len < 1 {
            p.push("max_len must be at least 1".into());
        }
        if self.vocab_size < 2 {
            p.push("vocab_size must be at least 2".into());
        }
        if self.threads < 1 {
            p.push("threads must be at least 1".into());
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Usage(p.join("; ")))
        }
    }
}
