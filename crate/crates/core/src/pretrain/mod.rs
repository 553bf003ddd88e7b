//! MLM pretraining and toy-scale finetuning.

mod data;
mod finetune;
mod masking;
mod optim;
mod schedule;
mod trainer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{BoundaryError, WbPlacement};
use crate::encoder::EncoderError;

pub use data::{collate, prepare_encoding, prepare_example, Example};
pub use finetune::{
    entity_f1, finetune, finetune_seed, parse_sequence_tsv, parse_token_tsv, read_sequence_tsv,
    read_token_tsv, FinetuneConfig, FinetuneData, FinetuneReport, Pooling, SeedResult,
    SequenceExample, Task, TokenExample, WbInjection,
};
pub use masking::{dynamic_mask, mask_examples, step_rng, MaskedBatch, MaskingPolicy};
pub use optim::{clip_global_norm, AdamW};
pub use schedule::{lr_at, LinearSchedule};
pub use trainer::{
    read_metrics, EvalMetrics, MetricsRecord, PretrainOutput, Pretrainer, METRICS_FILE,
};

#[derive(Debug, Error)]
pub enum PretrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("no maskable positions in batch")]
    NothingToMask,
    #[error("step {step} outside schedule of {total} steps")]
    StepOutOfRange { step: u64, total: u64 },
    #[error("corpus too small: {usable} usable tokens, need at least {needed}")]
    CorpusTooSmall { usable: usize, needed: usize },
    #[error("schema conflict: {0}")]
    SchemaConflict(String),
    #[error("label mismatch: {0}")]
    LabelMismatch(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PretrainError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub total_steps: u64,
    /// Used when `warmup_steps` is unset.
    pub warmup_fraction: f64,
    pub warmup_steps: Option<u64>,
    pub peak_lr: f64,
    pub seq_len: usize,
    pub mask_rate: f64,
    pub seed: u64,
    /// Evaluate on the held-out split every this many steps (and at the end).
    pub eval_every: u64,
    /// 0 disables periodic checkpoints; the final one is always written.
    pub checkpoint_every: u64,
    pub weight_decay: f64,
    /// Global gradient-norm clip, off when `None`.
    pub clip_norm: Option<f64>,
    /// Share of sentences held out for evaluation.
    pub eval_fraction: f64,
    pub wb_placement: WbPlacement,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            total_steps: 1000,
            warmup_fraction: 0.06,
            warmup_steps: None,
            peak_lr: 1e-4,
            seq_len: 256,
            mask_rate: 0.15,
            seed: 0,
            eval_every: 100,
            checkpoint_every: 0,
            weight_decay: 0.01,
            clip_norm: None,
            eval_fraction: 0.1,
            wb_placement: WbPlacement::Between,
        }
    }
}

impl TrainConfig {
    pub fn warmup(&self) -> u64 {
        self.warmup_steps
            .unwrap_or_else(|| (self.warmup_fraction * self.total_steps as f64).round() as u64)
    }

    pub fn schedule(&self) -> LinearSchedule {
        LinearSchedule {
            peak: self.peak_lr,
            warmup: self.warmup(),
            total: self.total_steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PretrainError::InvalidConfig(m.to_string()));
        if !(self.mask_rate > 0.0 && self.mask_rate < 1.0) {
            return bad("mask_rate must lie in (0, 1)");
        }
        if self.warmup() > self.total_steps {
            return bad("warmup longer than total_steps");
        }
        if self.batch_size == 0 || self.total_steps == 0 {
            return bad("batch_size and total_steps must be positive");
        }
        if self.seq_len < 3 {
            return bad("seq_len must leave room for [CLS], a token and [SEP]");
        }
        if !(self.eval_fraction > 0.0 && self.eval_fraction < 1.0) {
            return bad("eval_fraction must lie in (0, 1)");
        }
        if !(self.peak_lr.is_finite() && self.peak_lr >= 0.0) {
            return bad("peak_lr must be finite and non-negative");
        }
        if self.clip_norm.is_some_and(|c| c.is_nan() || c <= 0.0) {
            return bad("clip_norm must be positive");
        }
        Ok(())
    }
}
