//! A small transformer encoder for masked language modelling.
//!
//! The architecture is a pre-norm encoder stack (multi-head self-attention
//! and a GELU feed-forward block, each wrapped in a residual connection and
//! preceded by layer norm) followed by a final layer norm. Two heads read
//! the final hidden states:
//!
//! - the token head predicts masked tokens over the vocabulary;
//! - the optional boundary head predicts the 3-class boundary label
//!   (special / word-initial / word-internal).
//!
//! Word-boundary information can also enter through the input: a learned
//! boundary embedding table (binary, word or subword indexed) is summed with
//! the token and position embeddings.
//!
//! Gradients are computed by hand; [`gradcheck`] compares them with central
//! finite differences.

mod backward;
mod checkpoint;
mod forward;
pub mod gradcheck;
mod loss;
mod params;
mod scalar;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::BoundarySchema;

pub(crate) use backward::backward_sequence;
pub use checkpoint::{Checkpoint, CheckpointHeader, NamedTensor};
pub use forward::{embed, embed_batch, forward, Batch, ForwardOutput};
pub(crate) use forward::{encode_sequence, SeqCache};
pub use loss::{combined_loss, evaluate_mlm, loss_and_grad, mlm_loss, LossBreakdown, MlmTargets};
pub use params::{LayerParams, Parameters, TensorView, TensorViewMut, INIT_STD};
pub use scalar::Scalar;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("{what} index {index} out of range (< {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no masked positions in batch")]
    NoMaskedPositions,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EncoderError>;

/// Which positions the boundary head is trained on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryTargets {
    #[default]
    MaskedOnly,
    AllPositions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_model: usize,
    pub d_ff: usize,
    pub vocab_size: usize,
    pub max_seq_len: usize,
    pub wb_schema: BoundarySchema,
    /// Adds the boundary MLM head whose loss is summed with the token loss.
    pub implicit_head: bool,
    pub boundary_targets: BoundaryTargets,
    /// Permit `[WB]` tokens together with the boundary head.
    pub allow_wb_tokens_with_implicit: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_layers: 2,
            n_heads: 4,
            d_model: 256,
            d_ff: 1024,
            vocab_size: 16384,
            max_seq_len: 256,
            wb_schema: BoundarySchema::None,
            implicit_head: false,
            boundary_targets: BoundaryTargets::MaskedOnly,
            allow_wb_tokens_with_implicit: false,
        }
    }
}

/// Number of boundary classes predicted by the boundary head.
pub const BOUNDARY_CLASSES: usize = 3;

/// Epsilon inside layer norm.
pub const LN_EPS: f64 = 1e-5;

impl ModelConfig {
    /// Layers / heads / width of the smallest paper-scale setup with
    /// `d_ff = 4 d`.
    pub fn very_low(vocab_size: usize) -> Self {
        Self {
            n_layers: 2,
            n_heads: 4,
            d_model: 256,
            d_ff: 1024,
            vocab_size,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(EncoderError::InvalidConfig(msg));
        if self.n_layers == 0 || self.n_heads == 0 || self.d_model == 0 || self.d_ff == 0 {
            return bad("layer, head and width counts must be positive".into());
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return bad(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            ));
        }
        if self.max_seq_len == 0 {
            return bad("max_seq_len must be at least 1".into());
        }
        if self.vocab_size == 0 {
            return bad("vocab_size must be positive".into());
        }
        if self.wb_schema == BoundarySchema::WbTokens
            && self.implicit_head
            && !self.allow_wb_tokens_with_implicit
        {
            return bad(
                "wb-tokens schema with implicit head requires allow_wb_tokens_with_implicit".into(),
            );
        }
        Ok(())
    }

    pub fn d_head(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn wb_rows(&self) -> Option<usize> {
        self.wb_schema.table_rows()
    }
}
