//! Word-boundary experiments for subword tokenisers and transformer encoders.
//!
//! The crate is organised bottom-up:
//!
//! - [`tokenizer`]: WordPiece training in marked (`##`) or boundless mode,
//!   greedy longest-match-first encoding and decoding.
//! - [`boundary`]: binary / word / subword boundary indices, `[WB]` token
//!   insertion and boundary-aware detokenisation.
//! - [`morpho`]: boundary precision/recall/F1 against gold morph
//!   segmentations, vocabulary redundancy and average sequence length.
//! - [`encoder`]: a small pre-norm transformer encoder with a token MLM head,
//!   an optional boundary MLM head and optional word-boundary embeddings,
//!   with hand-written backpropagation.
//! - [`pretrain`]: dynamic masking, the warmup/decay learning-rate schedule,
//!   AdamW, the pretraining loop and toy-scale finetuning.
//! - [`toy`]: synthetic corpora used by smoke runs and tests.

pub mod boundary;
pub mod encoder;
pub mod morpho;
pub mod pretrain;
pub mod tokenizer;
pub mod toy;

pub use boundary::{annotate, BoundaryAnnotation, BoundarySchema, WbPlacement};
pub use encoder::{ModelConfig, Parameters};
pub use morpho::{GoldSegmentation, SegEvalResult};
pub use tokenizer::{Encoding, MarkerMode, TokenizerConfig, Vocabulary};
