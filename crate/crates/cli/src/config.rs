//! Experiment files.
//!
//! One TOML file describes a whole experiment. Relative paths are resolved
//! against the directory holding the file. Example:
//!
//! ```toml
//! seed = 1
//!
//! [corpus]
//! train = ["corpus.txt"]
//!
//! [tokenizer]
//! vocab_size = 320
//! marker_mode = "boundless"
//!
//! [model]
//! n_layers = 2
//! n_heads = 4
//! d_model = 64
//! d_ff = 256
//! max_seq_len = 64
//! implicit_head = true
//!
//! [train]
//! batch_size = 16
//! total_steps = 300
//! seq_len = 64
//! peak_lr = 1.5e-3
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use wordbound::boundary::BoundarySchema;
use wordbound::encoder::ModelConfig;
use wordbound::pretrain::{FinetuneConfig, TrainConfig};
use wordbound::tokenizer::{TokenizerConfig, Vocabulary};

/// File name of the resolved config written next to the outputs.
pub const RESOLVED_CONFIG: &str = "config.toml";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusPaths {
    /// Line-per-document text files.
    pub train: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerSection {
    /// Existing vocabulary; when absent one is trained on the corpus.
    pub vocab: Option<PathBuf>,
    #[serde(flatten)]
    pub config: TokenizerConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinetuneSection {
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    #[serde(flatten)]
    pub config: FinetuneConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Overrides `train.seed` when set.
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub corpus: CorpusPaths,
    pub tokenizer: TokenizerSection,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub finetune: FinetuneSection,
}

impl ExperimentConfig {
    /// Parse, resolve relative paths and check that every path exists.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: Self =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        config.check_paths()?;
        if let Some(seed) = config.seed {
            config.train.seed = seed;
        }
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.corpus.train.iter_mut().for_each(fix);
        self.tokenizer.vocab.iter_mut().for_each(fix);
        self.finetune.train.iter_mut().for_each(fix);
        self.finetune.dev.iter_mut().for_each(fix);
        self.finetune.checkpoint.iter_mut().for_each(fix);
        self.output_dir.iter_mut().for_each(fix);
    }

    fn check_paths(&self) -> Result<()> {
        let inputs = self
            .corpus
            .train
            .iter()
            .chain(&self.tokenizer.vocab)
            .chain(&self.finetune.train)
            .chain(&self.finetune.dev)
            .chain(&self.finetune.checkpoint);
        for p in inputs {
            if !p.exists() {
                bail!("config refers to missing path {}", p.display());
            }
        }
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.train.seed = seed;
    }

    /// Align the model with `vocab` and reject incompatible combinations
    /// before any work starts.
    pub fn bind_vocab(&mut self, vocab: &Vocabulary) -> Result<()> {
        if self.model.vocab_size != vocab.len() {
            log::info!(
                "model vocab_size set to {} from the vocabulary",
                vocab.len()
            );
            self.model.vocab_size = vocab.len();
        }
        if self.model.wb_schema == BoundarySchema::WbTokens && vocab.specials().wb.is_none() {
            bail!("schema wb-tokens needs a [WB] entry in the vocabulary");
        }
        self.model.validate()?;
        self.train.validate()?;
        if self.train.seq_len > self.model.max_seq_len {
            bail!(
                "train.seq_len {} exceeds model.max_seq_len {}",
                self.train.seq_len,
                self.model.max_seq_len
            );
        }
        Ok(())
    }

    pub fn write_resolved(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let path = dir.join(RESOLVED_CONFIG);
        fs::write(&path, toml::to_string(self)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// Read every non-blank line of the given files, in order.
pub fn read_lines(paths: &[PathBuf]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for p in paths {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        out.extend(
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(str::to_owned),
        );
    }
    Ok(out)
}
