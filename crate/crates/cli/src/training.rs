//! Pretraining, finetuning and gradient checks.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use wordbound::boundary::BoundarySchema;
use wordbound::encoder::gradcheck::{grad_check, GradCheckReport, TOLERANCE};
use wordbound::encoder::Checkpoint;
use wordbound::pretrain::{
    finetune, read_sequence_tsv, read_token_tsv, FinetuneData, FinetuneReport, Pretrainer, Task,
    METRICS_FILE,
};
use wordbound::tokenizer::{train_wordpiece, Vocabulary};

use crate::config::{read_lines, ExperimentConfig};
use crate::text::load_vocab;

pub const VOCAB_FILE: &str = "vocab.txt";
pub const FINETUNE_REPORT: &str = "finetune_report.json";

/// Vocabulary named by the config, or one trained on the corpus and saved
/// as `vocab.txt` in `out_dir`.
fn vocab_for(config: &ExperimentConfig, corpus: &[String], out_dir: &Path) -> Result<Vocabulary> {
    let pre = config.tokenizer.config.pre_tokenizer();
    match &config.tokenizer.vocab {
        Some(path) => load_vocab(path, pre),
        None => {
            let vocab = train_wordpiece(corpus, &config.tokenizer.config)?;
            fs::create_dir_all(out_dir)?;
            vocab.write(out_dir.join(VOCAB_FILE))?;
            Ok(vocab)
        }
    }
}

pub fn pretrain(
    mut config: ExperimentConfig,
    out_dir: &Path,
    resume: Option<&Path>,
    out: &mut impl Write,
) -> Result<()> {
    if config.corpus.train.is_empty() {
        bail!("config has no [corpus] train files");
    }
    let corpus = read_lines(&config.corpus.train)?;
    let vocab = vocab_for(&config, &corpus, out_dir)?;
    config.bind_vocab(&vocab)?;
    let checkpoint = resume
        .map(|p| {
            if !p.is_file() {
                bail!("no such checkpoint: {}", p.display());
            }
            Checkpoint::load(p).with_context(|| format!("loading {}", p.display()))
        })
        .transpose()?;
    if checkpoint.is_none() {
        // a fresh run must not append to an older log
        let log = out_dir.join(METRICS_FILE);
        if log.exists() {
            fs::remove_file(&log)?;
        }
    }
    config.output_dir = Some(out_dir.to_path_buf());
    config.write_resolved(out_dir)?;
    let trainer = Pretrainer::new(&vocab, &corpus, config.model.clone(), config.train.clone())?;
    let result = trainer.run(Some(out_dir), checkpoint.as_ref())?;
    let first = result.metrics.first();
    let last = result.metrics.last();
    writeln!(out, "steps\t{}", result.final_step)?;
    writeln!(out, "params\t{}", result.params.num_params())?;
    if let (Some(a), Some(b)) = (first, last) {
        writeln!(out, "first_train_loss\t{:.6}", a.train_loss)?;
        writeln!(out, "last_train_loss\t{:.6}", b.train_loss)?;
        if let Some(e) = b.eval_loss {
            writeln!(out, "eval_loss\t{e:.6}")?;
        }
        if let Some(acc) = b.eval_boundary_acc {
            writeln!(out, "eval_boundary_acc\t{acc:.6}")?;
        }
    }
    writeln!(out, "output\t{}", out_dir.display())?;
    Ok(())
}

fn finetune_data(config: &ExperimentConfig) -> Result<FinetuneData> {
    let (Some(train), Some(dev)) = (&config.finetune.train, &config.finetune.dev) else {
        bail!("[finetune] needs train and dev files");
    };
    Ok(match config.finetune.config.task {
        Task::SequenceClassification => FinetuneData::Sequence {
            train: read_sequence_tsv(train)?,
            dev: read_sequence_tsv(dev)?,
        },
        Task::TokenClassification => FinetuneData::Token {
            train: read_token_tsv(train)?,
            dev: read_token_tsv(dev)?,
        },
    })
}

pub fn run_finetune(
    mut config: ExperimentConfig,
    checkpoint: Option<PathBuf>,
    out_dir: &Path,
    out: &mut impl Write,
) -> Result<FinetuneReport> {
    let ckpt_path = checkpoint
        .or_else(|| config.finetune.checkpoint.clone())
        .context("no checkpoint given (--checkpoint or [finetune] checkpoint)")?;
    if !ckpt_path.is_file() {
        bail!("no such checkpoint: {}", ckpt_path.display());
    }
    let Some(vocab_path) = config.tokenizer.vocab.clone() else {
        bail!("finetuning needs [tokenizer] vocab");
    };
    let vocab = load_vocab(&vocab_path, config.tokenizer.config.pre_tokenizer())?;
    let ckpt =
        Checkpoint::load(&ckpt_path).with_context(|| format!("loading {}", ckpt_path.display()))?;
    let data = finetune_data(&config)?;
    config.finetune.checkpoint = Some(ckpt_path);
    config.output_dir = Some(out_dir.to_path_buf());
    config.write_resolved(out_dir)?;
    let report = finetune(&ckpt, &vocab, &data, &config.finetune.config)?;
    fs::write(
        out_dir.join(FINETUNE_REPORT),
        serde_json::to_string_pretty(&report)? + "\n",
    )?;
    writeln!(out, "seed\tbest_epoch\t{}", report.metric)?;
    for s in &report.seeds {
        writeln!(out, "{}\t{}\t{:.4}", s.seed, s.best_epoch, s.best)?;
    }
    writeln!(out, "mean\t-\t{:.4}", report.mean)?;
    writeln!(out, "std\t-\t{:.4}", report.std)?;
    Ok(report)
}

/// Check each schema / head combination; returns whether all passed.
pub fn run_grad_check(
    schemas: &[BoundarySchema],
    heads: &[bool],
    seed: u64,
    out: &mut impl Write,
) -> Result<bool> {
    writeln!(
        out,
        "schema\timplicit_head\tmax_rel_error\tworst\tchecked\tstatus"
    )?;
    let mut all = true;
    for &schema in schemas {
        for &implicit in heads {
            let r: GradCheckReport = grad_check(schema, implicit, seed)?;
            all &= r.passed();
            writeln!(
                out,
                "{schema}\t{implicit}\t{:.3e}\t{}\t{}\t{}",
                r.max_rel_error,
                r.worst,
                r.checked,
                if r.passed() { "ok" } else { "FAIL" }
            )?;
        }
    }
    if !all {
        writeln!(out, "relative error above {TOLERANCE:e}")?;
    }
    Ok(all)
}
