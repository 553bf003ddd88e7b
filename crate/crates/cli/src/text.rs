//! Tokeniser training, encoding and segmentation scoring.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use wordbound::boundary::{annotate, insert_wb_tokens, WbPlacement};
use wordbound::morpho::{
    evaluate_vocab, macro_average, read_gold_file, report_row, vocab_redundancy, SegEvalResult,
    REPORT_HEADER,
};
use wordbound::tokenizer::{
    EncodeOptions, MarkerMode, PreTokenizer, TokenizerConfig, Vocabulary, WordPieceTrainer,
};

use crate::config::read_lines;

pub const TOKENIZER_REPORT: &str = "tokenizer_report.json";

#[derive(Debug, Serialize)]
struct TokenizerReport {
    mode: MarkerMode,
    requested_size: usize,
    size: usize,
    merges: usize,
    exhausted: bool,
    redundancy: f64,
}

fn require_files(paths: &[PathBuf]) -> Result<()> {
    for p in paths {
        if !p.is_file() {
            bail!("no such file: {}", p.display());
        }
    }
    Ok(())
}

pub fn train_tokenizer(
    corpus: &[PathBuf],
    config: TokenizerConfig,
    vocab_out: &Path,
) -> Result<Vocabulary> {
    require_files(corpus)?;
    let lines = read_lines(corpus)?;
    let report = WordPieceTrainer::new(config.clone()).fit(&lines)?;
    if let Some(dir) = vocab_out.parent() {
        fs::create_dir_all(dir)?;
    }
    report.vocab.write(vocab_out)?;
    let summary = TokenizerReport {
        mode: config.marker_mode,
        requested_size: config.vocab_size,
        size: report.vocab.len(),
        merges: report.merges,
        exhausted: report.exhausted,
        redundancy: vocab_redundancy(&report.vocab),
    };
    let report_path = vocab_out.with_file_name(TOKENIZER_REPORT);
    fs::write(&report_path, serde_json::to_string_pretty(&summary)? + "\n")?;
    println!("vocab\t{}", vocab_out.display());
    println!("mode\t{}", summary.mode);
    println!("size\t{}", summary.size);
    println!("merges\t{}", summary.merges);
    println!("exhausted\t{}", summary.exhausted);
    println!("redundancy\t{:.6}", summary.redundancy);
    Ok(report.vocab)
}

pub fn load_vocab(path: &Path, pre: PreTokenizer) -> Result<Vocabulary> {
    if !path.is_file() {
        bail!("no such vocabulary: {}", path.display());
    }
    Ok(Vocabulary::read(path, None)
        .with_context(|| format!("loading {}", path.display()))?
        .with_pre_tokenizer(pre))
}

fn label(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// File stems, or full paths when two stems collide.
fn labels(paths: &[PathBuf]) -> Vec<String> {
    let stems: Vec<String> = paths.iter().map(|p| label(p)).collect();
    let unique = (1..stems.len()).all(|i| !stems[..i].contains(&stems[i]));
    if unique {
        stems
    } else {
        paths.iter().map(|p| p.display().to_string()).collect()
    }
}

pub struct EncodeArgs {
    pub vocabs: Vec<PathBuf>,
    pub texts: Vec<String>,
    pub file: Option<PathBuf>,
    pub annotate: bool,
    pub wb_tokens: bool,
    pub placement: WbPlacement,
    pub wrap: bool,
    pub pre: PreTokenizer,
}

pub fn encode(args: &EncodeArgs, out: &mut impl Write) -> Result<()> {
    let vocabs = labels(&args.vocabs)
        .into_iter()
        .zip(&args.vocabs)
        .map(|(name, p)| Ok((name, load_vocab(p, args.pre)?)))
        .collect::<Result<Vec<_>>>()?;
    let inputs: Vec<String> = if let Some(file) = &args.file {
        require_files(std::slice::from_ref(file))?;
        read_lines(std::slice::from_ref(file))?
    } else if !args.texts.is_empty() {
        args.texts.clone()
    } else {
        let mut buf = String::new();
        io::stdin().read_to_string(&mut buf)?;
        buf.lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_owned)
            .collect()
    };
    let side_by_side = vocabs.len() > 1;
    for text in &inputs {
        for (name, vocab) in &vocabs {
            let mut enc = vocab.encode(text, EncodeOptions { wrap: args.wrap });
            if args.wb_tokens {
                enc = insert_wb_tokens(&enc, vocab, args.placement)?;
            }
            if args.annotate {
                if side_by_side {
                    writeln!(out, "# {name}")?;
                }
                writeln!(out, "token\tbinary\tword_index\tsubword_index")?;
                let ann = annotate(&enc)?;
                for i in 0..enc.len() {
                    writeln!(
                        out,
                        "{}\t{}\t{}\t{}",
                        enc.tokens[i], ann.binary[i], ann.word_index[i], ann.subword_index[i]
                    )?;
                }
                writeln!(out)?;
            } else if side_by_side {
                writeln!(out, "{name}\t{}", enc.tokens.join(" "))?;
            } else {
                writeln!(out, "{}", enc.tokens.join(" "))?;
            }
        }
    }
    Ok(())
}

/// Score one vocabulary on every gold file; the last entry is the macro
/// average when more than one file is given.
pub fn score_files(
    vocab: &Vocabulary,
    gold: &[PathBuf],
    lowercase: bool,
) -> Result<Vec<(String, SegEvalResult)>> {
    require_files(gold)?;
    let mut rows = Vec::new();
    for (name, path) in labels(gold).into_iter().zip(gold) {
        let entries = read_gold_file(path, lowercase)
            .with_context(|| format!("reading gold file {}", path.display()))?;
        let result = evaluate_vocab(vocab, &entries)
            .with_context(|| format!("scoring {}", path.display()))?;
        rows.push((name, result));
    }
    if rows.len() > 1 {
        let results: Vec<SegEvalResult> = rows.iter().map(|(_, r)| *r).collect();
        rows.push(("MEAN".into(), macro_average(&results).expect("non-empty")));
    }
    Ok(rows)
}

pub fn eval_morph(
    vocab_path: &Path,
    gold: &[PathBuf],
    pre: PreTokenizer,
    out: &mut impl Write,
) -> Result<()> {
    let vocab = load_vocab(vocab_path, pre)?;
    let rows = score_files(&vocab, gold, pre.lowercase)?;
    writeln!(out, "{REPORT_HEADER}")?;
    for (name, r) in &rows {
        writeln!(out, "{}", report_row(name, r))?;
    }
    Ok(())
}

/// One row per vocabulary, averaged over the gold files.
pub fn compare_morph(
    vocab_paths: &[PathBuf],
    gold: &[PathBuf],
    pre: PreTokenizer,
    out: &mut impl Write,
) -> Result<()> {
    writeln!(
        out,
        "tokenizer\tmode\tlen\tprecision\trecall\tf1\tredundancy"
    )?;
    for (name, path) in labels(vocab_paths).into_iter().zip(vocab_paths) {
        let vocab = load_vocab(path, pre)?;
        let rows = score_files(&vocab, gold, pre.lowercase)?;
        let (_, r) = rows.last().expect("at least one gold file");
        writeln!(
            out,
            "{name}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            vocab.marker_mode(),
            r.avg_len,
            r.precision,
            r.recall,
            r.f1,
            vocab_redundancy(&vocab)
        )?;
    }
    Ok(())
}
