//! Boundary-based evaluation of segmentations against gold morphs.
//!
//! A segmentation is reduced to the set of character offsets strictly inside
//! the word where one piece ends and the next begins. Precision and recall
//! are micro-averaged over all boundaries of a dataset. Words without any
//! predicted boundary contribute nothing to the precision denominator, so a
//! dataset with no predicted (resp. gold) boundaries has precision (resp.
//! recall) 1 by convention.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use log::warn;
use thiserror::Error;

use crate::tokenizer::{MarkerMode, Vocabulary, CONTINUATION_PREFIX};

#[derive(Debug, Error)]
pub enum MorphError {
    #[error("no prediction for gold word `{0}`")]
    MissingPrediction(String),
    #[error("gold set is empty")]
    EmptyGold,
    #[error("no words given")]
    EmptyInput,
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MorphError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldSegmentation {
    pub word: String,
    pub morphs: Vec<String>,
}

impl GoldSegmentation {
    pub fn new<S: Into<String>>(
        word: impl Into<String>,
        morphs: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            word: word.into(),
            morphs: morphs.into_iter().map(Into::into).collect(),
        }
    }

    /// Morphs concatenate back to the surface form.
    pub fn is_consistent(&self) -> bool {
        !self.morphs.is_empty() && self.morphs.concat() == self.word
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegEvalResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Mean number of predicted pieces per word.
    pub avg_len: f64,
    pub n_words: usize,
    /// Gold entries whose morphs do not spell the word.
    pub n_skipped: usize,
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Internal split offsets (in characters) of a segmentation.
pub fn boundary_set<S: AsRef<str>>(pieces: &[S]) -> BTreeSet<usize> {
    let mut offsets = BTreeSet::new();
    let mut pos = 0;
    let Some((_, init)) = pieces.split_last() else {
        return offsets;
    };
    for piece in init {
        pos += piece.as_ref().chars().count();
        offsets.insert(pos);
    }
    offsets.remove(&0);
    offsets
}

/// Micro-averaged boundary scores of `predictions` against `gold`.
pub fn evaluate(
    predictions: &HashMap<String, Vec<String>>,
    gold: &[GoldSegmentation],
) -> Result<SegEvalResult> {
    if gold.is_empty() {
        return Err(MorphError::EmptyGold);
    }
    let mut hits = 0usize;
    let mut n_pred = 0usize;
    let mut n_gold = 0usize;
    let mut pieces = 0usize;
    let mut n_words = 0usize;
    let mut n_skipped = 0usize;
    for entry in gold {
        if !entry.is_consistent() {
            n_skipped += 1;
            continue;
        }
        let pred = predictions
            .get(&entry.word)
            .ok_or_else(|| MorphError::MissingPrediction(entry.word.clone()))?;
        let pred_set = boundary_set(pred);
        let gold_set = boundary_set(&entry.morphs);
        hits += pred_set.intersection(&gold_set).count();
        n_pred += pred_set.len();
        n_gold += gold_set.len();
        pieces += pred.len().max(1);
        n_words += 1;
    }
    if n_skipped > 0 {
        warn!("skipped {n_skipped} gold entries whose morphs do not spell the word");
    }
    if n_words == 0 {
        return Err(MorphError::EmptyGold);
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            1.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(hits, n_pred);
    let recall = ratio(hits, n_gold);
    Ok(SegEvalResult {
        precision,
        recall,
        f1: f1_score(precision, recall),
        avg_len: pieces as f64 / n_words as f64,
        n_words,
        n_skipped,
    })
}

/// Segment a word with `vocab` and strip continuation prefixes.
pub fn surface_pieces(vocab: &Vocabulary, word: &str) -> Vec<String> {
    let mut pieces = vocab.encode_word(word);
    if vocab.marker_mode() == MarkerMode::Marked {
        for p in pieces.iter_mut().skip(1) {
            if let Some(rest) = p.strip_prefix(CONTINUATION_PREFIX) {
                *p = rest.to_owned();
            }
        }
    }
    pieces
}

/// Evaluate the segmentations a vocabulary produces for every gold word.
pub fn evaluate_vocab(vocab: &Vocabulary, gold: &[GoldSegmentation]) -> Result<SegEvalResult> {
    let predictions = gold
        .iter()
        .map(|g| (g.word.clone(), surface_pieces(vocab, &g.word)))
        .collect();
    evaluate(&predictions, gold)
}

/// Fraction of non-special tokens that exist both bare and `##`-prefixed.
/// Both members of a pair are counted.
pub fn vocab_redundancy(vocab: &Vocabulary) -> f64 {
    let regular: Vec<&str> = vocab
        .regular_ids()
        .filter_map(|id| vocab.token(id))
        .collect();
    if regular.is_empty() || vocab.marker_mode() == MarkerMode::Boundless {
        return 0.0;
    }
    let pairs = regular
        .iter()
        .filter(|t| !t.starts_with(CONTINUATION_PREFIX))
        .filter(|t| vocab.contains(&format!("{CONTINUATION_PREFIX}{t}")))
        .count();
    (2 * pairs) as f64 / regular.len() as f64
}

/// Mean number of pieces per word.
pub fn avg_seq_len<S: AsRef<str>>(vocab: &Vocabulary, words: &[S]) -> Result<f64> {
    if words.is_empty() {
        return Err(MorphError::EmptyInput);
    }
    let total: usize = words
        .iter()
        .map(|w| vocab.encode_word(w.as_ref()).len())
        .sum();
    Ok(total as f64 / words.len() as f64)
}

/// Parse `word<TAB>morph morph ...` lines. Blank lines and `#` comments
/// are ignored.
pub fn parse_gold(text: &str, lowercase: bool) -> Result<Vec<GoldSegmentation>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let line = if lowercase {
            line.to_lowercase()
        } else {
            line.to_owned()
        };
        let (word, morphs) = line.split_once('\t').ok_or_else(|| MorphError::Parse {
            line: i + 1,
            reason: "expected word<TAB>morphs".into(),
        })?;
        let morphs: Vec<String> = morphs
            .split(' ')
            .filter(|m| !m.is_empty())
            .map(str::to_owned)
            .collect();
        if word.is_empty() || morphs.is_empty() {
            return Err(MorphError::Parse {
                line: i + 1,
                reason: "empty word or morph list".into(),
            });
        }
        out.push(GoldSegmentation {
            word: word.to_owned(),
            morphs,
        });
    }
    Ok(out)
}

pub fn read_gold_file(path: impl AsRef<Path>, lowercase: bool) -> Result<Vec<GoldSegmentation>> {
    parse_gold(&fs::read_to_string(path)?, lowercase)
}

/// Unweighted mean of per-dataset scores.
pub fn macro_average(results: &[SegEvalResult]) -> Option<SegEvalResult> {
    if results.is_empty() {
        return None;
    }
    let n = results.len() as f64;
    let mean = |f: fn(&SegEvalResult) -> f64| results.iter().map(f).sum::<f64>() / n;
    Some(SegEvalResult {
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        f1: mean(|r| r.f1),
        avg_len: mean(|r| r.avg_len),
        n_words: results.iter().map(|r| r.n_words).sum(),
        n_skipped: results.iter().map(|r| r.n_skipped).sum(),
    })
}

pub const REPORT_HEADER: &str = "dataset\tlen\tprecision\trecall\tf1\tn_words\tn_skipped";

pub fn report_row(name: &str, r: &SegEvalResult) -> String {
    format!(
        "{name}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\t{}\t{}",
        r.avg_len, r.precision, r.recall, r.f1, r.n_words, r.n_skipped
    )
}
