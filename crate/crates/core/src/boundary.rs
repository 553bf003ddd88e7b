//! Word-boundary annotations for token sequences.
//!
//! Three per-token index schemes are derived from an [`Encoding`]'s
//! `word_ids`:
//!
//! | token    | this | game | is | un | beat | able |
//! |----------|------|------|----|----|------|------|
//! | binary   | 1    | 1    | 1  | 1  | 2    | 2    |
//! | word     | 1    | 2    | 3  | 4  | 4    | 4    |
//! | subword  | 1    | 1    | 1  | 1  | 2    | 3    |
//!
//! Special tokens get index 0 in every scheme.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::{Encoding, Vocabulary, WB};

/// Largest word index; larger values are clamped.
pub const MAX_WORD_INDEX: u16 = 256;
/// Largest subword index; larger values are clamped.
pub const MAX_SUBWORD_INDEX: u16 = 512;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoundaryError {
    #[error("word ids decrease at position {0}")]
    MalformedWordIds(usize),
    #[error("vocabulary has no [WB] token")]
    MissingWbSpecial,
    #[error("{tokens} tokens but {labels} boundary labels")]
    LengthMismatch { tokens: usize, labels: usize },
    #[error("invalid binary label {0}")]
    InvalidLabel(u8),
}

/// How word-boundary information reaches the model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundarySchema {
    #[default]
    None,
    Binary,
    WordIndex,
    SubwordIndex,
    WbTokens,
}

impl BoundarySchema {
    pub const ALL: [BoundarySchema; 5] = [
        BoundarySchema::None,
        BoundarySchema::Binary,
        BoundarySchema::WordIndex,
        BoundarySchema::SubwordIndex,
        BoundarySchema::WbTokens,
    ];

    /// Rows of the boundary embedding table, if the schema uses one.
    pub fn table_rows(self) -> Option<usize> {
        match self {
            BoundarySchema::Binary => Some(3),
            BoundarySchema::WordIndex => Some(MAX_WORD_INDEX as usize + 1),
            BoundarySchema::SubwordIndex => Some(MAX_SUBWORD_INDEX as usize + 1),
            BoundarySchema::None | BoundarySchema::WbTokens => None,
        }
    }

    /// Per-token embedding indices under this schema.
    pub fn indices(self, annotation: &BoundaryAnnotation) -> Option<Vec<u32>> {
        let widen = |v: &[u16]| v.iter().map(|&x| x as u32).collect();
        match self {
            BoundarySchema::Binary => Some(annotation.binary.iter().map(|&x| x as u32).collect()),
            BoundarySchema::WordIndex => Some(widen(&annotation.word_index)),
            BoundarySchema::SubwordIndex => Some(widen(&annotation.subword_index)),
            BoundarySchema::None | BoundarySchema::WbTokens => None,
        }
    }
}

impl std::str::FromStr for BoundarySchema {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "none" => Ok(Self::None),
            "binary" => Ok(Self::Binary),
            "word" | "word-index" => Ok(Self::WordIndex),
            "subword" | "subword-index" => Ok(Self::SubwordIndex),
            "wb-tokens" | "wbtokens" | "tokens" => Ok(Self::WbTokens),
            other => Err(format!("unknown boundary schema `{other}`")),
        }
    }
}

impl std::fmt::Display for BoundarySchema {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Binary => "binary",
            Self::WordIndex => "word-index",
            Self::SubwordIndex => "subword-index",
            Self::WbTokens => "wb-tokens",
        })
    }
}

/// Where `[WB]` tokens go.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WbPlacement {
    /// One `[WB]` between each pair of consecutive words.
    #[default]
    Between,
    /// One `[WB]` in front of every word, including the first.
    BeforeEachWord,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BoundaryAnnotation {
    /// 0 = special, 1 = word-initial, 2 = word-internal.
    pub binary: Vec<u8>,
    /// 1-based word position, 0 for specials.
    pub word_index: Vec<u16>,
    /// 1-based position within the word, 0 for specials.
    pub subword_index: Vec<u16>,
}

impl BoundaryAnnotation {
    pub fn len(&self) -> usize {
        self.binary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.binary.is_empty()
    }
}

/// Derive all three index sequences from per-token word membership.
pub fn annotate_word_ids(word_ids: &[Option<usize>]) -> Result<BoundaryAnnotation, BoundaryError> {
    let n = word_ids.len();
    let mut out = BoundaryAnnotation {
        binary: Vec::with_capacity(n),
        word_index: Vec::with_capacity(n),
        subword_index: Vec::with_capacity(n),
    };
    let mut last_word: Option<usize> = None;
    let mut words_seen: usize = 0;
    let mut within: usize = 0;
    for (pos, word) in word_ids.iter().enumerate() {
        let Some(word) = *word else {
            out.binary.push(0);
            out.word_index.push(0);
            out.subword_index.push(0);
            continue;
        };
        match last_word {
            Some(prev) if word < prev => return Err(BoundaryError::MalformedWordIds(pos)),
            Some(prev) if word == prev => {
                within += 1;
                out.binary.push(2);
            }
            _ => {
                words_seen += 1;
                within = 1;
                out.binary.push(1);
            }
        }
        last_word = Some(word);
        out.word_index
            .push(words_seen.min(MAX_WORD_INDEX as usize) as u16);
        out.subword_index
            .push(within.min(MAX_SUBWORD_INDEX as usize) as u16);
    }
    Ok(out)
}

pub fn annotate(encoding: &Encoding) -> Result<BoundaryAnnotation, BoundaryError> {
    annotate_word_ids(&encoding.word_ids)
}

/// Insert `[WB]` tokens at word starts according to `placement`.
pub fn insert_wb_tokens(
    encoding: &Encoding,
    vocab: &Vocabulary,
    placement: WbPlacement,
) -> Result<Encoding, BoundaryError> {
    let wb = vocab.specials().wb.ok_or(BoundaryError::MissingWbSpecial)?;
    let mut out = Encoding::default();
    let mut last_word: Option<usize> = None;
    for i in 0..encoding.len() {
        if let Some(word) = encoding.word_ids[i] {
            let starts_word = last_word != Some(word);
            let insert = match placement {
                WbPlacement::Between => starts_word && last_word.is_some(),
                WbPlacement::BeforeEachWord => starts_word,
            };
            if insert {
                out.push(wb, WB, None);
            }
            last_word = Some(word);
        }
        out.push(
            encoding.ids[i],
            encoding.tokens[i].clone(),
            encoding.word_ids[i],
        );
    }
    Ok(out)
}

/// Drop every `[WB]` token.
pub fn remove_wb_tokens(encoding: &Encoding, vocab: &Vocabulary) -> Encoding {
    let wb = vocab.specials().wb;
    let mut out = Encoding::default();
    for i in 0..encoding.len() {
        if Some(encoding.ids[i]) != wb {
            out.push(
                encoding.ids[i],
                encoding.tokens[i].clone(),
                encoding.word_ids[i],
            );
        }
    }
    out
}

/// Rebuild text from pieces and binary labels: a space goes in front of
/// every word-initial piece except the first, specials are skipped.
pub fn detokenize_with_boundaries<S: AsRef<str>>(
    tokens: &[S],
    binary: &[u8],
) -> Result<String, BoundaryError> {
    if tokens.len() != binary.len() {
        return Err(BoundaryError::LengthMismatch {
            tokens: tokens.len(),
            labels: binary.len(),
        });
    }
    let mut out = String::new();
    let mut started = false;
    for (tok, &label) in tokens.iter().zip(binary) {
        match label {
            0 => continue,
            1 => {
                if started {
                    out.push(' ');
                }
            }
            2 => {}
            other => return Err(BoundaryError::InvalidLabel(other)),
        }
        started = true;
        out.push_str(tok.as_ref());
    }
    Ok(out)
}
