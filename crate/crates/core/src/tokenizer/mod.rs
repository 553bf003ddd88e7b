//! WordPiece tokenisation with and without continuation markers.
//!
//! In [`MarkerMode::Marked`] mode word-internal pieces carry the `##`
//! continuation prefix, so the same surface string may exist twice in the
//! vocabulary (`beat` and `##beat`). [`MarkerMode::Boundless`] drops the
//! prefix entirely: every piece has a single surface form and the token
//! stream no longer says where words start.

mod pretokenize;
mod trainer;
mod trie;
mod vocab;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use pretokenize::{pretokenize, PreTokenizer};
pub use trainer::{train_wordpiece, TrainReport, WordPieceTrainer};
pub use vocab::{SpecialIds, Vocabulary, SPECIAL_TOKENS};

/// Prefix marking word-internal pieces in [`MarkerMode::Marked`] vocabularies.
pub const CONTINUATION_PREFIX: &str = "##";

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";
pub const WB: &str = "[WB]";

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("corpus is empty after pre-tokenisation")]
    EmptyCorpus,
    #[error("vocab size {requested} is smaller than specials + alphabet ({minimum})")]
    VocabSizeTooSmall { requested: usize, minimum: usize },
    #[error("unknown token id {0}")]
    UnknownTokenId(u32),
    #[error("malformed vocabulary: {0}")]
    MalformedVocab(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TokenizerError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkerMode {
    /// Standard WordPiece: non-initial pieces are prefixed with `##`.
    Marked,
    /// WordPiece without boundary markers.
    Boundless,
}

impl std::str::FromStr for MarkerMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "marked" | "wordpiece" => Ok(MarkerMode::Marked),
            "boundless" | "prime" | "wordpiece-prime" => Ok(MarkerMode::Boundless),
            other => Err(format!("unknown marker mode `{other}`")),
        }
    }
}

impl std::fmt::Display for MarkerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MarkerMode::Marked => "marked",
            MarkerMode::Boundless => "boundless",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub vocab_size: usize,
    pub min_pair_frequency: u64,
    pub lowercase: bool,
    pub split_punctuation: bool,
    pub marker_mode: MarkerMode,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            vocab_size: 16384,
            min_pair_frequency: 1,
            lowercase: true,
            split_punctuation: true,
            marker_mode: MarkerMode::Boundless,
        }
    }
}

impl TokenizerConfig {
    pub fn pre_tokenizer(&self) -> PreTokenizer {
        PreTokenizer {
            lowercase: self.lowercase,
            split_punctuation: self.split_punctuation,
        }
    }
}

/// Token ids with their strings and the pre-token each one came from.
///
/// `word_ids[i]` is `None` for special tokens (`[CLS]`, `[SEP]`, `[WB]`, ...).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Encoding {
    pub ids: Vec<u32>,
    pub tokens: Vec<String>,
    pub word_ids: Vec<Option<usize>>,
}

impl Encoding {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub(crate) fn push(&mut self, id: u32, token: impl Into<String>, word: Option<usize>) {
        self.ids.push(id);
        self.tokens.push(token.into());
        self.word_ids.push(word);
    }

    /// Number of distinct words covered by the encoding.
    pub fn word_count(&self) -> usize {
        let mut count = 0;
        let mut last = None;
        for w in self.word_ids.iter().flatten() {
            if last != Some(*w) {
                count += 1;
                last = Some(*w);
            }
        }
        count
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EncodeOptions {
    /// Wrap the sequence in `[CLS] ... [SEP]`.
    pub wrap: bool,
}

impl Vocabulary {
    /// Pre-tokenise `text` and segment every word.
    pub fn encode(&self, text: &str, options: EncodeOptions) -> Encoding {
        let mut enc = Encoding::default();
        let specials = self.specials();
        if options.wrap {
            enc.push(specials.cls, CLS, None);
        }
        for (word_idx, word) in self.pre_tokenizer().split(text).iter().enumerate() {
            for id in self.encode_word_ids(word) {
                enc.push(id, self.token(id).unwrap_or(UNK), Some(word_idx));
            }
        }
        if options.wrap {
            enc.push(specials.sep, SEP, None);
        }
        enc
    }

    /// Greedy longest-match-first segmentation of a single word.
    pub fn encode_word(&self, word: &str) -> Vec<String> {
        self.encode_word_ids(word)
            .into_iter()
            .map(|id| self.token(id).unwrap_or(UNK).to_owned())
            .collect()
    }

    pub fn encode_word_ids(&self, word: &str) -> Vec<u32> {
        if word.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut cursor = 0;
        while cursor < word.len() {
            let trie = if cursor == 0 {
                self.initial_trie()
            } else {
                self.continuation_trie()
            };
            match trie.longest_prefix(&word[cursor..]) {
                Some((len, id)) => {
                    out.push(id);
                    cursor += len;
                }
                None => return vec![self.specials().unk],
            }
        }
        out
    }

    /// Turn ids back into text.
    ///
    /// Marked vocabularies glue `##` pieces onto the previous piece, which
    /// restores whitespace-normalised input. Boundless vocabularies have no
    /// such information and join every piece with a space; this is lossy, use
    /// [`crate::boundary::detokenize_with_boundaries`] when boundary labels
    /// are available.
    pub fn decode(&self, ids: &[u32]) -> Result<String> {
        let specials = self.specials();
        let mut out = String::new();
        for &id in ids {
            let token = self.token(id).ok_or(TokenizerError::UnknownTokenId(id))?;
            if id == specials.pad
                || id == specials.cls
                || id == specials.sep
                || Some(id) == specials.wb
            {
                continue;
            }
            match (self.marker_mode(), token.strip_prefix(CONTINUATION_PREFIX)) {
                (MarkerMode::Marked, Some(rest)) if !rest.is_empty() && !out.is_empty() => {
                    out.push_str(rest)
                }
                _ => {
                    if !out.is_empty() {
                        out.push(' ');
                    }
                    out.push_str(token);
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn v1_marked() -> Vocabulary {
        Vocabulary::from_pieces(
            ["un", "beat", "able", "##beat", "##able", "##b"],
            MarkerMode::Marked,
        )
        .unwrap()
    }

    pub(crate) fn v1_boundless() -> Vocabulary {
        Vocabulary::from_pieces(["un", "beat", "able", "b"], MarkerMode::Boundless).unwrap()
    }

    #[test]
    fn encode_word_marked_hand_trace() {
        assert_eq!(
            v1_marked().encode_word("unbeatable"),
            ["un", "##beat", "##able"]
        );
    }

    #[test]
    fn encode_word_boundless_hand_trace() {
        assert_eq!(
            v1_boundless().encode_word("unbeatable"),
            ["un", "beat", "able"]
        );
    }

    #[test]
    fn unsegmentable_word_is_whole_unk() {
        assert_eq!(v1_boundless().encode_word("qqq"), [UNK]);
        // partial cover still yields a single UNK
        assert_eq!(v1_boundless().encode_word("unq"), [UNK]);
        assert_eq!(v1_marked().encode_word("beatq"), [UNK]);
    }

    #[test]
    fn marked_mode_requires_prefixed_continuations() {
        // "un" exists only word-initially, so "beatun" cannot be covered
        assert_eq!(v1_marked().encode_word("beatun"), [UNK]);
        assert_eq!(v1_boundless().encode_word("beatun"), ["beat", "un"]);
    }

    #[test]
    fn encode_sentence_word_ids() {
        let vocab = Vocabulary::from_pieces(
            ["un", "beat", "able", "b", "this", "game", "is"],
            MarkerMode::Boundless,
        )
        .unwrap();
        let enc = vocab.encode("this game is unbeatable", EncodeOptions::default());
        assert_eq!(enc.tokens, ["this", "game", "is", "un", "beat", "able"]);
        assert_eq!(
            enc.word_ids,
            [Some(0), Some(1), Some(2), Some(3), Some(3), Some(3)]
        );
        assert_eq!(enc.word_count(), 4);

        let enc = vocab.encode("un un", EncodeOptions::default());
        assert_eq!(enc.tokens, ["un", "un"]);
        assert_eq!(enc.word_ids, [Some(0), Some(1)]);
    }

    #[test]
    fn encode_empty() {
        let vocab = v1_boundless();
        assert!(vocab.encode("", EncodeOptions::default()).is_empty());
        let wrapped = vocab.encode("", EncodeOptions { wrap: true });
        assert_eq!(wrapped.tokens, [CLS, SEP]);
        assert_eq!(wrapped.word_ids, [None, None]);
    }

    #[test]
    fn decode_examples() {
        let marked = v1_marked();
        let ids: Vec<u32> = ["un", "##beat", "##able"]
            .iter()
            .map(|t| marked.id(t).unwrap())
            .collect();
        assert_eq!(marked.decode(&ids).unwrap(), "unbeatable");

        let boundless = v1_boundless();
        let ids: Vec<u32> = ["un", "beat", "able"]
            .iter()
            .map(|t| boundless.id(t).unwrap())
            .collect();
        assert_eq!(boundless.decode(&ids).unwrap(), "un beat able");
        assert_eq!(boundless.decode(&[]).unwrap(), "");
    }

    #[test]
    fn decode_rejects_unknown_id() {
        let err = v1_boundless().decode(&[999]).unwrap_err();
        assert!(matches!(err, TokenizerError::UnknownTokenId(999)));
    }

    #[test]
    fn marker_mode_parses() {
        assert_eq!("marked".parse::<MarkerMode>().unwrap(), MarkerMode::Marked);
        assert_eq!(
            "Boundless".parse::<MarkerMode>().unwrap(),
            MarkerMode::Boundless
        );
        assert!("other".parse::<MarkerMode>().is_err());
    }
}
