use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::trie::Trie;
use super::{
    MarkerMode, PreTokenizer, Result, TokenizerError, CLS, CONTINUATION_PREFIX, MASK, PAD, SEP,
    UNK, WB,
};

/// Special tokens in the order they occupy the first vocabulary ids.
pub const SPECIAL_TOKENS: [&str; 6] = [PAD, UNK, CLS, SEP, MASK, WB];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecialIds {
    pub pad: u32,
    pub unk: u32,
    pub cls: u32,
    pub sep: u32,
    pub mask: u32,
    /// Absent in vocabularies loaded from files that predate `[WB]`.
    pub wb: Option<u32>,
}

impl SpecialIds {
    pub fn contains(&self, id: u32) -> bool {
        id == self.pad
            || id == self.unk
            || id == self.cls
            || id == self.sep
            || id == self.mask
            || Some(id) == self.wb
    }
}

/// An immutable, ordered set of subword strings. Token id = index.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    mode: MarkerMode,
    specials: SpecialIds,
    pre: PreTokenizer,
    initial: Trie,
    continuation: Option<Trie>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens && self.mode == other.mode && self.pre == other.pre
    }
}

impl Vocabulary {
    /// Build a vocabulary from an ordered token list.
    pub fn from_tokens(tokens: Vec<String>, mode: MarkerMode) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() {
                return Err(TokenizerError::MalformedVocab(format!(
                    "empty token at id {i}"
                )));
            }
            if index.insert(tok.clone(), i as u32).is_some() {
                return Err(TokenizerError::MalformedVocab(format!(
                    "duplicate token `{tok}`"
                )));
            }
        }
        let required = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| TokenizerError::MalformedVocab(format!("missing special {name}")))
        };
        let specials = SpecialIds {
            pad: required(PAD)?,
            unk: required(UNK)?,
            cls: required(CLS)?,
            sep: required(SEP)?,
            mask: required(MASK)?,
            wb: index.get(WB).copied(),
        };

        let mut initial = Trie::default();
        let mut cont = Trie::default();
        for (i, tok) in tokens.iter().enumerate() {
            let id = i as u32;
            if specials.contains(id) {
                continue;
            }
            match (mode, tok.strip_prefix(CONTINUATION_PREFIX)) {
                (MarkerMode::Boundless, Some(_)) => {
                    return Err(TokenizerError::MalformedVocab(format!(
                        "boundless vocabulary contains prefixed token `{tok}`"
                    )))
                }
                (MarkerMode::Marked, Some(rest)) if !rest.is_empty() => cont.insert(rest, id),
                _ => initial.insert(tok, id),
            }
        }
        let continuation = match mode {
            MarkerMode::Marked => Some(cont),
            MarkerMode::Boundless => None,
        };
        Ok(Self {
            tokens,
            index,
            mode,
            specials,
            pre: PreTokenizer::default(),
            initial,
            continuation,
        })
    }

    /// Specials in canonical order followed by `pieces`.
    pub fn from_pieces<I, S>(pieces: I, mode: MarkerMode) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens = SPECIAL_TOKENS
            .iter()
            .map(|s| s.to_string())
            .chain(pieces.into_iter().map(Into::into))
            .collect();
        Self::from_tokens(tokens, mode)
    }

    /// Parse the one-token-per-line format. When `mode` is `None` it is
    /// inferred: any `##`-prefixed token means [`MarkerMode::Marked`].
    pub fn from_text(text: &str, mode: Option<MarkerMode>) -> Result<Self> {
        let tokens: Vec<String> = text
            .lines()
            .map(|l| l.trim_end_matches('\r').to_owned())
            .collect();
        for (i, special) in SPECIAL_TOKENS.iter().enumerate().take(5) {
            if tokens.get(i).map(String::as_str) != Some(*special) {
                return Err(TokenizerError::MalformedVocab(format!(
                    "expected {special} at line {}",
                    i + 1
                )));
            }
        }
        let mode = mode.unwrap_or_else(|| {
            let marked = tokens
                .iter()
                .any(|t| t.len() > CONTINUATION_PREFIX.len() && t.starts_with(CONTINUATION_PREFIX));
            if marked {
                MarkerMode::Marked
            } else {
                MarkerMode::Boundless
            }
        });
        Self::from_tokens(tokens, mode)
    }

    pub fn read(path: impl AsRef<Path>, mode: Option<MarkerMode>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?, mode)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for tok in &self.tokens {
            out.push_str(tok);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn with_pre_tokenizer(mut self, pre: PreTokenizer) -> Self {
        self.pre = pre;
        self
    }

    pub fn pre_tokenizer(&self) -> PreTokenizer {
        self.pre
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn marker_mode(&self) -> MarkerMode {
        self.mode
    }

    pub fn specials(&self) -> SpecialIds {
        self.specials
    }

    pub fn is_special(&self, id: u32) -> bool {
        self.specials.contains(id)
    }

    /// Non-special token ids, in id order.
    pub fn regular_ids(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.tokens.len() as u32).filter(move |&id| !self.is_special(id))
    }

    pub(crate) fn initial_trie(&self) -> &Trie {
        &self.initial
    }

    pub(crate) fn continuation_trie(&self) -> &Trie {
        self.continuation.as_ref().unwrap_or(&self.initial)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specials_come_first() {
        let vocab = Vocabulary::from_pieces(["a"], MarkerMode::Boundless).unwrap();
        assert_eq!(&vocab.tokens()[..6], SPECIAL_TOKENS);
        assert_eq!(vocab.specials().pad, 0);
        assert_eq!(vocab.specials().wb, Some(5));
        assert_eq!(vocab.id("a"), Some(6));
        assert_eq!(vocab.regular_ids().collect::<Vec<_>>(), [6]);
    }

    #[test]
    fn rejects_duplicates_and_prefixed_boundless_tokens() {
        assert!(Vocabulary::from_pieces(["a", "a"], MarkerMode::Boundless).is_err());
        assert!(Vocabulary::from_pieces(["a", "##a"], MarkerMode::Boundless).is_err());
        assert!(Vocabulary::from_pieces(["a", "##a"], MarkerMode::Marked).is_ok());
    }

    #[test]
    fn text_round_trip_and_mode_inference() {
        let vocab = Vocabulary::from_pieces(["un", "##beat"], MarkerMode::Marked).unwrap();
        let text = vocab.to_text();
        assert!(text.starts_with("[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\n[WB]\n"));
        let back = Vocabulary::from_text(&text, None).unwrap();
        assert_eq!(back, vocab);
        assert_eq!(back.marker_mode(), MarkerMode::Marked);

        let boundless = Vocabulary::from_pieces(["un"], MarkerMode::Boundless).unwrap();
        let back = Vocabulary::from_text(&boundless.to_text(), None).unwrap();
        assert_eq!(back.marker_mode(), MarkerMode::Boundless);
    }

    #[test]
    fn missing_wb_is_tolerated() {
        let vocab =
            Vocabulary::from_text("[PAD]\n[UNK]\n[CLS]\n[SEP]\n[MASK]\nfoo\n", None).unwrap();
        assert_eq!(vocab.specials().wb, None);
        assert!(Vocabulary::from_text("[UNK]\n[PAD]\n", None).is_err());
    }
}
