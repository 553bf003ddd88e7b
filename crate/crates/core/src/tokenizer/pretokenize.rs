use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// BERT-style basic tokenisation: whitespace split, optional lowercasing and
/// isolation of punctuation characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreTokenizer {
    pub lowercase: bool,
    pub split_punctuation: bool,
}

impl Default for PreTokenizer {
    fn default() -> Self {
        Self {
            lowercase: true,
            split_punctuation: true,
        }
    }
}

// ASCII symbol ranges are treated as punctuation in addition to \p{P},
// the same convention BERT's basic tokenizer uses.
const PUNCT_CLASS: &str = r"\p{P}!-/:-@\[-`{-~";

fn punct_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(&format!(r"[{PUNCT_CLASS}]|[^\s{PUNCT_CLASS}]+")).expect("valid regex")
    })
}

impl PreTokenizer {
    pub fn split(&self, text: &str) -> Vec<String> {
        let text = if self.lowercase {
            text.to_lowercase()
        } else {
            text.to_owned()
        };
        if self.split_punctuation {
            punct_regex()
                .find_iter(&text)
                .map(|m| m.as_str().to_owned())
                .collect()
        } else {
            text.split_whitespace().map(str::to_owned).collect()
        }
    }
}

/// Split `text` on Unicode whitespace and isolate punctuation characters.
pub fn pretokenize(text: &str, lowercase: bool) -> Vec<String> {
    PreTokenizer {
        lowercase,
        split_punctuation: true,
    }
    .split(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn whitespace_split() {
        assert_eq!(
            pretokenize("this game is unbeatable", true),
            ["this", "game", "is", "unbeatable"]
        );
        assert!(pretokenize("", true).is_empty());
        assert!(pretokenize(" \t\n ", true).is_empty());
    }

    #[test]
    fn punctuation_is_isolated() {
        assert_eq!(
            pretokenize("over-priced!", true),
            ["over", "-", "priced", "!"]
        );
        assert_eq!(pretokenize("«oui»", true), ["«", "oui", "»"]);
        assert_eq!(pretokenize("a$b", false), ["a", "$", "b"]);
    }

    #[test]
    fn lowercase_flag() {
        assert_eq!(pretokenize("Hello World", true), ["hello", "world"]);
        assert_eq!(pretokenize("Hello World", false), ["Hello", "World"]);
    }

    #[test]
    fn punctuation_switch_off() {
        let pre = PreTokenizer {
            lowercase: false,
            split_punctuation: false,
        };
        assert_eq!(pre.split("over-priced!  now"), ["over-priced!", "now"]);
    }

    proptest! {
        #[test]
        fn pretokens_have_no_whitespace(text in "\\PC{0,40}") {
            for tok in pretokenize(&text, false) {
                prop_assert!(!tok.is_empty());
                prop_assert!(!tok.chars().any(char::is_whitespace));
            }
        }

        #[test]
        fn rejoining_reproduces_normalized_text(text in "[a-z ,.!\t]{0,40}") {
            let rejoined: String = pretokenize(&text, false).concat();
            let stripped: String = text.chars().filter(|c| !c.is_whitespace()).collect();
            prop_assert_eq!(rejoined, stripped);
            let no_punct = PreTokenizer { lowercase: false, split_punctuation: false };
            let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
            prop_assert_eq!(no_punct.split(&text).join(" "), normalized);
        }
    }
}
