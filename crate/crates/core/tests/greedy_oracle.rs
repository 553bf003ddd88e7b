//! Greedy segmentation against a brute-force longest-match scan.

use proptest::prelude::*;
use wordbound::tokenizer::{MarkerMode, Vocabulary, CONTINUATION_PREFIX, UNK};

const ALPHABET: [char; 7] = ['a', 'b', 'u', 'n', 't', 'e', 'l'];

const MARKED: [&str; 15] = [
    "un", "beat", "able", "a", "b", "t", "##beat", "##able", "##b", "##e", "##a", "##t", "##l",
    "##n", "##ble",
];
const BOUNDLESS: [&str; 15] = [
    "un", "beat", "able", "a", "b", "u", "n", "t", "e", "l", "ab", "tab", "le", "unbe", "bea",
];

/// Every entry is tried at every cursor position; the longest match wins.
fn brute_force(entries: &[&str], mode: MarkerMode, word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    let mut out = Vec::new();
    let mut cursor = 0;
    while cursor < chars.len() {
        let rest: String = chars[cursor..].iter().collect();
        let mut best: Option<&str> = None;
        for &entry in entries {
            let (surface, ok) = match (mode, entry.strip_prefix(CONTINUATION_PREFIX)) {
                (MarkerMode::Marked, Some(s)) => (s, cursor > 0),
                (MarkerMode::Marked, None) => (entry, cursor == 0),
                (MarkerMode::Boundless, _) => (entry, true),
            };
            if ok
                && rest.starts_with(surface)
                && best.is_none_or(|b| surface.chars().count() > strip(b).chars().count())
            {
                best = Some(entry);
            }
        }
        match best {
            Some(b) => {
                out.push(b.to_string());
                cursor += strip(b).chars().count();
            }
            None => return vec![UNK.to_string()],
        }
    }
    out
}

fn strip(entry: &str) -> &str {
    entry.strip_prefix(CONTINUATION_PREFIX).unwrap_or(entry)
}

fn for_each_word(max_len: usize, mut f: impl FnMut(&str)) {
    let mut word = String::new();
    fn rec(word: &mut String, left: usize, f: &mut dyn FnMut(&str)) {
        if !word.is_empty() {
            f(word);
        }
        if left == 0 {
            return;
        }
        for c in ALPHABET {
            word.push(c);
            rec(word, left - 1, f);
            word.pop();
        }
    }
    rec(&mut word, max_len, &mut f);
}

fn check_exhaustive(entries: &[&str], mode: MarkerMode, max_len: usize) -> usize {
    let vocab = Vocabulary::from_pieces(entries.iter().copied(), mode).unwrap();
    let mut n = 0;
    for_each_word(max_len, |w| {
        assert_eq!(vocab.encode_word(w), brute_force(entries, mode, w), "{w}");
        n += 1;
    });
    n
}

#[test]
fn marked_matches_brute_force() {
    assert_eq!(check_exhaustive(&MARKED, MarkerMode::Marked, 6), 137_256);
}

#[test]
fn boundless_matches_brute_force() {
    check_exhaustive(&BOUNDLESS, MarkerMode::Boundless, 6);
}

#[test]
fn hand_traces() {
    let v1 = Vocabulary::from_pieces(
        ["un", "beat", "able", "##beat", "##able", "##b"],
        MarkerMode::Marked,
    )
    .unwrap();
    assert_eq!(v1.encode_word("unbeatable"), ["un", "##beat", "##able"]);
    let v1b = Vocabulary::from_pieces(["un", "beat", "able", "b"], MarkerMode::Boundless).unwrap();
    assert_eq!(v1b.encode_word("unbeatable"), ["un", "beat", "able"]);
    assert_eq!(v1b.encode_word("qqq"), [UNK]);
}

proptest! {
    #[test]
    fn random_words_match(word in "[abuntel]{1,12}") {
        for (entries, mode) in [(&MARKED, MarkerMode::Marked), (&BOUNDLESS, MarkerMode::Boundless)] {
            let vocab = Vocabulary::from_pieces(entries.iter().copied(), mode).unwrap();
            let got = vocab.encode_word(&word);
            prop_assert_eq!(&got, &brute_force(entries, mode, &word));
            if got != [UNK] {
                let joined: String = got.iter().map(|p| match mode {
                    MarkerMode::Marked => strip(p),
                    MarkerMode::Boundless => p.as_str(),
                }).collect();
                prop_assert_eq!(joined, word.clone());
            }
            if mode == MarkerMode::Boundless {
                prop_assert!(got.iter().all(|p| !p.starts_with(CONTINUATION_PREFIX)));
            }
        }
    }
}
