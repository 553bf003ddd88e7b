//! Synthetic corpora for smoke runs and tests.
//!
//! Sentences come from a tiny grammar over morphologically built words
//! (`un` + `beat` + `able`, `play` + `er` + `s`, ...), so subword
//! tokenisers find real morph boundaries and a small model can learn where
//! words start. Everything is lowercase with punctuation already split off,
//! which makes the text equal to its own whitespace-normalised
//! pre-tokenisation.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DETERMINERS: &[&str] = &["the", "a", "every", "some", "this"];
const PREFIXES: &[&str] = &["un", "re", "dis", "over"];
const STEMS: &[&str] = &[
    "beat", "play", "read", "walk", "build", "load", "print", "think",
];
const ANIMALS: &[&str] = &["cat", "dog", "horse", "bird"];
const ADVERBS: &[&str] = &["quickly", "slowly", "often", "rarely"];
const PLACES: &[&[&str]] = &[
    &["paris"],
    &["london"],
    &["oslo"],
    &["tokyo"],
    &["new", "york"],
    &["san", "diego"],
    &["buenos", "aires"],
];

/// Word whose presence decides the label of [`separable_classification`].
pub const MARKER_WORD: &str = "zebra";
/// Entity tag set of [`bio_token_set`].
pub const ENTITY_TAGS: [&str; 3] = ["O", "B-LOC", "I-LOC"];

fn adjective<R: Rng>(rng: &mut R) -> String {
    let stem = STEMS.choose(rng).expect("non-empty");
    if rng.random_bool(0.5) {
        format!("{}{stem}able", PREFIXES.choose(rng).expect("non-empty"))
    } else {
        format!("{stem}able")
    }
}

fn noun<R: Rng>(rng: &mut R, allow_marker: bool) -> String {
    if rng.random_bool(0.3) {
        let pool: Vec<&str> = ANIMALS
            .iter()
            .copied()
            .chain(allow_marker.then_some(MARKER_WORD))
            .collect();
        return pool.choose(rng).expect("non-empty").to_string();
    }
    let stem = STEMS.choose(rng).expect("non-empty");
    if rng.random_bool(0.5) {
        format!("{stem}ers")
    } else {
        format!("{stem}er")
    }
}

fn verb<R: Rng>(rng: &mut R) -> String {
    let stem = STEMS.choose(rng).expect("non-empty");
    let suffix = ["s", "ed", "ing"].choose(rng).expect("non-empty");
    if rng.random_bool(0.3) {
        format!("{}{stem}{suffix}", PREFIXES.choose(rng).expect("non-empty"))
    } else {
        format!("{stem}{suffix}")
    }
}

/// Words of one sentence plus the span of the place phrase, if any.
fn sentence_words<R: Rng>(
    rng: &mut R,
    allow_marker: bool,
) -> (Vec<String>, Option<(usize, usize)>) {
    let mut w: Vec<String> = Vec::new();
    let det = |rng: &mut R| DETERMINERS.choose(rng).expect("non-empty").to_string();
    w.push(det(rng));
    if rng.random_bool(0.6) {
        w.push(adjective(rng));
    }
    w.push(noun(rng, allow_marker));
    w.push(verb(rng));
    if rng.random_bool(0.5) {
        w.push(det(rng));
        w.push(noun(rng, allow_marker));
    }
    if rng.random_bool(0.3) {
        w.push(ADVERBS.choose(rng).expect("non-empty").to_string());
    }
    let mut place = None;
    if rng.random_bool(0.4) {
        w.push("in".into());
        let p = PLACES.choose(rng).expect("non-empty");
        place = Some((w.len(), w.len() + p.len()));
        w.extend(p.iter().map(|s| s.to_string()));
    }
    w.push(if rng.random_bool(0.8) { "." } else { "!" }.into());
    (w, place)
}

/// `n` template sentences, deterministic in `seed`.
pub fn template_corpus(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| sentence_words(&mut rng, true).0.join(" "))
        .collect()
}

/// Balanced two-class set: label `"1"` iff the sentence contains
/// [`MARKER_WORD`].
pub fn separable_classification(n: usize, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (mut words, _) = sentence_words(&mut rng, false);
            let positive = i % 2 == 0;
            if positive {
                let at = rng.random_range(0..words.len());
                words.insert(at, MARKER_WORD.to_string());
            }
            (
                if positive { "1" } else { "0" }.to_string(),
                words.join(" "),
            )
        })
        .collect()
}

/// Sentences with `B-LOC`/`I-LOC` tags on place names and `O` elsewhere.
pub fn bio_token_set(n: usize, seed: u64) -> Vec<(Vec<String>, Vec<String>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (words, place) = sentence_words(&mut rng, true);
            let tags = (0..words.len())
                .map(|k| match place {
                    Some((s, _)) if k == s => "B-LOC",
                    Some((s, e)) if k > s && k < e => "I-LOC",
                    _ => "O",
                })
                .map(String::from)
                .collect();
            (words, tags)
        })
        .collect()
}
