//! WordPiece vocabulary training.
//!
//! Starting from single characters, the trainer repeatedly merges the
//! adjacent pair with the highest likelihood score
//! `freq(ab) / (freq(a) * freq(b))`. Ties go to the lexicographically
//! smallest merged string. Scores are compared exactly with integer
//! cross-multiplication so training is bit-for-bit reproducible.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use log::{debug, warn};

use super::vocab::SPECIAL_TOKENS;
use super::{MarkerMode, Result, TokenizerConfig, TokenizerError, Vocabulary, CONTINUATION_PREFIX};

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub vocab: Vocabulary,
    /// Number of merge operations applied.
    pub merges: usize,
    /// Merges ran out before `vocab_size` was reached.
    pub exhausted: bool,
}

pub struct WordPieceTrainer {
    config: TokenizerConfig,
}

type Pair = (usize, usize);

struct State {
    mode: MarkerMode,
    symbols: Vec<String>,
    symbol_ids: HashMap<String, usize>,
    words: Vec<Vec<usize>>,
    counts: Vec<u64>,
    symbol_freq: Vec<u64>,
    pair_freq: HashMap<Pair, u64>,
    pair_words: HashMap<Pair, BTreeSet<usize>>,
}

impl State {
    fn intern(&mut self, s: String) -> usize {
        if let Some(&id) = self.symbol_ids.get(&s) {
            return id;
        }
        let id = self.symbols.len();
        self.symbol_ids.insert(s.clone(), id);
        self.symbols.push(s);
        self.symbol_freq.push(0);
        id
    }

    fn merged(&self, (a, b): Pair) -> String {
        let right = &self.symbols[b];
        let right = match self.mode {
            MarkerMode::Marked => right.strip_prefix(CONTINUATION_PREFIX).unwrap_or(right),
            MarkerMode::Boundless => right,
        };
        format!("{}{}", self.symbols[a], right)
    }

    fn add_word(&mut self, w: usize, sign: i8) {
        let count = self.counts[w];
        let word = &self.words[w];
        for &s in word {
            let f = &mut self.symbol_freq[s];
            *f = if sign > 0 { *f + count } else { *f - count };
        }
        for pair in word.windows(2).map(|p| (p[0], p[1])) {
            if sign > 0 {
                *self.pair_freq.entry(pair).or_insert(0) += count;
                self.pair_words.entry(pair).or_default().insert(w);
            } else if let Some(f) = self.pair_freq.get_mut(&pair) {
                *f -= count;
                if *f == 0 {
                    self.pair_freq.remove(&pair);
                }
            }
        }
    }

    /// Exact comparison of `p1 / (l1 r1)` against `p2 / (l2 r2)`.
    fn cmp_score(&self, x: Pair, y: Pair) -> Ordering {
        let lhs = self.pair_freq[&x] as u128
            * self.symbol_freq[y.0] as u128
            * self.symbol_freq[y.1] as u128;
        let rhs = self.pair_freq[&y] as u128
            * self.symbol_freq[x.0] as u128
            * self.symbol_freq[x.1] as u128;
        lhs.cmp(&rhs)
    }

    fn best_pair(&self, min_freq: u64) -> Option<(Pair, String)> {
        let mut best: Option<(Pair, String)> = None;
        for (&pair, &freq) in &self.pair_freq {
            if freq < min_freq {
                continue;
            }
            let merged = self.merged(pair);
            let better = match &best {
                None => true,
                Some((cur, cur_merged)) => match self.cmp_score(pair, *cur) {
                    Ordering::Greater => true,
                    Ordering::Less => false,
                    Ordering::Equal => {
                        (&merged, &self.symbols[pair.0], &self.symbols[pair.1])
                            < (cur_merged, &self.symbols[cur.0], &self.symbols[cur.1])
                    }
                },
            };
            if better {
                best = Some((pair, merged));
            }
        }
        best
    }

    fn apply_merge(&mut self, pair: Pair, new_symbol: usize) {
        let Some(candidates) = self.pair_words.remove(&pair) else {
            return;
        };
        for w in candidates {
            let word = &self.words[w];
            if !word.windows(2).any(|p| (p[0], p[1]) == pair) {
                continue;
            }
            self.add_word(w, -1);
            let word = &self.words[w];
            let mut merged = Vec::with_capacity(word.len());
            let mut i = 0;
            while i < word.len() {
                if i + 1 < word.len() && (word[i], word[i + 1]) == pair {
                    merged.push(new_symbol);
                    i += 2;
                } else {
                    merged.push(word[i]);
                    i += 1;
                }
            }
            self.words[w] = merged;
            self.add_word(w, 1);
        }
    }
}

impl WordPieceTrainer {
    pub fn new(config: TokenizerConfig) -> Self {
        Self { config }
    }

    pub fn fit<I, S>(&self, corpus: I) -> Result<TrainReport>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let cfg = &self.config;
        let pre = cfg.pre_tokenizer();
        let mut word_counts: BTreeMap<String, u64> = BTreeMap::new();
        for doc in corpus {
            for word in pre.split(doc.as_ref()) {
                *word_counts.entry(word).or_insert(0) += 1;
            }
        }
        if word_counts.is_empty() {
            return Err(TokenizerError::EmptyCorpus);
        }

        let mut state = State {
            mode: cfg.marker_mode,
            symbols: Vec::new(),
            symbol_ids: HashMap::new(),
            words: Vec::with_capacity(word_counts.len()),
            counts: Vec::with_capacity(word_counts.len()),
            symbol_freq: Vec::new(),
            pair_freq: HashMap::new(),
            pair_words: HashMap::new(),
        };
        for (word, count) in &word_counts {
            let syms = word
                .chars()
                .enumerate()
                .map(|(i, c)| match (cfg.marker_mode, i) {
                    (MarkerMode::Marked, i) if i > 0 => format!("{CONTINUATION_PREFIX}{c}"),
                    _ => c.to_string(),
                })
                .map(|s| state.intern(s))
                .collect();
            state.words.push(syms);
            state.counts.push(*count);
        }
        for w in 0..state.words.len() {
            state.add_word(w, 1);
        }

        let mut alphabet: Vec<String> = state
            .symbols
            .iter()
            .filter(|s| !SPECIAL_TOKENS.contains(&s.as_str()))
            .cloned()
            .collect();
        alphabet.sort();
        let minimum = SPECIAL_TOKENS.len() + alphabet.len();
        if cfg.vocab_size < minimum {
            return Err(TokenizerError::VocabSizeTooSmall {
                requested: cfg.vocab_size,
                minimum,
            });
        }

        let mut tokens: Vec<String> = SPECIAL_TOKENS.iter().map(|s| s.to_string()).collect();
        tokens.extend(alphabet);
        let mut in_vocab: BTreeSet<String> = tokens.iter().cloned().collect();

        let mut merges = 0;
        let mut exhausted = false;
        while tokens.len() < cfg.vocab_size {
            let Some((pair, merged)) = state.best_pair(cfg.min_pair_frequency.max(1)) else {
                exhausted = true;
                break;
            };
            let new_symbol = state.intern(merged.clone());
            state.apply_merge(pair, new_symbol);
            merges += 1;
            if in_vocab.insert(merged.clone()) {
                tokens.push(merged);
            }
        }
        if exhausted {
            warn!(
                "merges exhausted at {} tokens (requested {})",
                tokens.len(),
                cfg.vocab_size
            );
        }
        debug!(
            "wordpiece training: {merges} merges, {} tokens",
            tokens.len()
        );

        let vocab = Vocabulary::from_tokens(tokens, cfg.marker_mode)?.with_pre_tokenizer(pre);
        Ok(TrainReport {
            vocab,
            merges,
            exhausted,
        })
    }
}

/// Train a vocabulary on line-delimited documents.
pub fn train_wordpiece<I, S>(corpus: I, config: &TokenizerConfig) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    WordPieceTrainer::new(config.clone())
        .fit(corpus)
        .map(|r| r.vocab)
}
