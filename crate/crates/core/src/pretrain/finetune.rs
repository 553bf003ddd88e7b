//! Full-parameter finetuning for sequence and token classification.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::info;
use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundarySchema, WbPlacement};
use crate::encoder::{
    backward_sequence, encode_sequence, Checkpoint, ModelConfig, Parameters, TensorView,
    TensorViewMut, INIT_STD,
};
use crate::tokenizer::{Encoding, Vocabulary};

use super::{
    prepare_encoding, prepare_example, step_rng, AdamW, Example, LinearSchedule, PretrainError,
    Result,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    #[default]
    SequenceClassification,
    TokenClassification,
}

/// Boundary information added only at finetuning time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WbInjection {
    #[default]
    None,
    /// Fresh binary boundary embedding table.
    FtBinary,
    /// `[WB]` tokens inserted into the inputs.
    FtWbTokens,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    #[default]
    Mean,
    Cls,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FinetuneConfig {
    pub batch_size: usize,
    pub seq_len: usize,
    pub lr: f64,
    pub warmup_fraction: f64,
    pub epochs: usize,
    pub task: Task,
    pub wb_injection: WbInjection,
    pub pooling: Pooling,
    pub seeds: Vec<u64>,
    pub weight_decay: f64,
    /// Drop seeds more than two standard deviations from the mean before
    /// reporting.
    pub remove_outliers: bool,
    pub wb_placement: WbPlacement,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            seq_len: 128,
            lr: 2e-5,
            warmup_fraction: 0.05,
            epochs: 5,
            task: Task::SequenceClassification,
            wb_injection: WbInjection::None,
            pooling: Pooling::Mean,
            seeds: vec![0, 1, 2],
            weight_decay: 0.01,
            remove_outliers: false,
            wb_placement: WbPlacement::Between,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceExample {
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenExample {
    pub words: Vec<String>,
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FinetuneData {
    Sequence {
        train: Vec<SequenceExample>,
        dev: Vec<SequenceExample>,
    },
    Token {
        train: Vec<TokenExample>,
        dev: Vec<TokenExample>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedResult {
    pub seed: u64,
    /// Dev metric after each epoch.
    pub epoch_scores: Vec<f64>,
    pub epoch_train_loss: Vec<f64>,
    /// 1-based.
    pub best_epoch: usize,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FinetuneReport {
    pub task: Task,
    pub wb_injection: WbInjection,
    /// `accuracy` or `entity_f1`.
    pub metric: String,
    pub seeds: Vec<SeedResult>,
    /// Seeds that entered the mean.
    pub kept: Vec<u64>,
    pub mean: f64,
    pub std: f64,
}

fn parse_err(line: usize, reason: impl Into<String>) -> PretrainError {
    PretrainError::Parse {
        line,
        reason: reason.into(),
    }
}

/// `label<TAB>text` per line; blank lines are skipped.
pub fn parse_sequence_tsv(text: &str) -> Result<Vec<SequenceExample>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (label, body) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(i + 1, "expected label<TAB>text"))?;
        if label.trim().is_empty() {
            return Err(parse_err(i + 1, "empty label"));
        }
        out.push(SequenceExample {
            label: label.trim().to_string(),
            text: body.to_string(),
        });
    }
    Ok(out)
}

/// CoNLL style: `token<TAB>tag` per line, blank line between sentences.
pub fn parse_token_tsv(text: &str) -> Result<Vec<TokenExample>> {
    let mut out = Vec::new();
    let mut cur = TokenExample {
        words: Vec::new(),
        tags: Vec::new(),
    };
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if !cur.words.is_empty() {
                out.push(std::mem::replace(
                    &mut cur,
                    TokenExample {
                        words: Vec::new(),
                        tags: Vec::new(),
                    },
                ));
            }
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(word), Some(tag)) = (cols.next(), cols.next()) else {
            return Err(parse_err(i + 1, "expected token<TAB>tag"));
        };
        if cols.next().is_some() {
            return Err(parse_err(i + 1, "more than two columns"));
        }
        cur.words.push(word.to_string());
        cur.tags.push(tag.trim().to_string());
    }
    if !cur.words.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

pub fn read_sequence_tsv(path: &Path) -> Result<Vec<SequenceExample>> {
    parse_sequence_tsv(&fs::read_to_string(path)?)
}

pub fn read_token_tsv(path: &Path) -> Result<Vec<TokenExample>> {
    parse_token_tsv(&fs::read_to_string(path)?)
}

/// Entity spans `(type, start, end)` of a BIO sequence; an `I-X` that does
/// not continue an `X` span opens a new one.
fn spans(tags: &[String]) -> Vec<(String, usize, usize)> {
    let mut out = Vec::new();
    let mut open: Option<(String, usize)> = None;
    for (k, tag) in tags.iter().enumerate() {
        let (prefix, kind) = match tag.split_once('-') {
            Some((p, t)) if p == "B" || p == "I" => (p, t),
            _ => ("O", ""),
        };
        let continues = prefix == "I" && open.as_ref().is_some_and(|(t, _)| t == kind);
        if !continues {
            if let Some((t, s)) = open.take() {
                out.push((t, s, k));
            }
            if prefix != "O" {
                open = Some((kind.to_string(), k));
            }
        }
    }
    if let Some((t, s)) = open {
        out.push((t, s, tags.len()));
    }
    out
}

/// Entity-level micro F1 over sentences. No entities on either side scores
/// 1.0.
pub fn entity_f1(gold: &[Vec<String>], pred: &[Vec<String>]) -> f64 {
    let (mut correct, mut n_gold, mut n_pred) = (0usize, 0usize, 0usize);
    for (g, p) in gold.iter().zip(pred) {
        let gs = spans(g);
        let ps = spans(p);
        n_gold += gs.len();
        n_pred += ps.len();
        correct += ps.iter().filter(|s| gs.contains(s)).count();
    }
    let precision = if n_pred == 0 {
        1.0
    } else {
        correct as f64 / n_pred as f64
    };
    let recall = if n_gold == 0 {
        1.0
    } else {
        correct as f64 / n_gold as f64
    };
    crate::morpho::f1_score(precision, recall)
}

/// An encoded training or dev item.
struct Item {
    example: Example,
    /// Sequence task: one label. Token task: `(position, label)` for the first
    /// token of every word that survived truncation.
    targets: Vec<(usize, usize)>,
    /// Token task: word count of the original sentence.
    n_words: usize,
}

fn token_encoding(vocab: &Vocabulary, words: &[String]) -> Encoding {
    let pre = vocab.pre_tokenizer();
    let mut enc = Encoding::default();
    for (k, w) in words.iter().enumerate() {
        for piece in pre.split(w) {
            for id in vocab.encode_word_ids(&piece) {
                enc.push(id, vocab.token(id).unwrap_or_default(), Some(k));
            }
        }
    }
    enc
}

struct Prepared {
    labels: Vec<String>,
    train: Vec<Item>,
    dev: Vec<Item>,
    /// Token task: gold tags of every dev sentence, dropped items included.
    dev_gold: Vec<Vec<String>>,
}

fn label_index(labels: &BTreeMap<String, usize>, label: &str) -> Result<usize> {
    labels.get(label).copied().ok_or_else(|| {
        PretrainError::LabelMismatch(format!(
            "label {label:?} does not occur in the training data"
        ))
    })
}

fn prepare(
    vocab: &Vocabulary,
    data: &FinetuneData,
    schema: BoundarySchema,
    cfg: &FinetuneConfig,
    seq_len: usize,
) -> Result<Prepared> {
    let mut label_set = BTreeMap::new();
    match (data, cfg.task) {
        (FinetuneData::Sequence { train, dev }, Task::SequenceClassification) => {
            for e in train {
                label_set.insert(e.label.clone(), 0);
            }
            for (i, v) in label_set.values_mut().enumerate() {
                *v = i;
            }
            let encode = |set: &[SequenceExample]| -> Result<Vec<Item>> {
                let mut out = Vec::new();
                for e in set {
                    let y = label_index(&label_set, &e.label)?;
                    if let Some(example) =
                        prepare_example(vocab, &e.text, schema, cfg.wb_placement, seq_len)?
                    {
                        out.push(Item {
                            example,
                            targets: vec![(0, y)],
                            n_words: 0,
                        });
                    }
                }
                Ok(out)
            };
            Ok(Prepared {
                train: encode(train)?,
                dev: encode(dev)?,
                labels: label_set.into_keys().collect(),
                dev_gold: Vec::new(),
            })
        }
        (FinetuneData::Token { train, dev }, Task::TokenClassification) => {
            for e in train.iter().chain(dev) {
                if e.words.len() != e.tags.len() {
                    return Err(PretrainError::LabelMismatch(format!(
                        "{} words but {} tags",
                        e.words.len(),
                        e.tags.len()
                    )));
                }
            }
            for e in train {
                for t in &e.tags {
                    label_set.insert(t.clone(), 0);
                }
            }
            label_set.entry("O".to_string()).or_insert(0);
            for (i, v) in label_set.values_mut().enumerate() {
                *v = i;
            }
            let encode = |set: &[TokenExample]| -> Result<Vec<Item>> {
                let mut out = Vec::new();
                for e in set {
                    let ys = e
                        .tags
                        .iter()
                        .map(|t| label_index(&label_set, t))
                        .collect::<Result<Vec<_>>>()?;
                    let enc = token_encoding(vocab, &e.words);
                    let Some(example) =
                        prepare_encoding(vocab, enc, schema, cfg.wb_placement, seq_len)?
                    else {
                        out.push(Item {
                            example: Example {
                                ids: Vec::new(),
                                word_ids: Vec::new(),
                                wb: Vec::new(),
                                labels: Vec::new(),
                            },
                            targets: Vec::new(),
                            n_words: e.words.len(),
                        });
                        continue;
                    };
                    let mut targets = Vec::new();
                    let mut last = None;
                    for (pos, w) in example.word_ids.iter().enumerate() {
                        if let Some(w) = *w {
                            if last != Some(w) {
                                targets.push((pos, ys[w]));
                                last = Some(w);
                            }
                        }
                    }
                    out.push(Item {
                        example,
                        targets,
                        n_words: e.words.len(),
                    });
                }
                Ok(out)
            };
            let mut train_items = encode(train)?;
            train_items.retain(|it| !it.targets.is_empty());
            Ok(Prepared {
                train: train_items,
                dev: encode(dev)?,
                labels: label_set.into_keys().collect(),
                dev_gold: dev.iter().map(|e| e.tags.clone()).collect(),
            })
        }
        _ => Err(PretrainError::InvalidConfig(
            "task does not match dataset kind".into(),
        )),
    }
}

struct Head {
    w: Array2<f32>,
    b: Array1<f32>,
}

impl Head {
    fn views(&self) -> Vec<TensorView<'_, f32>> {
        vec![
            TensorView {
                name: "cls_w".into(),
                shape: self.w.shape().to_vec(),
                data: self.w.as_slice().expect("standard layout"),
            },
            TensorView {
                name: "cls_b".into(),
                shape: vec![self.b.len()],
                data: self.b.as_slice().expect("standard layout"),
            },
        ]
    }

    fn views_mut(&mut self) -> Vec<TensorViewMut<'_, f32>> {
        let shape = self.w.shape().to_vec();
        let n = self.b.len();
        vec![
            TensorViewMut {
                name: "cls_w".into(),
                shape,
                data: self.w.as_slice_mut().expect("standard layout"),
            },
            TensorViewMut {
                name: "cls_b".into(),
                shape: vec![n],
                data: self.b.as_slice_mut().expect("standard layout"),
            },
        ]
    }
}

fn softmax(row: ndarray::ArrayView1<f32>) -> Array1<f32> {
    let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let mut p = row.mapv(|v| (v - max).exp());
    let s = p.sum();
    p /= s;
    p
}

/// Rows of the hidden states fed to the classifier and the target of each.
fn classifier_rows(item: &Item, task: Task, pooling: Pooling) -> Vec<(Vec<usize>, usize)> {
    match task {
        Task::SequenceClassification => {
            let rows = match pooling {
                Pooling::Cls => vec![0],
                Pooling::Mean => (0..item.example.len()).collect(),
            };
            vec![(rows, item.targets[0].1)]
        }
        Task::TokenClassification => item.targets.iter().map(|&(p, y)| (vec![p], y)).collect(),
    }
}

struct Model<'a> {
    config: &'a ModelConfig,
    params: Parameters<f32>,
    head: Head,
    task: Task,
    pooling: Pooling,
}

impl Model<'_> {
    /// Forward one item; with `grads`, also backpropagate `scale * dLoss`.
    /// Returns per-target logits and the summed loss.
    fn run(
        &self,
        item: &Item,
        grads: Option<(&mut Parameters<f32>, &mut Head, f32)>,
    ) -> Result<(Vec<Array1<f32>>, f32)> {
        let e = &item.example;
        let wb = self.config.wb_rows().map(|_| e.wb.as_slice());
        let valid = vec![true; e.len()];
        let (hidden, cache) = encode_sequence(&self.params, self.config, &e.ids, wb, &valid)?;
        let rows = classifier_rows(item, self.task, self.pooling);
        let mut logits = Vec::with_capacity(rows.len());
        let mut loss = 0.0;
        let mut dhidden = grads
            .as_ref()
            .map(|_| Array2::<f32>::zeros(hidden.raw_dim()));
        let mut head_grads = Vec::new();
        for (rows, y) in &rows {
            let n = rows.len() as f32;
            let mut pooled = Array1::<f32>::zeros(hidden.ncols());
            for &r in rows {
                pooled += &hidden.row(r);
            }
            pooled /= n;
            let z = pooled.dot(&self.head.w) + &self.head.b;
            let mut p = softmax(z.view());
            loss -= p[*y].max(f32::MIN_POSITIVE).ln();
            logits.push(z);
            if let (Some(dh), Some((_, _, scale))) = (dhidden.as_mut(), grads.as_ref()) {
                p[*y] -= 1.0;
                p *= *scale;
                let dpooled = self.head.w.dot(&p) / n;
                for &r in rows {
                    let mut row = dh.row_mut(r);
                    row += &dpooled;
                }
                head_grads.push((pooled, p));
            }
        }
        if let (Some((g, hg, _)), Some(dh)) = (grads, dhidden) {
            for (pooled, dz) in head_grads {
                let outer = pooled
                    .view()
                    .insert_axis(Axis(1))
                    .dot(&dz.view().insert_axis(Axis(0)));
                hg.w += &outer;
                hg.b += &dz;
            }
            backward_sequence(&self.params, self.config, &cache, &e.ids, wb, &dh, g);
        }
        Ok((logits, loss))
    }

    fn argmax(z: &Array1<f32>) -> usize {
        let mut best = 0;
        for (i, &v) in z.iter().enumerate() {
            if v > z[best] {
                best = i;
            }
        }
        best
    }

    fn score(&self, prep: &Prepared) -> Result<f64> {
        match self.task {
            Task::SequenceClassification => {
                let mut ok = 0usize;
                for item in &prep.dev {
                    let (logits, _) = self.run(item, None)?;
                    if Self::argmax(&logits[0]) == item.targets[0].1 {
                        ok += 1;
                    }
                }
                Ok(ok as f64 / prep.dev.len().max(1) as f64)
            }
            Task::TokenClassification => {
                let mut pred = Vec::with_capacity(prep.dev.len());
                for item in &prep.dev {
                    let mut tags = vec!["O".to_string(); item.n_words];
                    if !item.targets.is_empty() {
                        let (logits, _) = self.run(item, None)?;
                        for ((pos, _), z) in item.targets.iter().zip(&logits) {
                            let w = item.example.word_ids[*pos].expect("target is a word token");
                            tags[w] = prep.labels[Self::argmax(z)].clone();
                        }
                    }
                    pred.push(tags);
                }
                Ok(entity_f1(&prep.dev_gold, &pred))
            }
        }
    }
}

/// Model config and parameters after applying the injection variant.
fn adapt(
    checkpoint: &Checkpoint,
    vocab: &Vocabulary,
    injection: WbInjection,
    rng: &mut ChaCha8Rng,
) -> Result<(ModelConfig, Parameters<f32>)> {
    let mut config = checkpoint.header.config.clone();
    if config.vocab_size != vocab.len() {
        return Err(PretrainError::InvalidConfig(format!(
            "checkpoint vocab_size {} but vocabulary has {} entries",
            config.vocab_size,
            vocab.len()
        )));
    }
    if injection != WbInjection::None && config.wb_schema != BoundarySchema::None {
        return Err(PretrainError::SchemaConflict(format!(
            "{injection:?} needs a model pretrained without boundary information, checkpoint uses {}",
            config.wb_schema
        )));
    }
    let mut params = checkpoint.parameters()?;
    config.implicit_head = false;
    params.boundary_head_w = None;
    params.boundary_head_b = None;
    match injection {
        WbInjection::None => {}
        WbInjection::FtBinary => {
            config.wb_schema = BoundarySchema::Binary;
            let rows = config.wb_rows().expect("binary has a table");
            params.attach_wb_table(rows, rng);
        }
        WbInjection::FtWbTokens => {
            if vocab.specials().wb.is_none() {
                return Err(PretrainError::SchemaConflict(
                    "[WB] missing from the vocabulary".into(),
                ));
            }
            config.wb_schema = BoundarySchema::WbTokens;
        }
    }
    Ok((config, params))
}

/// Finetune with one seed; reports the dev metric after every epoch.
pub fn finetune_seed(
    checkpoint: &Checkpoint,
    vocab: &Vocabulary,
    data: &FinetuneData,
    cfg: &FinetuneConfig,
    seed: u64,
) -> Result<SeedResult> {
    if cfg.batch_size == 0 || cfg.epochs == 0 {
        return Err(PretrainError::InvalidConfig(
            "batch_size and epochs must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (config, params) = adapt(checkpoint, vocab, cfg.wb_injection, &mut rng)?;
    let seq_len = cfg.seq_len.min(config.max_seq_len);
    let prep = prepare(vocab, data, config.wb_schema, cfg, seq_len)?;
    if prep.train.is_empty() || prep.dev.is_empty() {
        return Err(PretrainError::InvalidConfig(
            "empty train or dev split".into(),
        ));
    }
    let normal = Normal::new(0.0, INIT_STD).expect("valid std");
    let d = config.d_model;
    let n_labels = prep.labels.len();
    let head = Head {
        w: Array2::from_shape_fn((d, n_labels), |_| normal.sample(&mut rng) as f32),
        b: Array1::zeros(n_labels),
    };
    let mut model = Model {
        config: &config,
        params,
        head,
        task: cfg.task,
        pooling: cfg.pooling,
    };
    let mut enc_opt = AdamW::for_params(&model.params, cfg.weight_decay);
    let head_shapes: Vec<Vec<usize>> = model.head.views().into_iter().map(|v| v.shape).collect();
    let mut head_opt = AdamW::new(&head_shapes, cfg.weight_decay);

    let steps_per_epoch = prep.train.len().div_ceil(cfg.batch_size) as u64;
    let total = steps_per_epoch * cfg.epochs as u64;
    let schedule = LinearSchedule {
        peak: cfg.lr,
        warmup: (cfg.warmup_fraction * total as f64).round() as u64,
        total,
    };
    let mut order: Vec<usize> = (0..prep.train.len()).collect();
    let mut step = 0u64;
    let mut epoch_scores = Vec::with_capacity(cfg.epochs);
    let mut epoch_train_loss = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut step_rng(seed, epoch as u64));
        let mut loss_sum = 0.0f64;
        let mut loss_n = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            step += 1;
            let n_targets: usize = chunk
                .iter()
                .map(|&i| classifier_rows(&prep.train[i], cfg.task, cfg.pooling).len())
                .sum();
            let scale = 1.0 / n_targets.max(1) as f32;
            let mut g = model.params.zeros_like();
            let mut hg = Head {
                w: Array2::zeros(model.head.w.raw_dim()),
                b: Array1::zeros(n_labels),
            };
            for &i in chunk {
                let (_, loss) = model.run(&prep.train[i], Some((&mut g, &mut hg, scale)))?;
                loss_sum += loss as f64;
            }
            loss_n += n_targets;
            let lr = schedule.at(step)?;
            enc_opt.step_params(&mut model.params, &g, lr);
            head_opt.step(model.head.views_mut(), hg.views(), lr);
        }
        let score = model.score(&prep)?;
        let mean_loss = loss_sum / loss_n.max(1) as f64;
        info!(
            "seed {seed} epoch {} train loss {mean_loss:.4} dev {score:.4}",
            epoch + 1
        );
        epoch_scores.push(score);
        epoch_train_loss.push(mean_loss);
    }
    let (best_idx, best) =
        epoch_scores
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, s)| if s > acc.1 { (i, s) } else { acc },
            );
    Ok(SeedResult {
        seed,
        epoch_scores,
        epoch_train_loss,
        best_epoch: best_idx + 1,
        best,
    })
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Finetune once per configured seed and summarise best-epoch dev scores.
pub fn finetune(
    checkpoint: &Checkpoint,
    vocab: &Vocabulary,
    data: &FinetuneData,
    cfg: &FinetuneConfig,
) -> Result<FinetuneReport> {
    if cfg.seeds.is_empty() {
        return Err(PretrainError::InvalidConfig(
            "at least one seed required".into(),
        ));
    }
    let seeds = cfg
        .seeds
        .iter()
        .map(|&s| finetune_seed(checkpoint, vocab, data, cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let bests: Vec<f64> = seeds.iter().map(|s| s.best).collect();
    let (mut mean, mut std) = mean_std(&bests);
    let mut kept: Vec<u64> = seeds.iter().map(|s| s.seed).collect();
    if cfg.remove_outliers && std > 0.0 {
        let inliers: Vec<&SeedResult> = seeds
            .iter()
            .filter(|s| (s.best - mean).abs() <= 2.0 * std)
            .collect();
        kept = inliers.iter().map(|s| s.seed).collect();
        let scores: Vec<f64> = inliers.iter().map(|s| s.best).collect();
        (mean, std) = mean_std(&scores);
    }
    Ok(FinetuneReport {
        task: cfg.task,
        wb_injection: cfg.wb_injection,
        metric: match cfg.task {
            Task::SequenceClassification => "accuracy",
            Task::TokenClassification => "entity_f1",
        }
        .to_string(),
        seeds,
        kept,
        mean,
        std,
    })
}
