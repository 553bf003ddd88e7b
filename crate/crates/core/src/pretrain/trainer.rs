use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundarySchema;
use crate::encoder::{
    evaluate_mlm, loss_and_grad, BoundaryTargets, Checkpoint, CheckpointHeader, ModelConfig,
    Parameters,
};
use crate::tokenizer::Vocabulary;

use super::{
    clip_global_norm, mask_examples, prepare_example, step_rng, AdamW, Example, MaskingPolicy,
    PretrainError, Result, TrainConfig,
};

pub const METRICS_FILE: &str = "metrics.jsonl";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";

const SPLIT_SALT: u64 = 0x5be1_7a11;
const ORDER_SALT: u64 = 0x0bd3_e5c4;
const EVAL_SALT: u64 = 0x3e7a_1c0d;

/// One line of the metrics log. Eval fields are `null` on steps without an
/// evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub step: u64,
    pub lr: f64,
    pub train_loss: f64,
    pub train_token_loss: f64,
    pub train_boundary_loss: Option<f64>,
    pub eval_loss: Option<f64>,
    pub eval_token_acc: Option<f64>,
    pub eval_boundary_acc: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalMetrics {
    /// Mean masked-token cross-entropy.
    pub token_loss: f64,
    pub boundary_loss: Option<f64>,
    pub token_acc: f64,
    pub boundary_acc: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PretrainOutput {
    pub params: Parameters<f32>,
    /// Records produced by this run (not earlier runs being resumed).
    pub metrics: Vec<MetricsRecord>,
    pub final_step: u64,
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Epoch-wise shuffled sample order, a pure function of `(seed, epoch)`.
struct SampleOrder {
    seed: u64,
    n: usize,
    cached: Option<(u64, Vec<usize>)>,
}

impl SampleOrder {
    fn index(&mut self, global: u64) -> usize {
        let epoch = global / self.n as u64;
        let pos = (global % self.n as u64) as usize;
        if self.cached.as_ref().is_none_or(|(e, _)| *e != epoch) {
            let mut perm: Vec<usize> = (0..self.n).collect();
            let mut rng = step_rng(self.seed ^ ORDER_SALT, epoch);
            perm.shuffle(&mut rng);
            self.cached = Some((epoch, perm));
        }
        self.cached.as_ref().expect("just filled").1[pos]
    }
}

pub struct Pretrainer<'v> {
    vocab: &'v Vocabulary,
    model: ModelConfig,
    train: TrainConfig,
    policy: MaskingPolicy,
    train_set: Vec<Example>,
    eval_set: Vec<Example>,
}

impl<'v> Pretrainer<'v> {
    /// Encode the corpus and split off the held-out set.
    pub fn new<S: AsRef<str>>(
        vocab: &'v Vocabulary,
        corpus: &[S],
        model: ModelConfig,
        train: TrainConfig,
    ) -> Result<Self> {
        train.validate()?;
        model.validate()?;
        if model.vocab_size != vocab.len() {
            return Err(PretrainError::InvalidConfig(format!(
                "model vocab_size {} but vocabulary has {} entries",
                model.vocab_size,
                vocab.len()
            )));
        }
        if train.seq_len > model.max_seq_len {
            return Err(PretrainError::InvalidConfig(format!(
                "seq_len {} exceeds model max_seq_len {}",
                train.seq_len, model.max_seq_len
            )));
        }
        if model.wb_schema == BoundarySchema::WbTokens && vocab.specials().wb.is_none() {
            return Err(PretrainError::SchemaConflict(
                "wb-tokens schema needs [WB] in the vocabulary".into(),
            ));
        }
        let mut examples = Vec::new();
        for line in corpus {
            if let Some(e) = prepare_example(
                vocab,
                line.as_ref(),
                model.wb_schema,
                train.wb_placement,
                train.seq_len,
            )? {
                examples.push(e);
            }
        }
        if examples.len() < 2 {
            return Err(PretrainError::CorpusTooSmall {
                usable: examples.iter().map(|e| e.len() - 2).sum(),
                needed: train.batch_size,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(train.seed ^ SPLIT_SALT);
        examples.shuffle(&mut rng);
        let n_eval = ((train.eval_fraction * examples.len() as f64).round() as usize)
            .clamp(1, examples.len() - 1);
        let train_set = examples.split_off(n_eval);
        let eval_set = examples;
        let policy = MaskingPolicy::for_vocab(vocab, train.mask_rate);
        let usable: usize = train_set
            .iter()
            .map(|e| {
                e.ids
                    .iter()
                    .filter(|&&id| !policy.protected.contains(&id))
                    .count()
            })
            .sum();
        if usable < train.batch_size {
            return Err(PretrainError::CorpusTooSmall {
                usable,
                needed: train.batch_size,
            });
        }
        Ok(Self {
            vocab,
            model,
            train,
            policy,
            train_set,
            eval_set,
        })
    }

    pub fn model_config(&self) -> &ModelConfig {
        &self.model
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.train
    }

    pub fn train_set(&self) -> &[Example] {
        &self.train_set
    }

    pub fn eval_set(&self) -> &[Example] {
        &self.eval_set
    }

    /// Loss and accuracy on the held-out split with a fixed masking draw.
    pub fn evaluate(&self, params: &Parameters<f32>) -> Result<EvalMetrics> {
        self.evaluate_on(params, &self.eval_set)
    }

    /// Like [`Pretrainer::evaluate`] on arbitrary prepared examples. Both
    /// heads are scored on masked positions only, whatever positions the
    /// boundary head trains on.
    pub fn evaluate_on(
        &self,
        params: &Parameters<f32>,
        examples: &[Example],
    ) -> Result<EvalMetrics> {
        let config = ModelConfig {
            boundary_targets: BoundaryTargets::MaskedOnly,
            ..self.model.clone()
        };
        let mut rng = step_rng(self.train.seed ^ EVAL_SALT, 0);
        let pad = self.vocab.specials().pad;
        let (mut tok_sum, mut tok_n, mut tok_ok) = (0.0, 0usize, 0usize);
        let (mut bnd_sum, mut bnd_n, mut bnd_ok) = (0.0, 0usize, 0usize);
        let mut has_boundary = false;
        for chunk in examples.chunks(self.train.batch_size) {
            let refs: Vec<&Example> = chunk.iter().collect();
            let masked =
                match mask_examples(&refs, self.model.wb_schema, pad, &self.policy, &mut rng) {
                    Ok(m) => m,
                    Err(PretrainError::NothingToMask) => continue,
                    Err(e) => return Err(e),
                };
            let loss = evaluate_mlm(params, &config, &masked.batch, &masked.targets)?;
            tok_sum += loss.token as f64 * loss.token_count as f64;
            tok_n += loss.token_count;
            tok_ok += loss.token_correct;
            if let Some(b) = loss.boundary {
                has_boundary = true;
                bnd_sum += b as f64 * loss.boundary_count as f64;
                bnd_n += loss.boundary_count;
                bnd_ok += loss.boundary_correct;
            }
        }
        let tok_n = tok_n.max(1) as f64;
        let bnd_n = bnd_n.max(1) as f64;
        Ok(EvalMetrics {
            token_loss: tok_sum / tok_n,
            boundary_loss: has_boundary.then_some(bnd_sum / bnd_n),
            token_acc: tok_ok as f64 / tok_n,
            boundary_acc: has_boundary.then_some(bnd_ok as f64 / bnd_n),
        })
    }

    fn checkpoint(&self, params: &Parameters<f32>, opt: &AdamW, step: u64) -> Checkpoint {
        let (m, v) = opt.moments(params);
        Checkpoint::new(
            CheckpointHeader {
                config: self.model.clone(),
                seed: self.train.seed,
                step,
                extra: [("kind".to_string(), "pretrain".to_string())].into(),
            },
            params,
            Some((&m, &v)),
        )
    }

    /// Train from scratch, or from `resume`, up to `total_steps`. With an
    /// output directory, metrics are appended to `metrics.jsonl` and
    /// checkpoints written there.
    pub fn run(
        &self,
        out_dir: Option<&Path>,
        resume: Option<&Checkpoint>,
    ) -> Result<PretrainOutput> {
        let (mut params, mut opt, start) = match resume {
            Some(ck) => {
                if ck.header.config != self.model {
                    return Err(PretrainError::InvalidConfig(
                        "checkpoint model config differs".into(),
                    ));
                }
                if ck.header.seed != self.train.seed {
                    return Err(PretrainError::InvalidConfig(
                        "checkpoint seed differs".into(),
                    ));
                }
                if ck.header.step > self.train.total_steps {
                    return Err(PretrainError::StepOutOfRange {
                        step: ck.header.step,
                        total: self.train.total_steps,
                    });
                }
                let params = ck.parameters()?;
                let mut opt = AdamW::for_params(&params, self.train.weight_decay);
                if let Some((m, v)) = ck.moments()? {
                    opt.restore(&m, &v, ck.header.step);
                }
                (params, opt, ck.header.step)
            }
            None => {
                let params = Parameters::<f32>::init(&self.model, self.train.seed)?;
                let opt = AdamW::for_params(&params, self.train.weight_decay);
                (params, opt, 0)
            }
        };
        let mut log = match out_dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                Some(
                    OpenOptions::new()
                        .create(true)
                        .append(true)
                        .open(dir.join(METRICS_FILE))?,
                )
            }
            None => None,
        };
        let schedule = self.train.schedule();
        let pad = self.vocab.specials().pad;
        let mut order = SampleOrder {
            seed: self.train.seed,
            n: self.train_set.len(),
            cached: None,
        };
        let b = self.train.batch_size as u64;
        let mut metrics = Vec::new();
        info!(
            "pretraining {} params on {} sequences ({} held out), steps {}..={}",
            params.num_params(),
            self.train_set.len(),
            self.eval_set.len(),
            start + 1,
            self.train.total_steps
        );
        for step in start + 1..=self.train.total_steps {
            let batch: Vec<&Example> = ((step - 1) * b..step * b)
                .map(|g| &self.train_set[order.index(g)])
                .collect();
            let mut rng = step_rng(self.train.seed, step);
            let masked = mask_examples(&batch, self.model.wb_schema, pad, &self.policy, &mut rng)?;
            let (loss, mut grads) =
                loss_and_grad(&params, &self.model, &masked.batch, &masked.targets)?;
            if let Some(max) = self.train.clip_norm {
                clip_global_norm(&mut grads, max);
            }
            let lr = schedule.at(step)?;
            opt.step_params(&mut params, &grads, lr);
            if !params.all_finite() {
                return Err(PretrainError::InvalidConfig(format!(
                    "non-finite parameters after step {step}"
                )));
            }

            let mut record = MetricsRecord {
                step,
                lr,
                train_loss: loss.total as f64,
                train_token_loss: loss.token as f64,
                train_boundary_loss: loss.boundary.map(|x| x as f64),
                eval_loss: None,
                eval_token_acc: None,
                eval_boundary_acc: None,
            };
            let eval_now = step == self.train.total_steps
                || (self.train.eval_every > 0 && step % self.train.eval_every == 0);
            if eval_now {
                let e = self.evaluate(&params)?;
                record.eval_loss = Some(e.token_loss + e.boundary_loss.unwrap_or(0.0));
                record.eval_token_acc = Some(e.token_acc);
                record.eval_boundary_acc = e.boundary_acc;
                info!(
                    "step {step} lr {lr:.3e} train {:.4} eval {:.4} acc {:.3}",
                    record.train_loss,
                    record.eval_loss.unwrap_or(f64::NAN),
                    e.token_acc
                );
            } else {
                debug!("step {step} lr {lr:.3e} train {:.4}", record.train_loss);
            }
            if let Some(f) = log.as_mut() {
                writeln!(f, "{}", serde_json::to_string(&record)?)?;
            }
            metrics.push(record);

            if let Some(dir) = out_dir {
                if self.train.checkpoint_every > 0 && step % self.train.checkpoint_every == 0 {
                    self.checkpoint(&params, &opt, step)
                        .save(&checkpoint_path(dir, step))?;
                }
            }
        }
        if let Some(dir) = out_dir {
            self.checkpoint(&params, &opt, self.train.total_steps)
                .save(&dir.join(FINAL_CHECKPOINT))?;
        }
        Ok(PretrainOutput {
            params,
            metrics,
            final_step: self.train.total_steps,
        })
    }
}

pub fn checkpoint_path(dir: &Path, step: u64) -> PathBuf {
    dir.join(format!("step-{step:06}.ckpt"))
}
