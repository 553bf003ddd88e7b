//! Finite-difference verification of the analytic gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{loss_and_grad, Batch, MlmTargets, ModelConfig, Parameters, Result};
use crate::boundary::{annotate_word_ids, BoundarySchema};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-4;
/// Coordinates sampled per check.
pub const SAMPLED_COORDS: usize = 200;
/// Largest relative error a passing check may report.
pub const TOLERANCE: f64 = 1e-3;
/// Denominator floor so coordinates with near-zero gradient compare on an
/// absolute scale.
pub const REL_FLOOR: f64 = 1e-6;

const SEQ_LEN: usize = 6;
const VOCAB: usize = 11;
const WB_ID: u32 = 5;
const FIRST_REGULAR: u32 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `tensor[index]` of the worst coordinate.
    pub worst: String,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < TOLERANCE
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// One layer, width 8, two heads, vocabulary of 11, sequences of 6.
pub fn tiny_config(schema: BoundarySchema, implicit_head: bool) -> ModelConfig {
    ModelConfig {
        n_layers: 1,
        n_heads: 2,
        d_model: 8,
        d_ff: 16,
        vocab_size: VOCAB,
        max_seq_len: SEQ_LEN,
        wb_schema: schema,
        implicit_head,
        allow_wb_tokens_with_implicit: true,
        ..ModelConfig::default()
    }
}

/// Two sequences, the first padded, with random words and a random mask.
pub fn tiny_batch(config: &ModelConfig, seed: u64) -> (Batch, MlmTargets) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lengths = [SEQ_LEN - 1, SEQ_LEN];
    let mut ids = Vec::new();
    let mut attention = Vec::new();
    let mut wb = Vec::new();
    let mut labels = Vec::new();
    let mut mask = Vec::new();
    let mut originals = Vec::new();
    for &len in &lengths {
        // [CLS] w w w ... [SEP] [PAD]*
        let mut row = vec![2u32];
        let mut word_ids = vec![None];
        let mut word = 0usize;
        let wb_tokens = config.wb_schema == BoundarySchema::WbTokens;
        while row.len() < len - 1 {
            if row.len() == 2 || (row.len() > 2 && rng.random_bool(0.4)) {
                if wb_tokens && row.len() < len - 2 {
                    row.push(WB_ID);
                    word_ids.push(None);
                }
                word += 1;
            }
            row.push(rng.random_range(FIRST_REGULAR..VOCAB as u32));
            word_ids.push(Some(word));
        }
        row.push(3);
        word_ids.push(None);
        let ann = annotate_word_ids(&word_ids).expect("monotone word ids");
        let mut idx = config
            .wb_schema
            .indices(&ann)
            .unwrap_or_else(|| vec![0; len]);
        let mut lab = ann.binary.clone();
        let mut m: Vec<bool> = (0..len)
            .map(|j| j > 0 && j < len - 1 && rng.random_bool(0.5))
            .collect();
        m[1] = true;
        let mut orig = row.clone();
        // corrupt masked inputs the way pretraining does
        for j in 0..len {
            if m[j] {
                row[j] = 4;
            }
        }
        let mut att = vec![true; len];
        while row.len() < SEQ_LEN {
            row.push(0);
            att.push(false);
            idx.push(0);
            lab.push(0);
            m.push(false);
        }
        orig.resize(SEQ_LEN, 0);
        ids.push(row);
        attention.push(att);
        wb.push(idx);
        labels.push(lab);
        mask.push(m);
        originals.push(orig);
    }
    let uses_table = config.wb_rows().is_some();
    (
        Batch {
            ids,
            attention,
            wb: uses_table.then_some(wb),
        },
        MlmTargets {
            token_targets: originals,
            mask,
            boundary_labels: Some(labels),
        },
    )
}

fn scalar_loss(
    params: &Parameters<f64>,
    config: &ModelConfig,
    batch: &Batch,
    targets: &MlmTargets,
) -> Result<f64> {
    Ok(super::evaluate_mlm(params, config, batch, targets)?.total)
}

/// Compare analytic and central-difference gradients at `n_coords` sampled
/// coordinates (tensor first, then an element of it).
pub fn check_gradients(
    params: &Parameters<f64>,
    config: &ModelConfig,
    batch: &Batch,
    targets: &MlmTargets,
    n_coords: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let (_, grads) = loss_and_grad(params, config, batch, targets)?;
    let grad_tensors = grads.tensors();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: String::new(),
        analytic: 0.0,
        numeric: 0.0,
        checked: 0,
    };
    let n_tensors = grad_tensors.len();
    for _ in 0..n_coords {
        let t = rng.random_range(0..n_tensors);
        let k = rng.random_range(0..grad_tensors[t].data.len());
        let original = probe.tensors()[t].data[k];
        probe.tensors_mut()[t].data[k] = original + FD_STEP;
        let plus = scalar_loss(&probe, config, batch, targets)?;
        probe.tensors_mut()[t].data[k] = original - FD_STEP;
        let minus = scalar_loss(&probe, config, batch, targets)?;
        probe.tensors_mut()[t].data[k] = original;
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let analytic = grad_tensors[t].data[k];
        let err = relative_error(analytic, numeric);
        report.checked += 1;
        if err >= report.max_rel_error {
            report.max_rel_error = err;
            report.worst = format!("{}[{k}]", grad_tensors[t].name);
            report.analytic = analytic;
            report.numeric = numeric;
        }
    }
    Ok(report)
}

/// Full check on the tiny model. Parameters are drawn wider than the
/// training init so attention and layer norms are away from their trivial
/// regime.
pub fn grad_check(
    schema: BoundarySchema,
    implicit_head: bool,
    seed: u64,
) -> Result<GradCheckReport> {
    let config = tiny_config(schema, implicit_head);
    let mut params = Parameters::<f64>::zeros(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    params.fill_matrices_normal(&mut rng, 0.3);
    for t in params.tensors_mut() {
        if t.shape.len() == 1 {
            for x in t.data.iter_mut() {
                *x += rng.random_range(-0.2..0.2);
            }
        }
    }
    let (batch, targets) = tiny_batch(&config, seed ^ 0x9e37_79b9);
    check_gradients(
        &params,
        &config,
        &batch,
        &targets,
        SAMPLED_COORDS,
        seed.wrapping_add(1),
    )
}
