use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::BoundarySchema;
use crate::encoder::{Batch, MlmTargets};
use crate::tokenizer::Vocabulary;

use super::{collate, Example, PretrainError, Result};

/// RNG for training step `step` under `seed`: one ChaCha stream per step, so
/// any step can be replayed without running the ones before it.
pub fn step_rng(seed: u64, step: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(step);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskingPolicy {
    pub rate: f64,
    pub mask_id: u32,
    /// Ids never selected for masking.
    pub protected: Vec<u32>,
    /// Pool for the random-replacement branch.
    pub replacement_ids: Vec<u32>,
}

impl MaskingPolicy {
    /// Specials are protected except `[WB]`, which stays maskable so the
    /// model is also trained to predict it.
    pub fn for_vocab(vocab: &Vocabulary, rate: f64) -> Self {
        let s = vocab.specials();
        let mut protected = vec![s.pad, s.cls, s.sep, s.mask];
        protected.sort_unstable();
        Self {
            rate,
            mask_id: s.mask,
            protected,
            replacement_ids: vocab.regular_ids().collect(),
        }
    }

    fn maskable(&self, id: u32) -> bool {
        self.protected.binary_search(&id).is_err()
    }

    /// `max(1, round(rate * usable))`, capped by `usable`.
    pub fn count(&self, usable: usize) -> usize {
        if usable == 0 {
            return 0;
        }
        ((self.rate * usable as f64).round() as usize).clamp(1, usable)
    }
}

type Rows<T> = Vec<Vec<T>>;

/// Select positions per sequence and corrupt them: 80% become `[MASK]`, 10% a
/// random regular token, 10% stay unchanged. Returns the corrupted ids and
/// the selection mask.
pub fn dynamic_mask<R: Rng>(
    ids: &[Vec<u32>],
    attention: &[Vec<bool>],
    policy: &MaskingPolicy,
    rng: &mut R,
) -> Result<(Rows<u32>, Rows<bool>)> {
    let mut corrupted = ids.to_vec();
    let mut mask: Vec<Vec<bool>> = ids.iter().map(|r| vec![false; r.len()]).collect();
    let mut any = false;
    for (i, row) in ids.iter().enumerate() {
        let usable: Vec<usize> = (0..row.len())
            .filter(|&j| attention[i][j] && policy.maskable(row[j]))
            .collect();
        let n = policy.count(usable.len());
        if n == 0 {
            continue;
        }
        any = true;
        let mut chosen: Vec<usize> = sample(rng, usable.len(), n)
            .into_iter()
            .map(|k| usable[k])
            .collect();
        chosen.sort_unstable();
        for j in chosen {
            mask[i][j] = true;
            let r: f64 = rng.random();
            if r < 0.8 {
                corrupted[i][j] = policy.mask_id;
            } else if r < 0.9 && !policy.replacement_ids.is_empty() {
                corrupted[i][j] =
                    policy.replacement_ids[rng.random_range(0..policy.replacement_ids.len())];
            }
        }
    }
    if !any {
        return Err(PretrainError::NothingToMask);
    }
    Ok((corrupted, mask))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskedBatch {
    /// Corrupted inputs.
    pub batch: Batch,
    /// Originals, selection mask and boundary labels.
    pub targets: MlmTargets,
}

/// Collate `examples` and apply dynamic masking.
pub fn mask_examples<R: Rng>(
    examples: &[&Example],
    schema: BoundarySchema,
    pad_id: u32,
    policy: &MaskingPolicy,
    rng: &mut R,
) -> Result<MaskedBatch> {
    let (mut batch, labels) = collate(examples, schema, pad_id);
    let (corrupted, mask) = dynamic_mask(&batch.ids, &batch.attention, policy, rng)?;
    let originals = std::mem::replace(&mut batch.ids, corrupted);
    Ok(MaskedBatch {
        batch,
        targets: MlmTargets {
            token_targets: originals,
            mask,
            boundary_labels: Some(labels),
        },
    })
}
