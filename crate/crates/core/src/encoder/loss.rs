use ndarray::{Array1, Array2, Array3, ArrayView1, Axis};

use super::{
    backward_sequence, encode_sequence, Batch, BoundaryTargets, EncoderError, ModelConfig,
    Parameters, Result, Scalar,
};

/// Prediction targets for one masked batch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlmTargets {
    /// `B x S` original token ids.
    pub token_targets: Vec<Vec<u32>>,
    /// `B x S`, positions whose token must be predicted.
    pub mask: Vec<Vec<bool>>,
    /// `B x S` boundary labels (0 special, 1 initial, 2 internal), needed by
    /// the implicit head.
    pub boundary_labels: Option<Vec<Vec<u8>>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown<T> {
    /// Token loss plus boundary loss when the boundary head is on.
    pub total: T,
    pub token: T,
    pub boundary: Option<T>,
    pub token_correct: usize,
    pub token_count: usize,
    pub boundary_correct: usize,
    pub boundary_count: usize,
}

impl<T: Scalar> LossBreakdown<T> {
    pub fn token_accuracy(&self) -> f64 {
        self.token_correct as f64 / self.token_count.max(1) as f64
    }

    pub fn boundary_accuracy(&self) -> Option<f64> {
        self.boundary
            .map(|_| self.boundary_correct as f64 / self.boundary_count.max(1) as f64)
    }
}

/// Unweighted sum of the two MLM losses.
pub fn combined_loss<T: Scalar>(token_loss: T, boundary_loss: Option<T>) -> T {
    token_loss + boundary_loss.unwrap_or_else(T::zero)
}

fn argmax<T: Scalar>(row: ArrayView1<T>) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Cross-entropy of `target` under `softmax(row)`, plus the probabilities.
fn softmax_xent<T: Scalar>(row: ArrayView1<T>, target: usize) -> (T, Array1<T>) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut probs = row.mapv(|v| (v - max).exp());
    let sum = probs.sum();
    probs.mapv_inplace(|p| p / sum);
    let loss = sum.ln() + max - row[target];
    (loss, probs)
}

/// Mean cross-entropy over masked positions of `B x S x C` logits.
pub fn mlm_loss<T: Scalar>(
    logits: &Array3<T>,
    targets: &[Vec<u32>],
    mask: &[Vec<bool>],
) -> Result<T> {
    let mut total = T::zero();
    let mut count = 0usize;
    for (i, (trow, mrow)) in targets.iter().zip(mask).enumerate() {
        for (j, (&t, &m)) in trow.iter().zip(mrow).enumerate() {
            if !m {
                continue;
            }
            let row = logits.index_axis(Axis(0), i);
            let (loss, _) = softmax_xent(row.index_axis(Axis(0), j), t as usize);
            total += loss;
            count += 1;
        }
    }
    if count == 0 {
        return Err(EncoderError::NoMaskedPositions);
    }
    Ok(total / T::lit(count as f64))
}

struct Head<'a, T> {
    w: &'a Array2<T>,
    b: &'a Array1<T>,
}

/// Loss of one head over selected rows of `hidden`; accumulates gradients
/// into `dw`, `db` and `d_hidden` when given.
#[allow(clippy::too_many_arguments)]
fn head_loss<T: Scalar>(
    hidden: &Array2<T>,
    rows: &[(usize, usize)],
    head: Head<'_, T>,
    norm: T,
    grads: Option<(&mut Array2<T>, &mut Array1<T>, &mut Array2<T>)>,
) -> (T, usize) {
    if rows.is_empty() {
        return (T::zero(), 0);
    }
    let selected = Array2::from_shape_fn((rows.len(), hidden.ncols()), |(r, c)| {
        hidden[[rows[r].0, c]]
    });
    let logits = selected.dot(head.w) + head.b;
    let mut total = T::zero();
    let mut correct = 0;
    let mut dlogits = Array2::zeros(logits.raw_dim());
    for (r, &(_, target)) in rows.iter().enumerate() {
        let row = logits.row(r);
        if argmax(row) == target {
            correct += 1;
        }
        let (loss, mut probs) = softmax_xent(row, target);
        total += loss;
        probs[target] -= T::one();
        dlogits.row_mut(r).assign(&(probs / norm));
    }
    if let Some((dw, db, d_hidden)) = grads {
        *dw += &selected.t().dot(&dlogits);
        *db += &dlogits.sum_axis(Axis(0));
        let d_sel = dlogits.dot(&head.w.t());
        for (r, &(pos, _)) in rows.iter().enumerate() {
            let mut h = d_hidden.row_mut(pos);
            h += &d_sel.row(r);
        }
    }
    (total, correct)
}

fn check_targets(batch: &Batch, targets: &MlmTargets, config: &ModelConfig) -> Result<()> {
    let shape_ok = |rows: &[Vec<bool>]| {
        rows.len() == batch.batch_size() && rows.iter().all(|r| r.len() == batch.seq_len())
    };
    if !shape_ok(&targets.mask)
        || targets.token_targets.len() != batch.batch_size()
        || targets
            .token_targets
            .iter()
            .any(|r| r.len() != batch.seq_len())
    {
        return Err(EncoderError::ShapeMismatch(
            "targets do not match batch".into(),
        ));
    }
    if config.implicit_head {
        match &targets.boundary_labels {
            Some(l)
                if l.len() == batch.batch_size()
                    && l.iter().all(|r| r.len() == batch.seq_len()) => {}
            _ => {
                return Err(EncoderError::ShapeMismatch(
                    "implicit head needs boundary labels for every position".into(),
                ))
            }
        }
    }
    Ok(())
}

fn run<T: Scalar>(
    params: &Parameters<T>,
    config: &ModelConfig,
    batch: &Batch,
    targets: &MlmTargets,
    mut grads: Option<&mut Parameters<T>>,
) -> Result<LossBreakdown<T>> {
    batch.validate(config)?;
    check_targets(batch, targets, config)?;

    let token_rows: Vec<Vec<(usize, usize)>> = (0..batch.batch_size())
        .map(|i| {
            (0..batch.seq_len())
                .filter(|&j| targets.mask[i][j] && batch.attention[i][j])
                .map(|j| (j, targets.token_targets[i][j] as usize))
                .collect()
        })
        .collect();
    let token_count: usize = token_rows.iter().map(Vec::len).sum();
    if token_count == 0 {
        return Err(EncoderError::NoMaskedPositions);
    }
    for &(_, t) in token_rows.iter().flatten() {
        if t >= config.vocab_size {
            return Err(EncoderError::IndexOutOfRange {
                what: "target",
                index: t,
                bound: config.vocab_size,
            });
        }
    }
    let boundary_rows: Vec<Vec<(usize, usize)>> =
        match (&targets.boundary_labels, config.implicit_head) {
            (Some(labels), true) => (0..batch.batch_size())
                .map(|i| {
                    (0..batch.seq_len())
                        .filter(|&j| {
                            batch.attention[i][j]
                                && match config.boundary_targets {
                                    BoundaryTargets::MaskedOnly => targets.mask[i][j],
                                    BoundaryTargets::AllPositions => true,
                                }
                        })
                        .map(|j| (j, labels[i][j] as usize))
                        .collect()
                })
                .collect(),
            _ => vec![Vec::new(); batch.batch_size()],
        };
    let boundary_count: usize = boundary_rows.iter().map(Vec::len).sum();

    let token_norm = T::lit(token_count as f64);
    let boundary_norm = T::lit(boundary_count.max(1) as f64);
    let mut token_sum = T::zero();
    let mut boundary_sum = T::zero();
    let mut token_correct = 0;
    let mut boundary_correct = 0;

    for i in 0..batch.batch_size() {
        if token_rows[i].is_empty() && boundary_rows[i].is_empty() {
            continue;
        }
        let wb = batch.wb.as_ref().map(|w| w[i].as_slice());
        let (hidden, cache) =
            encode_sequence(params, config, &batch.ids[i], wb, &batch.attention[i])?;
        let mut d_hidden = grads.as_ref().map(|_| Array2::zeros(hidden.raw_dim()));

        let tok_grads = grads
            .as_deref_mut()
            .zip(d_hidden.as_mut())
            .map(|(g, dh)| (&mut g.token_head_w, &mut g.token_head_b, dh));
        let (loss, correct) = head_loss(
            &hidden,
            &token_rows[i],
            Head {
                w: &params.token_head_w,
                b: &params.token_head_b,
            },
            token_norm,
            tok_grads,
        );
        token_sum += loss;
        token_correct += correct;

        if let (Some(w), Some(b)) = (&params.boundary_head_w, &params.boundary_head_b) {
            let bnd_grads = grads
                .as_deref_mut()
                .zip(d_hidden.as_mut())
                .and_then(|(g, dh)| {
                    match (g.boundary_head_w.as_mut(), g.boundary_head_b.as_mut()) {
                        (Some(gw), Some(gb)) => Some((gw, gb, dh)),
                        _ => None,
                    }
                });
            let (loss, correct) = head_loss(
                &hidden,
                &boundary_rows[i],
                Head { w, b },
                boundary_norm,
                bnd_grads,
            );
            boundary_sum += loss;
            boundary_correct += correct;
        }

        if let (Some(g), Some(dh)) = (grads.as_deref_mut(), d_hidden.as_ref()) {
            backward_sequence(params, config, &cache, &batch.ids[i], wb, dh, g);
        }
    }

    let token = token_sum / token_norm;
    let boundary = (config.implicit_head && params.boundary_head_w.is_some())
        .then(|| boundary_sum / boundary_norm);
    Ok(LossBreakdown {
        total: combined_loss(token, boundary),
        token,
        boundary,
        token_correct,
        token_count,
        boundary_correct,
        boundary_count,
    })
}

/// Combined MLM loss and its exact gradient w.r.t. every parameter.
pub fn loss_and_grad<T: Scalar>(
    params: &Parameters<T>,
    config: &ModelConfig,
    batch: &Batch,
    targets: &MlmTargets,
) -> Result<(LossBreakdown<T>, Parameters<T>)> {
    let mut grads = params.zeros_like();
    let loss = run(params, config, batch, targets, Some(&mut grads))?;
    Ok((loss, grads))
}

/// Loss and top-1 accuracies without gradients.
pub fn evaluate_mlm<T: Scalar>(
    params: &Parameters<T>,
    config: &ModelConfig,
    batch: &Batch,
    targets: &MlmTargets,
) -> Result<LossBreakdown<T>> {
    run(params, config, batch, targets, None)
}
