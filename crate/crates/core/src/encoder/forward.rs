use ndarray::{s, Array1, Array2, Array3, ArrayView2, Axis};

use super::{EncoderError, ModelConfig, Parameters, Result, Scalar, LN_EPS};
use crate::boundary::BoundarySchema;

/// A padded batch of token sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    /// `B x S` token ids.
    pub ids: Vec<Vec<u32>>,
    /// `B x S`, `false` marks padding.
    pub attention: Vec<Vec<bool>>,
    /// `B x S` boundary-embedding indices, required by the binary / word /
    /// subword schemas.
    pub wb: Option<Vec<Vec<u32>>>,
}

impl Batch {
    pub fn batch_size(&self) -> usize {
        self.ids.len()
    }

    pub fn seq_len(&self) -> usize {
        self.ids.first().map_or(0, Vec::len)
    }

    pub fn validate(&self, config: &ModelConfig) -> Result<()> {
        let s = self.seq_len();
        if s > config.max_seq_len {
            return Err(EncoderError::ShapeMismatch(format!(
                "sequence length {s} exceeds max_seq_len {}",
                config.max_seq_len
            )));
        }
        let ragged = |rows: usize, mut lens: std::slice::Iter<'_, Vec<_>>| {
            rows != self.ids.len() || lens.any(|l| l.len() != s)
        };
        if ragged(self.ids.len(), self.ids.iter())
            || self.attention.len() != self.ids.len()
            || self.attention.iter().any(|r| r.len() != s)
        {
            return Err(EncoderError::ShapeMismatch("ragged batch".into()));
        }
        match (config.wb_rows(), &self.wb) {
            (Some(_), None) => {
                return Err(EncoderError::ShapeMismatch(format!(
                    "schema {} needs boundary indices",
                    config.wb_schema
                )))
            }
            (Some(_), Some(wb)) if ragged(wb.len(), wb.iter()) => {
                return Err(EncoderError::ShapeMismatch(
                    "ragged boundary indices".into(),
                ))
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput<T> {
    /// `B x S x |V|`
    pub token_logits: Array3<T>,
    /// `B x S x 3`, present with the implicit boundary head.
    pub boundary_logits: Option<Array3<T>>,
    /// `B x S x d`, after the final layer norm.
    pub hidden: Array3<T>,
}

#[derive(Debug, Clone)]
pub(crate) struct LnCache<T> {
    pub xhat: Array2<T>,
    pub inv_std: Array1<T>,
}

#[derive(Debug, Clone)]
pub(crate) struct LayerCache<T> {
    pub ln1: LnCache<T>,
    pub h1: Array2<T>,
    pub q: Array2<T>,
    pub k: Array2<T>,
    pub v: Array2<T>,
    /// Attention probabilities per head, `S x S`.
    pub probs: Vec<Array2<T>>,
    /// Concatenated head outputs before the output projection.
    pub ctx: Array2<T>,
    pub ln2: LnCache<T>,
    pub h2: Array2<T>,
    /// Feed-forward pre-activation.
    pub u: Array2<T>,
    pub act: Array2<T>,
}

/// Activations of one sequence needed for backpropagation.
#[derive(Debug, Clone)]
pub(crate) struct SeqCache<T> {
    pub layers: Vec<LayerCache<T>>,
    pub final_ln: LnCache<T>,
}

pub(crate) fn layer_norm<T: Scalar>(
    x: &Array2<T>,
    gain: &Array1<T>,
    bias: &Array1<T>,
) -> (Array2<T>, LnCache<T>) {
    let d = T::lit(x.ncols() as f64);
    let eps = T::lit(LN_EPS);
    let mut xhat = x.clone();
    let mut inv_std = Array1::zeros(x.nrows());
    for (mut row, istd) in xhat.axis_iter_mut(Axis(0)).zip(inv_std.iter_mut()) {
        let mean = row.sum() / d;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|&v| v * v).sum::<T>() / d;
        *istd = T::one() / (var + eps).sqrt();
        let k = *istd;
        row.mapv_inplace(|v| v * k);
    }
    let y = &xhat * gain + bias;
    (y, LnCache { xhat, inv_std })
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

pub(crate) fn gelu<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    let inner = T::lit(GELU_C) * (x + T::lit(GELU_A) * x * x * x);
    half * x * (T::one() + inner.tanh())
}

pub(crate) fn gelu_grad<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    let c = T::lit(GELU_C);
    let a = T::lit(GELU_A);
    let t = (c * (x + a * x * x * x)).tanh();
    half * (T::one() + t) + half * x * (T::one() - t * t) * c * (T::one() + T::lit(3.0) * a * x * x)
}

/// Softmax over the valid keys of each row; masked keys get probability 0.
fn masked_softmax_rows<T: Scalar>(scores: &mut Array2<T>, valid: &[bool]) {
    for mut row in scores.axis_iter_mut(Axis(0)) {
        let max = row
            .iter()
            .zip(valid)
            .filter(|(_, &ok)| ok)
            .map(|(&v, _)| v)
            .fold(T::neg_infinity(), T::max);
        if max == T::neg_infinity() {
            row.fill(T::zero());
            continue;
        }
        let mut sum = T::zero();
        for (v, &ok) in row.iter_mut().zip(valid) {
            *v = if ok { (*v - max).exp() } else { T::zero() };
            sum += *v;
        }
        row.mapv_inplace(|v| v / sum);
    }
}

/// Token + position (+ boundary) embeddings of one sequence.
pub fn embed<T: Scalar>(
    params: &Parameters<T>,
    config: &ModelConfig,
    ids: &[u32],
    wb: Option<&[u32]>,
) -> Result<Array2<T>> {
    let s = ids.len();
    if s > params.pos_emb.nrows() {
        return Err(EncoderError::IndexOutOfRange {
            what: "position",
            index: s - 1,
            bound: params.pos_emb.nrows(),
        });
    }
    let mut x = params.pos_emb.slice(s![..s, ..]).to_owned();
    for (j, &id) in ids.iter().enumerate() {
        let id = id as usize;
        if id >= params.tok_emb.nrows() {
            return Err(EncoderError::IndexOutOfRange {
                what: "token",
                index: id,
                bound: params.tok_emb.nrows(),
            });
        }
        let mut row = x.row_mut(j);
        row += &params.tok_emb.row(id);
    }
    let uses_table = !matches!(
        config.wb_schema,
        BoundarySchema::None | BoundarySchema::WbTokens
    );
    if let (true, Some(table)) = (uses_table, &params.wb_emb) {
        let wb = wb.ok_or_else(|| {
            EncoderError::ShapeMismatch(format!(
                "schema {} needs boundary indices",
                config.wb_schema
            ))
        })?;
        if wb.len() != s {
            return Err(EncoderError::ShapeMismatch(
                "boundary indices length".into(),
            ));
        }
        for (j, &w) in wb.iter().enumerate() {
            let w = w as usize;
            if w >= table.nrows() {
                return Err(EncoderError::IndexOutOfRange {
                    what: "boundary",
                    index: w,
                    bound: table.nrows(),
                });
            }
            let mut row = x.row_mut(j);
            row += &table.row(w);
        }
    }
    Ok(x)
}

/// Input embeddings for a whole batch, `B x S x d`.
pub fn embed_batch<T: Scalar>(
    batch: &Batch,
    params: &Parameters<T>,
    config: &ModelConfig,
) -> Result<Array3<T>> {
    batch.validate(config)?;
    let (b, s, d) = (batch.batch_size(), batch.seq_len(), params.d_model());
    let mut out = Array3::zeros((b, s, d));
    for i in 0..b {
        let wb = batch.wb.as_ref().map(|w| w[i].as_slice());
        let x = embed(params, config, &batch.ids[i], wb)?;
        out.index_axis_mut(Axis(0), i).assign(&x);
    }
    Ok(out)
}

fn affine<T: Scalar>(x: &ArrayView2<T>, w: &Array2<T>, b: &Array1<T>) -> Array2<T> {
    x.dot(w) + b
}

/// Run the encoder stack on one sequence, keeping what backprop needs.
pub(crate) fn encode_sequence<T: Scalar>(
    params: &Parameters<T>,
    config: &ModelConfig,
    ids: &[u32],
    wb: Option<&[u32]>,
    valid: &[bool],
) -> Result<(Array2<T>, SeqCache<T>)> {
    let mut x = embed(params, config, ids, wb)?;
    let s = ids.len();
    let dh = config.d_head();
    let scale = T::one() / T::lit(dh as f64).sqrt();
    let mut layers = Vec::with_capacity(params.layers.len());
    for lp in &params.layers {
        let (h1, ln1) = layer_norm(&x, &lp.ln1_gain, &lp.ln1_bias);
        let q = affine(&h1.view(), &lp.wq, &lp.bq);
        let k = affine(&h1.view(), &lp.wk, &lp.bk);
        let v = affine(&h1.view(), &lp.wv, &lp.bv);
        let mut ctx = Array2::zeros((s, config.d_model));
        let mut probs = Vec::with_capacity(config.n_heads);
        for h in 0..config.n_heads {
            let cols = s![.., h * dh..(h + 1) * dh];
            let mut scores = q.slice(cols).dot(&k.slice(cols).t()) * scale;
            masked_softmax_rows(&mut scores, valid);
            ctx.slice_mut(cols).assign(&scores.dot(&v.slice(cols)));
            probs.push(scores);
        }
        x = x + affine(&ctx.view(), &lp.wo, &lp.bo);
        let (h2, ln2) = layer_norm(&x, &lp.ln2_gain, &lp.ln2_bias);
        let u = affine(&h2.view(), &lp.w1, &lp.b1);
        let act = u.mapv(gelu);
        x = x + affine(&act.view(), &lp.w2, &lp.b2);
        layers.push(LayerCache {
            ln1,
            h1,
            q,
            k,
            v,
            probs,
            ctx,
            ln2,
            h2,
            u,
            act,
        });
    }
    let (hidden, final_ln) = layer_norm(&x, &params.final_ln_gain, &params.final_ln_bias);
    Ok((hidden, SeqCache { layers, final_ln }))
}

/// Full forward pass with both heads over every position.
pub fn forward<T: Scalar>(
    params: &Parameters<T>,
    config: &ModelConfig,
    batch: &Batch,
) -> Result<ForwardOutput<T>> {
    batch.validate(config)?;
    let (b, s, d) = (batch.batch_size(), batch.seq_len(), params.d_model());
    let v = params.token_head_w.ncols();
    let mut hidden = Array3::zeros((b, s, d));
    let mut token_logits = Array3::zeros((b, s, v));
    let mut boundary_logits = params
        .boundary_head_w
        .as_ref()
        .map(|w| Array3::zeros((b, s, w.ncols())));
    for i in 0..b {
        let wb = batch.wb.as_ref().map(|w| w[i].as_slice());
        let (h, _) = encode_sequence(params, config, &batch.ids[i], wb, &batch.attention[i])?;
        token_logits.index_axis_mut(Axis(0), i).assign(&affine(
            &h.view(),
            &params.token_head_w,
            &params.token_head_b,
        ));
        if let (Some(out), Some(w), Some(bias)) = (
            boundary_logits.as_mut(),
            &params.boundary_head_w,
            &params.boundary_head_b,
        ) {
            out.index_axis_mut(Axis(0), i)
                .assign(&affine(&h.view(), w, bias));
        }
        hidden.index_axis_mut(Axis(0), i).assign(&h);
    }
    Ok(ForwardOutput {
        token_logits,
        boundary_logits,
        hidden,
    })
}
