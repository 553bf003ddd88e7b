use ndarray::{s, Array1, Array2, Axis};

use super::forward::{gelu_grad, LnCache};
use super::{ModelConfig, Parameters, Scalar, SeqCache};

/// Backprop through `y = gain * xhat + bias`; returns dL/dx.
fn layer_norm_backward<T: Scalar>(
    dy: &Array2<T>,
    cache: &LnCache<T>,
    gain: &Array1<T>,
    dgain: &mut Array1<T>,
    dbias: &mut Array1<T>,
) -> Array2<T> {
    *dgain += &(dy * &cache.xhat).sum_axis(Axis(0));
    *dbias += &dy.sum_axis(Axis(0));
    let d = T::lit(dy.ncols() as f64);
    let mut dx = dy * gain;
    for ((mut row, xhat), &istd) in dx
        .axis_iter_mut(Axis(0))
        .zip(cache.xhat.axis_iter(Axis(0)))
        .zip(cache.inv_std.iter())
    {
        let mean_d = row.sum() / d;
        let mean_dx = row.iter().zip(xhat.iter()).map(|(&a, &b)| a * b).sum::<T>() / d;
        for (v, &xh) in row.iter_mut().zip(xhat.iter()) {
            *v = istd * (*v - mean_d - xh * mean_dx);
        }
    }
    dx
}

/// Accumulate `x^T dy` and the column sums of `dy` into a dense layer's
/// gradients and return `dy W^T`.
fn affine_backward<T: Scalar>(
    x: &Array2<T>,
    w: &Array2<T>,
    dy: &Array2<T>,
    dw: &mut Array2<T>,
    db: &mut Array1<T>,
) -> Array2<T> {
    *dw += &x.t().dot(dy);
    *db += &dy.sum_axis(Axis(0));
    dy.dot(&w.t())
}

/// Backpropagate `d_hidden` (gradient w.r.t. the final hidden states of one
/// sequence) through the encoder stack and embeddings into `grads`.
pub(crate) fn backward_sequence<T: Scalar>(
    params: &Parameters<T>,
    config: &ModelConfig,
    cache: &SeqCache<T>,
    ids: &[u32],
    wb: Option<&[u32]>,
    d_hidden: &Array2<T>,
    grads: &mut Parameters<T>,
) {
    let dh = config.d_head();
    let scale = T::one() / T::lit(dh as f64).sqrt();

    let mut dx = layer_norm_backward(
        d_hidden,
        &cache.final_ln,
        &params.final_ln_gain,
        &mut grads.final_ln_gain,
        &mut grads.final_ln_bias,
    );

    for (l, lc) in cache.layers.iter().enumerate().rev() {
        let lp = &params.layers[l];
        let g = &mut grads.layers[l];

        // feed-forward block: x2 = x1 + GELU(h2 W1 + b1) W2 + b2
        let d_act = affine_backward(&lc.act, &lp.w2, &dx, &mut g.w2, &mut g.b2);
        let d_u = d_act * &lc.u.mapv(gelu_grad);
        let d_h2 = affine_backward(&lc.h2, &lp.w1, &d_u, &mut g.w1, &mut g.b1);
        dx += &layer_norm_backward(
            &d_h2,
            &lc.ln2,
            &lp.ln2_gain,
            &mut g.ln2_gain,
            &mut g.ln2_bias,
        );

        // attention block: x1 = x + softmax(q k^T / sqrt(dh)) v Wo + bo
        let d_ctx = affine_backward(&lc.ctx, &lp.wo, &dx, &mut g.wo, &mut g.bo);
        let mut dq = Array2::zeros(lc.q.raw_dim());
        let mut dk = Array2::zeros(lc.k.raw_dim());
        let mut dv = Array2::zeros(lc.v.raw_dim());
        for (h, probs) in lc.probs.iter().enumerate() {
            let cols = s![.., h * dh..(h + 1) * dh];
            let d_ctx_h = d_ctx.slice(cols);
            dv.slice_mut(cols).assign(&probs.t().dot(&d_ctx_h));
            let d_probs = d_ctx_h.dot(&lc.v.slice(cols).t());
            // softmax backward, row-wise: dS = P * (dP - sum(dP * P))
            let mut d_scores = d_probs;
            for (mut row, prow) in d_scores
                .axis_iter_mut(Axis(0))
                .zip(probs.axis_iter(Axis(0)))
            {
                let dot = row.iter().zip(prow.iter()).map(|(&a, &b)| a * b).sum::<T>();
                for (v, &p) in row.iter_mut().zip(prow.iter()) {
                    *v = p * (*v - dot) * scale;
                }
            }
            dq.slice_mut(cols).assign(&d_scores.dot(&lc.k.slice(cols)));
            dk.slice_mut(cols)
                .assign(&d_scores.t().dot(&lc.q.slice(cols)));
        }
        let mut d_h1 = affine_backward(&lc.h1, &lp.wq, &dq, &mut g.wq, &mut g.bq);
        d_h1 += &affine_backward(&lc.h1, &lp.wk, &dk, &mut g.wk, &mut g.bk);
        d_h1 += &affine_backward(&lc.h1, &lp.wv, &dv, &mut g.wv, &mut g.bv);
        dx += &layer_norm_backward(
            &d_h1,
            &lc.ln1,
            &lp.ln1_gain,
            &mut g.ln1_gain,
            &mut g.ln1_bias,
        );
    }

    for (j, &id) in ids.iter().enumerate() {
        let row = dx.row(j);
        let mut t = grads.tok_emb.row_mut(id as usize);
        t += &row;
        let mut p = grads.pos_emb.row_mut(j);
        p += &row;
    }
    if let (Some(table), Some(wb)) = (grads.wb_emb.as_mut(), wb) {
        for (j, &w) in wb.iter().enumerate() {
            let mut r = table.row_mut(w as usize);
            r += &dx.row(j);
        }
    }
}
