use crate::boundary::{annotate, insert_wb_tokens, BoundarySchema, WbPlacement};
use crate::encoder::Batch;
use crate::tokenizer::{EncodeOptions, Encoding, Vocabulary, CLS, SEP, WB};

use super::Result;

/// One wrapped, truncated sequence ready for batching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub ids: Vec<u32>,
    /// Per-token word membership, `None` for specials.
    pub word_ids: Vec<Option<usize>>,
    /// Boundary-table indices for the schema (zeros when it has no table).
    pub wb: Vec<u32>,
    /// 0 special, 1 word-initial, 2 word-internal.
    pub labels: Vec<u8>,
}

impl Example {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Encode `text`, insert `[WB]` tokens for the wb-tokens schema, truncate to
/// `seq_len` including `[CLS]` and `[SEP]`. `None` for text without words.
pub fn prepare_example(
    vocab: &Vocabulary,
    text: &str,
    schema: BoundarySchema,
    placement: WbPlacement,
    seq_len: usize,
) -> Result<Option<Example>> {
    let enc = vocab.encode(text, EncodeOptions { wrap: false });
    prepare_encoding(vocab, enc, schema, placement, seq_len)
}

/// Same as [`prepare_example`] for an already segmented, unwrapped encoding.
pub fn prepare_encoding(
    vocab: &Vocabulary,
    mut enc: Encoding,
    schema: BoundarySchema,
    placement: WbPlacement,
    seq_len: usize,
) -> Result<Option<Example>> {
    if enc.is_empty() {
        return Ok(None);
    }
    if schema == BoundarySchema::WbTokens {
        enc = insert_wb_tokens(&enc, vocab, placement)?;
    }
    let keep = seq_len.saturating_sub(2);
    let mut body = Encoding {
        ids: enc.ids[..enc.len().min(keep)].to_vec(),
        tokens: enc.tokens[..enc.len().min(keep)].to_vec(),
        word_ids: enc.word_ids[..enc.len().min(keep)].to_vec(),
    };
    while body.tokens.last().is_some_and(|t| t == WB) {
        body.ids.pop();
        body.tokens.pop();
        body.word_ids.pop();
    }
    if body.is_empty() {
        return Ok(None);
    }
    let specials = vocab.specials();
    let mut wrapped = Encoding::default();
    wrapped.push(specials.cls, CLS, None);
    for i in 0..body.len() {
        wrapped.push(body.ids[i], body.tokens[i].clone(), body.word_ids[i]);
    }
    wrapped.push(specials.sep, SEP, None);
    let ann = annotate(&wrapped)?;
    let wb = schema
        .indices(&ann)
        .unwrap_or_else(|| vec![0; wrapped.len()]);
    Ok(Some(Example {
        ids: wrapped.ids,
        word_ids: wrapped.word_ids,
        wb,
        labels: ann.binary,
    }))
}

/// Right-pad examples to the longest one. Returns the batch and the padded
/// boundary labels.
pub fn collate(
    examples: &[&Example],
    schema: BoundarySchema,
    pad_id: u32,
) -> (Batch, Vec<Vec<u8>>) {
    let s = examples.iter().map(|e| e.len()).max().unwrap_or(0);
    let mut batch = Batch {
        ids: Vec::with_capacity(examples.len()),
        attention: Vec::with_capacity(examples.len()),
        wb: schema
            .table_rows()
            .map(|_| Vec::with_capacity(examples.len())),
    };
    let mut labels = Vec::with_capacity(examples.len());
    for e in examples {
        let pad = s - e.len();
        let mut ids = e.ids.clone();
        ids.resize(s, pad_id);
        let mut att = vec![true; e.len()];
        att.resize(s, false);
        let mut lab = e.labels.clone();
        lab.resize(s, 0);
        if let Some(wb) = batch.wb.as_mut() {
            let mut w = e.wb.clone();
            w.extend(std::iter::repeat_n(0, pad));
            wb.push(w);
        }
        batch.ids.push(ids);
        batch.attention.push(att);
        labels.push(lab);
    }
    (batch, labels)
}
