use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{EncoderError, ModelConfig, Result, Scalar, BOUNDARY_CLASSES};

/// Standard deviation of the normal initialiser for every weight matrix.
pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<T> {
    pub ln1_gain: Array1<T>,
    pub ln1_bias: Array1<T>,
    pub wq: Array2<T>,
    pub bq: Array1<T>,
    pub wk: Array2<T>,
    pub bk: Array1<T>,
    pub wv: Array2<T>,
    pub bv: Array1<T>,
    pub wo: Array2<T>,
    pub bo: Array1<T>,
    pub ln2_gain: Array1<T>,
    pub ln2_bias: Array1<T>,
    /// `d_model x d_ff`
    pub w1: Array2<T>,
    pub b1: Array1<T>,
    /// `d_ff x d_model`
    pub w2: Array2<T>,
    pub b2: Array1<T>,
}

/// Dense parameter tensors of the encoder. Weight matrices are stored as
/// `in x out` so a row vector is multiplied on the left.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters<T> {
    /// `|V| x d`
    pub tok_emb: Array2<T>,
    /// `max_seq_len x d`
    pub pos_emb: Array2<T>,
    /// `rows x d`, present for the binary / word / subword schemas.
    pub wb_emb: Option<Array2<T>>,
    pub layers: Vec<LayerParams<T>>,
    pub final_ln_gain: Array1<T>,
    pub final_ln_bias: Array1<T>,
    /// `d x |V|`
    pub token_head_w: Array2<T>,
    pub token_head_b: Array1<T>,
    /// `d x 3`, present with the implicit boundary head.
    pub boundary_head_w: Option<Array2<T>>,
    pub boundary_head_b: Option<Array1<T>>,
}

/// Borrowed view of one named tensor.
pub struct TensorView<'a, T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [T],
}

pub struct TensorViewMut<'a, T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a mut [T],
}

impl<T: Scalar> LayerParams<T> {
    fn zeros(d: usize, ff: usize) -> Self {
        let ones = || Array1::from_elem(d, T::one());
        Self {
            ln1_gain: ones(),
            ln1_bias: Array1::zeros(d),
            wq: Array2::zeros((d, d)),
            bq: Array1::zeros(d),
            wk: Array2::zeros((d, d)),
            bk: Array1::zeros(d),
            wv: Array2::zeros((d, d)),
            bv: Array1::zeros(d),
            wo: Array2::zeros((d, d)),
            bo: Array1::zeros(d),
            ln2_gain: ones(),
            ln2_bias: Array1::zeros(d),
            w1: Array2::zeros((d, ff)),
            b1: Array1::zeros(ff),
            w2: Array2::zeros((ff, d)),
            b2: Array1::zeros(d),
        }
    }
}

fn view2<T>(name: String, a: &Array2<T>) -> TensorView<'_, T> {
    TensorView {
        name,
        shape: a.shape().to_vec(),
        data: a.as_slice().expect("standard layout"),
    }
}

fn view1<T>(name: String, a: &Array1<T>) -> TensorView<'_, T> {
    TensorView {
        name,
        shape: a.shape().to_vec(),
        data: a.as_slice().expect("standard layout"),
    }
}

fn view2_mut<T>(name: String, a: &mut Array2<T>) -> TensorViewMut<'_, T> {
    TensorViewMut {
        name,
        shape: a.shape().to_vec(),
        data: a.as_slice_mut().expect("standard layout"),
    }
}

fn view1_mut<T>(name: String, a: &mut Array1<T>) -> TensorViewMut<'_, T> {
    TensorViewMut {
        name,
        shape: a.shape().to_vec(),
        data: a.as_slice_mut().expect("standard layout"),
    }
}

impl<T: Scalar> Parameters<T> {
    /// All-zero weights (layer-norm gains 1) with the shapes `config` implies.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let d = config.d_model;
        Ok(Self {
            tok_emb: Array2::zeros((config.vocab_size, d)),
            pos_emb: Array2::zeros((config.max_seq_len, d)),
            wb_emb: config.wb_rows().map(|rows| Array2::zeros((rows, d))),
            layers: (0..config.n_layers)
                .map(|_| LayerParams::zeros(d, config.d_ff))
                .collect(),
            final_ln_gain: Array1::from_elem(d, T::one()),
            final_ln_bias: Array1::zeros(d),
            token_head_w: Array2::zeros((d, config.vocab_size)),
            token_head_b: Array1::zeros(config.vocab_size),
            boundary_head_w: config
                .implicit_head
                .then(|| Array2::zeros((d, BOUNDARY_CLASSES))),
            boundary_head_b: config
                .implicit_head
                .then(|| Array1::zeros(BOUNDARY_CLASSES)),
        })
    }

    /// Random initialisation: every matrix ~ N(0, 0.02^2), biases 0, gains 1.
    /// Deterministic in `seed`.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        params.fill_matrices_normal(&mut rng, INIT_STD);
        Ok(params)
    }

    pub(crate) fn fill_matrices_normal<R: Rng>(&mut self, rng: &mut R, std: f64) {
        let normal = Normal::new(0.0, std).expect("valid std");
        for t in self.tensors_mut() {
            if t.shape.len() == 2 {
                for x in t.data.iter_mut() {
                    *x = T::lit(normal.sample(rng));
                }
            }
        }
    }

    /// Add a freshly initialised boundary embedding table with `rows` rows.
    pub fn attach_wb_table<R: Rng>(&mut self, rows: usize, rng: &mut R) {
        let normal = Normal::new(0.0, INIT_STD).expect("valid std");
        let d = self.d_model();
        self.wb_emb = Some(Array2::from_shape_fn((rows, d), |_| {
            T::lit(normal.sample(rng))
        }));
    }

    pub fn d_model(&self) -> usize {
        self.tok_emb.ncols()
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for t in out.tensors_mut() {
            t.data.fill(T::zero());
        }
        out
    }

    pub fn tensors(&self) -> Vec<TensorView<'_, T>> {
        let mut out = vec![
            view2("tok_emb".into(), &self.tok_emb),
            view2("pos_emb".into(), &self.pos_emb),
        ];
        if let Some(wb) = &self.wb_emb {
            out.push(view2("wb_emb".into(), wb));
        }
        for (i, l) in self.layers.iter().enumerate() {
            let n = |s: &str| format!("layers.{i}.{s}");
            out.extend([
                view1(n("ln1_gain"), &l.ln1_gain),
                view1(n("ln1_bias"), &l.ln1_bias),
                view2(n("wq"), &l.wq),
                view1(n("bq"), &l.bq),
                view2(n("wk"), &l.wk),
                view1(n("bk"), &l.bk),
                view2(n("wv"), &l.wv),
                view1(n("bv"), &l.bv),
                view2(n("wo"), &l.wo),
                view1(n("bo"), &l.bo),
                view1(n("ln2_gain"), &l.ln2_gain),
                view1(n("ln2_bias"), &l.ln2_bias),
                view2(n("w1"), &l.w1),
                view1(n("b1"), &l.b1),
                view2(n("w2"), &l.w2),
                view1(n("b2"), &l.b2),
            ]);
        }
        out.push(view1("final_ln_gain".into(), &self.final_ln_gain));
        out.push(view1("final_ln_bias".into(), &self.final_ln_bias));
        out.push(view2("token_head_w".into(), &self.token_head_w));
        out.push(view1("token_head_b".into(), &self.token_head_b));
        if let (Some(w), Some(b)) = (&self.boundary_head_w, &self.boundary_head_b) {
            out.push(view2("boundary_head_w".into(), w));
            out.push(view1("boundary_head_b".into(), b));
        }
        out
    }

    /// Same order and names as [`Parameters::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<TensorViewMut<'_, T>> {
        let mut out = vec![
            view2_mut("tok_emb".into(), &mut self.tok_emb),
            view2_mut("pos_emb".into(), &mut self.pos_emb),
        ];
        if let Some(wb) = &mut self.wb_emb {
            out.push(view2_mut("wb_emb".into(), wb));
        }
        for (i, l) in self.layers.iter_mut().enumerate() {
            let n = |s: &str| format!("layers.{i}.{s}");
            out.extend([
                view1_mut(n("ln1_gain"), &mut l.ln1_gain),
                view1_mut(n("ln1_bias"), &mut l.ln1_bias),
                view2_mut(n("wq"), &mut l.wq),
                view1_mut(n("bq"), &mut l.bq),
                view2_mut(n("wk"), &mut l.wk),
                view1_mut(n("bk"), &mut l.bk),
                view2_mut(n("wv"), &mut l.wv),
                view1_mut(n("bv"), &mut l.bv),
                view2_mut(n("wo"), &mut l.wo),
                view1_mut(n("bo"), &mut l.bo),
                view1_mut(n("ln2_gain"), &mut l.ln2_gain),
                view1_mut(n("ln2_bias"), &mut l.ln2_bias),
                view2_mut(n("w1"), &mut l.w1),
                view1_mut(n("b1"), &mut l.b1),
                view2_mut(n("w2"), &mut l.w2),
                view1_mut(n("b2"), &mut l.b2),
            ]);
        }
        out.push(view1_mut("final_ln_gain".into(), &mut self.final_ln_gain));
        out.push(view1_mut("final_ln_bias".into(), &mut self.final_ln_bias));
        out.push(view2_mut("token_head_w".into(), &mut self.token_head_w));
        out.push(view1_mut("token_head_b".into(), &mut self.token_head_b));
        if let (Some(w), Some(b)) = (&mut self.boundary_head_w, &mut self.boundary_head_b) {
            out.push(view2_mut("boundary_head_w".into(), w));
            out.push(view1_mut("boundary_head_b".into(), b));
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.data.iter().all(|x| x.is_finite()))
    }

    /// Element-wise conversion to another precision.
    pub fn cast<U: Scalar>(&self) -> Parameters<U> {
        let c2 = |a: &Array2<T>| a.mapv(|x| U::lit(x.as_f64()));
        let c1 = |a: &Array1<T>| a.mapv(|x| U::lit(x.as_f64()));
        Parameters {
            tok_emb: c2(&self.tok_emb),
            pos_emb: c2(&self.pos_emb),
            wb_emb: self.wb_emb.as_ref().map(c2),
            layers: self
                .layers
                .iter()
                .map(|l| LayerParams {
                    ln1_gain: c1(&l.ln1_gain),
                    ln1_bias: c1(&l.ln1_bias),
                    wq: c2(&l.wq),
                    bq: c1(&l.bq),
                    wk: c2(&l.wk),
                    bk: c1(&l.bk),
                    wv: c2(&l.wv),
                    bv: c1(&l.bv),
                    wo: c2(&l.wo),
                    bo: c1(&l.bo),
                    ln2_gain: c1(&l.ln2_gain),
                    ln2_bias: c1(&l.ln2_bias),
                    w1: c2(&l.w1),
                    b1: c1(&l.b1),
                    w2: c2(&l.w2),
                    b2: c1(&l.b2),
                })
                .collect(),
            final_ln_gain: c1(&self.final_ln_gain),
            final_ln_bias: c1(&self.final_ln_bias),
            token_head_w: c2(&self.token_head_w),
            token_head_b: c1(&self.token_head_b),
            boundary_head_w: self.boundary_head_w.as_ref().map(c2),
            boundary_head_b: self.boundary_head_b.as_ref().map(c1),
        }
    }

    /// Check that every tensor has the shape `config` implies.
    pub fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let reference = Parameters::<T>::zeros(config)?;
        let ours: Vec<(String, Vec<usize>)> = self
            .tensors()
            .into_iter()
            .map(|t| (t.name, t.shape))
            .collect();
        let theirs: Vec<(String, Vec<usize>)> = reference
            .tensors()
            .into_iter()
            .map(|t| (t.name, t.shape))
            .collect();
        if ours != theirs {
            return Err(EncoderError::ShapeMismatch(
                "parameter tensors do not match the model config".into(),
            ));
        }
        Ok(())
    }
}
