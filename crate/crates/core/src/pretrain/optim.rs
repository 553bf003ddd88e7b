use crate::encoder::{Parameters, TensorView, TensorViewMut};

/// AdamW with decoupled weight decay. One-dimensional tensors (biases,
/// layer-norm gains and biases) are not decayed.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW {
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    pub weight_decay: f32,
    m: Vec<Vec<f32>>,
    v: Vec<Vec<f32>>,
    decay: Vec<bool>,
    t: u64,
}

impl AdamW {
    /// Zero moments for tensors of the given shapes.
    pub fn new(shapes: &[Vec<usize>], weight_decay: f64) -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: weight_decay as f32,
            m: shapes
                .iter()
                .map(|s| vec![0.0; s.iter().product()])
                .collect(),
            v: shapes
                .iter()
                .map(|s| vec![0.0; s.iter().product()])
                .collect(),
            decay: shapes.iter().map(|s| s.len() > 1).collect(),
            t: 0,
        }
    }

    pub fn for_params(params: &Parameters<f32>, weight_decay: f64) -> Self {
        let shapes: Vec<Vec<usize>> = params.tensors().into_iter().map(|t| t.shape).collect();
        Self::new(&shapes, weight_decay)
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(
        &mut self,
        params: Vec<TensorViewMut<'_, f32>>,
        grads: Vec<TensorView<'_, f32>>,
        lr: f64,
    ) {
        assert_eq!(
            params.len(),
            self.m.len(),
            "optimizer built for a different tensor list"
        );
        assert_eq!(
            grads.len(),
            self.m.len(),
            "gradient list does not match parameters"
        );
        self.t += 1;
        let lr = lr as f32;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            let wd = if self.decay[k] {
                self.weight_decay
            } else {
                0.0
            };
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p.data[i] -= lr * (m_hat / (v_hat.sqrt() + self.eps) + wd * p.data[i]);
            }
        }
    }

    /// Update a full parameter set.
    pub fn step_params(&mut self, params: &mut Parameters<f32>, grads: &Parameters<f32>, lr: f64) {
        self.step(params.tensors_mut(), grads.tensors(), lr);
    }

    /// Moments laid out like `template`, for checkpointing.
    pub fn moments(&self, template: &Parameters<f32>) -> (Parameters<f32>, Parameters<f32>) {
        let mut m = template.zeros_like();
        let mut v = template.zeros_like();
        for (k, (tm, tv)) in m.tensors_mut().into_iter().zip(v.tensors_mut()).enumerate() {
            tm.data.copy_from_slice(&self.m[k]);
            tv.data.copy_from_slice(&self.v[k]);
        }
        (m, v)
    }

    /// Restore moments and the update count from a checkpoint.
    pub fn restore(&mut self, m: &Parameters<f32>, v: &Parameters<f32>, steps: u64) {
        for (k, (tm, tv)) in m.tensors().into_iter().zip(v.tensors()).enumerate() {
            self.m[k].copy_from_slice(tm.data);
            self.v[k].copy_from_slice(tv.data);
        }
        self.t = steps;
    }
}

/// Scale gradients so their global L2 norm is at most `max_norm`; returns
/// the norm before clipping.
pub fn clip_global_norm(grads: &mut Parameters<f32>, max_norm: f64) -> f64 {
    let norm = grads
        .tensors()
        .iter()
        .flat_map(|t| t.data.iter())
        .map(|&g| (g as f64) * (g as f64))
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let scale = (max_norm / norm) as f32;
        for t in grads.tensors_mut() {
            t.data.iter_mut().for_each(|g| *g *= scale);
        }
    }
    norm
}
