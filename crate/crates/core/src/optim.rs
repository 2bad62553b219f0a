//! Adam optimizer with global-norm gradient clipping and serializable
//! moments, so training can resume from a checkpoint bit-for-bit.

use std::collections::HashMap;

use candle_core::backprop::GradStore;
use candle_core::{DType, Tensor, Var};

use crate::error::{Error, Result};

pub struct Adam {
    params: Vec<(String, Var)>,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: usize,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    clip: Option<f64>,
}

impl Adam {
    pub fn new(params: Vec<(String, Var)>, lr: f64, clip: Option<f64>) -> Result<Self> {
        let m = params
            .iter()
            .map(|(_, p)| Tensor::zeros(p.shape(), DType::F32, p.device()))
            .collect::<candle_core::Result<Vec<_>>>()?;
        let v = m.clone();
        Ok(Self { params, m, v, t: 0, lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, clip })
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    /// One update step. Parameters without a gradient in `grads` are treated
    /// as having a zero gradient.
    pub fn step(&mut self, grads: &GradStore) -> Result<()> {
        self.t += 1;
        // Global gradient norm across all parameters, for clipping.
        let scale = match self.clip {
            None => 1.0,
            Some(clip) => {
                let mut sq_sum = 0.0f64;
                for (_, p) in &self.params {
                    if let Some(g) = grads.get(p.as_tensor()) {
                        sq_sum += g.sqr()?.sum_all()?.to_scalar::<f32>()? as f64;
                    }
                }
                let norm = sq_sum.sqrt();
                if norm > clip && norm > 0.0 {
                    clip / norm
                } else {
                    1.0
                }
            }
        };
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (i, (_, p)) in self.params.iter().enumerate() {
            let g = match grads.get(p.as_tensor()) {
                Some(g) => g.affine(scale, 0.0)?,
                None => Tensor::zeros(p.shape(), DType::F32, p.device())?,
            };
            self.m[i] = self.m[i].affine(self.beta1, 0.0)?.add(&g.affine(1.0 - self.beta1, 0.0)?)?;
            self.v[i] =
                self.v[i].affine(self.beta2, 0.0)?.add(&g.sqr()?.affine(1.0 - self.beta2, 0.0)?)?;
            let m_hat = self.m[i].affine(1.0 / bc1, 0.0)?;
            let v_hat = self.v[i].affine(1.0 / bc2, 0.0)?;
            let denom = v_hat.sqrt()?.affine(1.0, self.eps)?;
            let update = m_hat.div(&denom)?.affine(self.lr, 0.0)?;
            p.set(&p.as_tensor().sub(&update)?)?;
        }
        Ok(())
    }

    /// Export optimizer state as named arrays (moments plus the step count).
    pub fn export_state(&self, prefix: &str) -> Result<HashMap<String, (Vec<usize>, Vec<f32>)>> {
        let mut out = HashMap::new();
        for (i, (name, _)) in self.params.iter().enumerate() {
            for (kind, t) in [("m", &self.m[i]), ("v", &self.v[i])] {
                out.insert(
                    format!("{prefix}.{kind}.{name}"),
                    (t.dims().to_vec(), t.flatten_all()?.to_vec1::<f32>()?),
                );
            }
        }
        out.insert(format!("{prefix}.t"), (vec![1], vec![self.t as f32]));
        Ok(out)
    }

    /// Restore optimizer state previously produced by [`Adam::export_state`].
    pub fn import_state(
        &mut self,
        prefix: &str,
        state: &HashMap<String, (Vec<usize>, Vec<f32>)>,
    ) -> Result<()> {
        for (i, (name, p)) in self.params.iter().enumerate() {
            for (kind, slot) in [("m", 0usize), ("v", 1)] {
                let key = format!("{prefix}.{kind}.{name}");
                let (shape, data) = state
                    .get(&key)
                    .ok_or_else(|| Error::data(format!("optimizer state missing `{key}`")))?;
                if shape != p.dims() {
                    return Err(Error::data(format!("optimizer state shape mismatch for `{key}`")));
                }
                let t = Tensor::from_vec(data.clone(), shape.as_slice(), p.device())?;
                if slot == 0 {
                    self.m[i] = t;
                } else {
                    self.v[i] = t;
                }
            }
        }
        let (_, t_val) = state
            .get(&format!("{prefix}.t"))
            .ok_or_else(|| Error::data("optimizer state missing step count"))?;
        self.t = t_val[0] as usize;
        Ok(())
    }
}
