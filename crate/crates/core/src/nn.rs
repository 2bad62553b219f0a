//! Small neural-network building blocks on candle tensors: a seeded variable
//! registry (so runs are reproducible bit-for-bit), weight-normalized 1D
//! convolutions, plain conv wrappers, and an LSTM.

use std::collections::HashMap;

use candle_core::{DType, Device, Tensor, Var, D};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Named trainable variables, created in a fixed order from a seeded RNG or
/// restored from checkpointed arrays.
pub struct VarRegistry {
    vars: Vec<(String, Var)>,
    rng: ChaCha8Rng,
    restore: Option<HashMap<String, (Vec<usize>, Vec<f32>)>>,
    device: Device,
}

impl VarRegistry {
    pub fn new(seed: u64) -> Self {
        Self {
            vars: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            restore: None,
            device: Device::Cpu,
        }
    }

    /// Registry that serves tensors from checkpointed arrays. The RNG is
    /// still seeded so shapes absent from the map fail loudly rather than
    /// silently diverging.
    pub fn from_weights(weights: HashMap<String, (Vec<usize>, Vec<f32>)>) -> Self {
        Self {
            vars: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
            restore: Some(weights),
            device: Device::Cpu,
        }
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    fn register(&mut self, name: &str, data: Vec<f32>, shape: &[usize]) -> Result<Var> {
        let t = Tensor::from_vec(data, shape, &self.device)?;
        let v = Var::from_tensor(&t)?;
        self.vars.push((name.to_string(), v.clone()));
        Ok(v)
    }

    fn take_restored(&mut self, name: &str, shape: &[usize]) -> Result<Option<Vec<f32>>> {
        let Some(map) = self.restore.as_mut() else { return Ok(None) };
        match map.remove(name) {
            Some((stored_shape, data)) => {
                if stored_shape != shape {
                    return Err(Error::data(format!(
                        "checkpoint shape {stored_shape:?} for `{name}` does not match expected {shape:?}"
                    )));
                }
                Ok(Some(data))
            }
            None => Err(Error::data(format!("checkpoint is missing variable `{name}`"))),
        }
    }

    /// Fan-in scaled uniform init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    pub fn uniform(&mut self, name: &str, shape: &[usize], fan_in: usize) -> Result<Var> {
        if let Some(data) = self.take_restored(name, shape)? {
            return self.register(name, data, shape);
        }
        let bound = 1.0 / (fan_in.max(1) as f32).sqrt();
        let n: usize = shape.iter().product();
        let data: Vec<f32> = (0..n).map(|_| self.rng.random_range(-bound..bound)).collect();
        self.register(name, data, shape)
    }

    /// Uniform init with an explicit bound.
    pub fn uniform_bound(&mut self, name: &str, shape: &[usize], bound: f32) -> Result<Var> {
        if let Some(data) = self.take_restored(name, shape)? {
            return self.register(name, data, shape);
        }
        let n: usize = shape.iter().product();
        let data: Vec<f32> = (0..n).map(|_| self.rng.random_range(-bound..bound)).collect();
        self.register(name, data, shape)
    }

    pub fn zeros(&mut self, name: &str, shape: &[usize]) -> Result<Var> {
        if let Some(data) = self.take_restored(name, shape)? {
            return self.register(name, data, shape);
        }
        self.register(name, vec![0.0; shape.iter().product()], shape)
    }

    /// Register a variable initialized from an explicit tensor (unless the
    /// checkpoint overrides it).
    pub fn from_tensor(&mut self, name: &str, init: &Tensor) -> Result<Var> {
        let shape = init.dims().to_vec();
        if let Some(data) = self.take_restored(name, &shape)? {
            return self.register(name, data, &shape);
        }
        let flat = init.flatten_all()?.to_vec1::<f32>()?;
        self.register(name, flat, &shape)
    }

    pub fn vars(&self) -> &[(String, Var)] {
        &self.vars
    }

    pub fn all_vars(&self) -> Vec<Var> {
        self.vars.iter().map(|(_, v)| v.clone()).collect()
    }

    /// Export name -> (shape, data) for checkpointing.
    pub fn export(&self) -> Result<HashMap<String, (Vec<usize>, Vec<f32>)>> {
        let mut out = HashMap::new();
        for (name, var) in &self.vars {
            let t = var.as_tensor();
            out.insert(name.clone(), (t.dims().to_vec(), t.flatten_all()?.to_vec1::<f32>()?));
        }
        Ok(out)
    }
}

/// Weight-normalized 1D convolution: w = g * v / ||v||, norm taken per
/// output channel. g is initialized to ||v|| so the initial weight equals v.
pub struct WnConv1d {
    v: Var,
    g: Var,
    bias: Var,
    stride: usize,
    padding: usize,
    dilation: usize,
}

impl WnConv1d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        reg: &mut VarRegistry,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        dilation: usize,
    ) -> Result<Self> {
        let v = reg.uniform(&format!("{name}.v"), &[out_ch, in_ch, kernel], in_ch * kernel)?;
        let norm = v.as_tensor().sqr()?.sum_keepdim((1, 2))?.sqrt()?;
        let g = reg.from_tensor(&format!("{name}.g"), &norm)?;
        let bias = reg.zeros(&format!("{name}.b"), &[out_ch])?;
        // "same" padding for stride-s convs; effective kernel for dilation d.
        let k_eff = dilation * (kernel - 1) + 1;
        let padding = k_eff.saturating_sub(stride).div_ceil(2);
        Ok(Self { v, g, bias, stride, padding, dilation })
    }

    fn weight(&self) -> Result<Tensor> {
        let norm = self.v.as_tensor().sqr()?.sum_keepdim((1, 2))?.sqrt()?;
        Ok(self.v.as_tensor().broadcast_div(&norm)?.broadcast_mul(self.g.as_tensor())?)
    }

    /// x: (B, C_in, L) -> (B, C_out, L/stride)
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let w = self.weight()?;
        let y = x.conv1d(&w, self.padding, self.stride, self.dilation, 1)?;
        Ok(y.broadcast_add(&self.bias.as_tensor().reshape((1, (), 1))?)?)
    }
}

/// Weight-normalized transposed 1D convolution for upsampling by `stride`.
/// Padding and output padding are chosen so the output length is exactly
/// `stride * input_length` for kernel = 2 * stride.
pub struct WnConvTranspose1d {
    v: Var,
    g: Var,
    bias: Var,
    stride: usize,
    left_trim: usize,
}

impl WnConvTranspose1d {
    pub fn new(
        reg: &mut VarRegistry,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
    ) -> Result<Self> {
        let v = reg.uniform(&format!("{name}.v"), &[in_ch, out_ch, kernel], in_ch * kernel)?;
        let norm = v.as_tensor().sqr()?.sum_keepdim((1, 2))?.sqrt()?;
        let g = reg.from_tensor(&format!("{name}.g"), &norm)?;
        let bias = reg.zeros(&format!("{name}.b"), &[out_ch])?;
        // The full (unpadded) output has (L+1)*s samples for k = 2s; trimming
        // k - s = s samples, split across the ends, leaves exactly L*s.
        // Trimming after the fact also sidesteps length-1 underflow in the
        // backend's padded-output arithmetic.
        let left_trim = stride.div_ceil(2);
        Ok(Self { v, g, bias, stride, left_trim })
    }

    /// x: (B, C_in, L) -> (B, C_out, L*stride)
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let norm = self.v.as_tensor().sqr()?.sum_keepdim((1, 2))?.sqrt()?;
        let w = self.v.as_tensor().broadcast_div(&norm)?.broadcast_mul(self.g.as_tensor())?;
        let y = x.conv_transpose1d(&w, 0, 0, self.stride, 1, 1)?;
        let l_in = x.dim(2)?;
        let y = y.narrow(2, self.left_trim, l_in * self.stride)?;
        Ok(y.broadcast_add(&self.bias.as_tensor().reshape((1, (), 1))?)?)
    }
}

/// Plain 1D convolution (discriminators).
pub struct Conv1d {
    w: Var,
    bias: Var,
    stride: usize,
    padding: usize,
    groups: usize,
}

impl Conv1d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        reg: &mut VarRegistry,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        groups: usize,
    ) -> Result<Self> {
        let w = reg.uniform(
            &format!("{name}.w"),
            &[out_ch, in_ch / groups, kernel],
            (in_ch / groups) * kernel,
        )?;
        let bias = reg.zeros(&format!("{name}.b"), &[out_ch])?;
        Ok(Self { w, bias, stride, padding, groups })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.conv1d(self.w.as_tensor(), self.padding, self.stride, 1, self.groups)?;
        Ok(y.broadcast_add(&self.bias.as_tensor().reshape((1, (), 1))?)?)
    }
}

/// Plain 2D convolution (discriminators).
pub struct Conv2d {
    w: Var,
    bias: Var,
    stride: usize,
    padding: usize,
    dilation: usize,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        reg: &mut VarRegistry,
        name: &str,
        in_ch: usize,
        out_ch: usize,
        kernel: (usize, usize),
        stride: usize,
        padding: usize,
        dilation: usize,
    ) -> Result<Self> {
        let w = reg.uniform(
            &format!("{name}.w"),
            &[out_ch, in_ch, kernel.0, kernel.1],
            in_ch * kernel.0 * kernel.1,
        )?;
        let bias = reg.zeros(&format!("{name}.b"), &[out_ch])?;
        Ok(Self { w, bias, stride, padding, dilation })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.conv2d(self.w.as_tensor(), self.padding, self.stride, self.dilation, 1)?;
        Ok(y.broadcast_add(&self.bias.as_tensor().reshape((1, (), 1, 1))?)?)
    }
}

/// Linear layer.
pub struct Linear {
    w: Var,
    bias: Option<Var>,
}

impl Linear {
    pub fn new(reg: &mut VarRegistry, name: &str, in_dim: usize, out_dim: usize) -> Result<Self> {
        let w = reg.uniform(&format!("{name}.w"), &[out_dim, in_dim], in_dim)?;
        let bias = Some(reg.zeros(&format!("{name}.b"), &[out_dim])?);
        Ok(Self { w, bias })
    }

    pub fn new_no_bias(
        reg: &mut VarRegistry,
        name: &str,
        in_dim: usize,
        out_dim: usize,
    ) -> Result<Self> {
        let w = reg.uniform(&format!("{name}.w"), &[out_dim, in_dim], in_dim)?;
        Ok(Self { w, bias: None })
    }

    /// x: (.., in_dim) -> (.., out_dim)
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.broadcast_matmul(&self.w.as_tensor().t()?)?;
        match &self.bias {
            Some(b) => Ok(y.broadcast_add(b.as_tensor())?),
            None => Ok(y),
        }
    }

    pub fn weight(&self) -> &Tensor {
        self.w.as_tensor()
    }
}

/// Single-direction LSTM layer. Gate order: input, forget, cell, output.
pub struct Lstm {
    w_ih: Var,
    w_hh: Var,
    bias: Var,
    hidden: usize,
}

impl Lstm {
    pub fn new(reg: &mut VarRegistry, name: &str, input: usize, hidden: usize) -> Result<Self> {
        let w_ih = reg.uniform(&format!("{name}.w_ih"), &[4 * hidden, input], input)?;
        let w_hh = reg.uniform(&format!("{name}.w_hh"), &[4 * hidden, hidden], hidden)?;
        let bias = reg.zeros(&format!("{name}.b"), &[4 * hidden])?;
        Ok(Self { w_ih, w_hh, bias, hidden })
    }

    /// x: (B, T, input) -> (B, T, hidden). When `reverse` is set, the
    /// sequence is processed back to front and the outputs re-reversed.
    pub fn forward(&self, x: &Tensor, reverse: bool) -> Result<Tensor> {
        let (b, t, _) = x.dims3()?;
        let dev = x.device();
        let mut h = Tensor::zeros((b, self.hidden), DType::F32, dev)?;
        let mut c = h.clone();
        let w_ih_t = self.w_ih.as_tensor().t()?;
        let w_hh_t = self.w_hh.as_tensor().t()?;
        let mut outputs: Vec<Tensor> = Vec::with_capacity(t);
        for step in 0..t {
            let idx = if reverse { t - 1 - step } else { step };
            let x_t = x.narrow(1, idx, 1)?.squeeze(1)?;
            let gates = x_t
                .matmul(&w_ih_t)?
                .add(&h.matmul(&w_hh_t)?)?
                .broadcast_add(self.bias.as_tensor())?;
            let i = sigmoid(&gates.narrow(1, 0, self.hidden)?)?;
            let f = sigmoid(&gates.narrow(1, self.hidden, self.hidden)?)?;
            let g = gates.narrow(1, 2 * self.hidden, self.hidden)?.tanh()?;
            let o = sigmoid(&gates.narrow(1, 3 * self.hidden, self.hidden)?)?;
            c = f.mul(&c)?.add(&i.mul(&g)?)?;
            h = o.mul(&c.tanh()?)?;
            outputs.push(h.clone());
        }
        if reverse {
            outputs.reverse();
        }
        let stacked = Tensor::stack(&outputs, 1)?;
        Ok(stacked)
    }
}

/// Stacked recurrent block with a residual skip. Bidirectional variants run a
/// forward and a backward LSTM of half width and concatenate.
pub struct RecurrentBlock {
    layers: Vec<(Lstm, Option<Lstm>)>,
}

impl RecurrentBlock {
    pub fn new(
        reg: &mut VarRegistry,
        name: &str,
        width: usize,
        n_layers: usize,
        bidirectional: bool,
    ) -> Result<Self> {
        let mut layers = Vec::new();
        for l in 0..n_layers {
            if bidirectional {
                let half = width / 2;
                let fwd = Lstm::new(reg, &format!("{name}.{l}.fwd"), width, half)?;
                let bwd = Lstm::new(reg, &format!("{name}.{l}.bwd"), width, width - half)?;
                layers.push((fwd, Some(bwd)));
            } else {
                let fwd = Lstm::new(reg, &format!("{name}.{l}.fwd"), width, width)?;
                layers.push((fwd, None));
            }
        }
        Ok(Self { layers })
    }

    /// x: (B, T, width) -> (B, T, width), with x added back as a skip.
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut y = x.clone();
        for (fwd, bwd) in &self.layers {
            y = match bwd {
                Some(bwd) => {
                    let a = fwd.forward(&y, false)?;
                    let b = bwd.forward(&y, true)?;
                    Tensor::cat(&[a, b], D::Minus1)?
                }
                None => fwd.forward(&y, false)?,
            };
        }
        Ok(y.add(x)?)
    }
}

pub fn sigmoid(x: &Tensor) -> Result<Tensor> {
    Ok(candle_nn::ops::sigmoid(x)?)
}

pub fn leaky_relu(x: &Tensor, slope: f64) -> Result<Tensor> {
    Ok(candle_nn::ops::leaky_relu(x, slope)?)
}

pub fn elu(x: &Tensor) -> Result<Tensor> {
    Ok(x.elu(1.0)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_deterministic_per_seed() {
        let mut a = VarRegistry::new(7);
        let mut b = VarRegistry::new(7);
        let va = a.uniform("x", &[4, 3], 3).unwrap();
        let vb = b.uniform("x", &[4, 3], 3).unwrap();
        let da = va.as_tensor().flatten_all().unwrap().to_vec1::<f32>().unwrap();
        let db = vb.as_tensor().flatten_all().unwrap().to_vec1::<f32>().unwrap();
        assert_eq!(da, db);

        let mut c = VarRegistry::new(8);
        let vc = c.uniform("x", &[4, 3], 3).unwrap();
        let dc = vc.as_tensor().flatten_all().unwrap().to_vec1::<f32>().unwrap();
        assert_ne!(da, dc);
    }

    #[test]
    fn registry_restores_from_export() {
        let mut a = VarRegistry::new(7);
        a.uniform("layer.w", &[2, 2], 2).unwrap();
        let export = a.export().unwrap();
        let mut b = VarRegistry::from_weights(export.clone());
        let restored = b.uniform("layer.w", &[2, 2], 2).unwrap();
        let d = restored.as_tensor().flatten_all().unwrap().to_vec1::<f32>().unwrap();
        assert_eq!(d, export["layer.w"].1);
    }

    #[test]
    fn wn_conv_preserves_length_at_stride_one() {
        let mut reg = VarRegistry::new(1);
        let conv = WnConv1d::new(&mut reg, "c", 1, 4, 7, 1, 1).unwrap();
        let x = Tensor::zeros((2, 1, 50), DType::F32, reg.device()).unwrap();
        let y = conv.forward(&x).unwrap();
        assert_eq!(y.dims(), &[2, 4, 50]);
    }

    #[test]
    fn strided_conv_and_transpose_are_length_inverse() {
        for stride in [2usize, 4, 5, 8] {
            let mut reg = VarRegistry::new(1);
            let down =
                WnConv1d::new(&mut reg, "d", 1, 2, 2 * stride, stride, 1).unwrap();
            let up = WnConvTranspose1d::new(&mut reg, "u", 2, 1, 2 * stride, stride).unwrap();
            let len = stride * 13;
            let x = Tensor::zeros((1, 1, len), DType::F32, reg.device()).unwrap();
            let y = down.forward(&x).unwrap();
            assert_eq!(y.dims(), &[1, 2, 13], "stride {stride}");
            let z = up.forward(&y).unwrap();
            assert_eq!(z.dims(), &[1, 1, len], "stride {stride}");
        }
    }

    #[test]
    fn lstm_shapes_and_determinism() {
        let mut reg = VarRegistry::new(3);
        let block = RecurrentBlock::new(&mut reg, "r", 8, 2, true).unwrap();
        let x = Tensor::randn(0f32, 1f32, (2, 5, 8), reg.device()).unwrap();
        let y1 = block.forward(&x).unwrap();
        let y2 = block.forward(&x).unwrap();
        assert_eq!(y1.dims(), &[2, 5, 8]);
        let a = y1.flatten_all().unwrap().to_vec1::<f32>().unwrap();
        let b = y2.flatten_all().unwrap().to_vec1::<f32>().unwrap();
        assert_eq!(a, b);
    }
}
