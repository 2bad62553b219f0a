//! SEANet-style convolutional encoder and mirrored decoder mapping waveforms
//! to latent frame sequences and back.
//!
//! The encoder is a kernel-7 input convolution, a stack of residual blocks
//! each followed by a strided downsampling convolution (channels double per
//! stage), a two-layer bidirectional recurrent block with a skip connection,
//! and a kernel-7 projection to the latent dimension. The decoder mirrors
//! this with transposed convolutions and a unidirectional recurrent block.
//! All convolutions are weight-normalized with ELU activations and symmetric
//! "same" padding; trailing samples that do not fill a frame are truncated.

use candle_core::Tensor;

use crate::audio::AudioClip;
use crate::config::CodecConfig;
use crate::error::{Error, Result};
use crate::nn::{elu, RecurrentBlock, VarRegistry, WnConv1d, WnConvTranspose1d};

/// Latent frames produced by the encoder: `(t_prime, dim)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSequence {
    pub frames: Vec<f32>,
    pub t_prime: usize,
    pub dim: usize,
    pub frame_rate: u32,
}

impl LatentSequence {
    pub fn to_tensor(&self, device: &candle_core::Device) -> Result<Tensor> {
        Ok(Tensor::from_vec(self.frames.clone(), (self.t_prime, self.dim), device)?)
    }

    /// Build from a `(t_prime, dim)` tensor.
    pub fn from_tensor(t: &Tensor, frame_rate: u32) -> Result<Self> {
        let (t_prime, dim) = t.dims2()?;
        Ok(Self {
            frames: t.flatten_all()?.to_vec1::<f32>()?,
            t_prime,
            dim,
            frame_rate,
        })
    }
}

struct ResidualUnit {
    conv1: WnConv1d,
    conv2: WnConv1d,
}

impl ResidualUnit {
    fn new(reg: &mut VarRegistry, name: &str, channels: usize) -> Result<Self> {
        let hidden = (channels / 2).max(1);
        Ok(Self {
            conv1: WnConv1d::new(reg, &format!("{name}.conv1"), channels, hidden, 3, 1, 1)?,
            conv2: WnConv1d::new(reg, &format!("{name}.conv2"), hidden, channels, 3, 1, 1)?,
        })
    }

    fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = self.conv1.forward(&elu(x)?)?;
        let y = self.conv2.forward(&elu(&y)?)?;
        Ok(x.add(&y)?)
    }
}

/// Waveform -> latent frames.
pub struct Encoder {
    pre: WnConv1d,
    blocks: Vec<(ResidualUnit, WnConv1d)>,
    recurrent: RecurrentBlock,
    post: WnConv1d,
    cfg: CodecConfig,
}

impl Encoder {
    pub fn new(cfg: &CodecConfig, reg: &mut VarRegistry, prefix: &str) -> Result<Self> {
        cfg.validate()?;
        let c = cfg.base_channels;
        let pre = WnConv1d::new(reg, &format!("{prefix}.pre"), 1, c, 7, 1, 1)?;
        let mut blocks = Vec::new();
        let mut ch = c;
        for (i, &stride) in cfg.strides.iter().enumerate() {
            let res = ResidualUnit::new(reg, &format!("{prefix}.block{i}.res"), ch)?;
            let down = WnConv1d::new(
                reg,
                &format!("{prefix}.block{i}.down"),
                ch,
                ch * 2,
                2 * stride,
                stride,
                1,
            )?;
            blocks.push((res, down));
            ch *= 2;
        }
        let recurrent = RecurrentBlock::new(reg, &format!("{prefix}.lstm"), ch, 2, true)?;
        let post = WnConv1d::new(reg, &format!("{prefix}.post"), ch, cfg.latent_dim, 7, 1, 1)?;
        Ok(Self { pre, blocks, recurrent, post, cfg: cfg.clone() })
    }

    /// x: (B, 1, L) with L a multiple of the stride product -> (B, T', D').
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut y = self.pre.forward(x)?;
        for (res, down) in &self.blocks {
            y = res.forward(&y)?;
            y = down.forward(&elu(&y)?)?;
        }
        // (B, C, T) -> (B, T, C) for the recurrent block.
        let y = y.transpose(1, 2)?.contiguous()?;
        let y = self.recurrent.forward(&y)?;
        let y = y.transpose(1, 2)?.contiguous()?;
        let y = self.post.forward(&elu(&y)?)?;
        Ok(y.transpose(1, 2)?.contiguous()?)
    }

    /// Encode one clip. The clip must match the configured sample rate and
    /// contain at least one full frame; trailing samples are truncated.
    pub fn encode(&self, clip: &AudioClip) -> Result<LatentSequence> {
        if clip.sample_rate != self.cfg.sample_rate {
            return Err(Error::config(format!(
                "clip sample rate {} does not match configured {}",
                clip.sample_rate, self.cfg.sample_rate
            )));
        }
        let hop = self.cfg.hop();
        if clip.samples.is_empty() {
            return Err(Error::domain("cannot encode an empty clip"));
        }
        if clip.samples.len() < hop {
            return Err(Error::domain(format!(
                "clip of {} samples is shorter than one frame ({hop} samples)",
                clip.samples.len()
            )));
        }
        let t_prime = clip.samples.len() / hop;
        let usable = t_prime * hop;
        let x = Tensor::from_vec(clip.samples[..usable].to_vec(), (1, 1, usable), &candle_core::Device::Cpu)?;
        let latents = self.forward(&x)?.squeeze(0)?;
        LatentSequence::from_tensor(&latents, self.cfg.frame_rate())
    }
}

/// Latent frames -> waveform.
pub struct Decoder {
    pre: WnConv1d,
    recurrent: RecurrentBlock,
    blocks: Vec<(WnConvTranspose1d, ResidualUnit)>,
    post: WnConv1d,
    cfg: CodecConfig,
}

impl Decoder {
    pub fn new(cfg: &CodecConfig, reg: &mut VarRegistry, prefix: &str) -> Result<Self> {
        cfg.validate()?;
        let top = cfg.base_channels * (1 << cfg.strides.len());
        let pre = WnConv1d::new(reg, &format!("{prefix}.pre"), cfg.latent_dim, top, 7, 1, 1)?;
        let recurrent = RecurrentBlock::new(reg, &format!("{prefix}.lstm"), top, 2, false)?;
        let mut blocks = Vec::new();
        let mut ch = top;
        for (i, &stride) in cfg.strides.iter().rev().enumerate() {
            let up = WnConvTranspose1d::new(
                reg,
                &format!("{prefix}.block{i}.up"),
                ch,
                ch / 2,
                2 * stride,
                stride,
            )?;
            let res = ResidualUnit::new(reg, &format!("{prefix}.block{i}.res"), ch / 2)?;
            blocks.push((up, res));
            ch /= 2;
        }
        let post = WnConv1d::new(reg, &format!("{prefix}.post"), ch, 1, 7, 1, 1)?;
        Ok(Self { pre, recurrent, blocks, post, cfg: cfg.clone() })
    }

    /// x: (B, T', D') -> (B, 1, T' * stride product).
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let y = x.transpose(1, 2)?.contiguous()?;
        let y = self.pre.forward(&y)?;
        let y = y.transpose(1, 2)?.contiguous()?;
        let y = self.recurrent.forward(&y)?;
        let mut y = y.transpose(1, 2)?.contiguous()?;
        for (up, res) in &self.blocks {
            y = up.forward(&elu(&y)?)?;
            y = res.forward(&y)?;
        }
        Ok(self.post.forward(&elu(&y)?)?)
    }

    /// Decode a latent-shaped array (typically the summed codewords).
    pub fn decode(&self, latents: &LatentSequence) -> Result<AudioClip> {
        if latents.dim != self.cfg.latent_dim {
            return Err(Error::domain(format!(
                "latent dim {} does not match configured {}",
                latents.dim, self.cfg.latent_dim
            )));
        }
        if latents.t_prime == 0 {
            return Err(Error::domain("cannot decode an empty latent sequence"));
        }
        let x = latents.to_tensor(&candle_core::Device::Cpu)?.unsqueeze(0)?;
        let y = self.forward(&x)?;
        let samples = y.flatten_all()?.to_vec1::<f32>()?;
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("decoder produced non-finite samples"));
        }
        AudioClip::new(samples, self.cfg.sample_rate)
    }
}
