//! Toy-scale discriminator trio: multi-scale (MSD), multi-period (MPD), and
//! multi-scale STFT (MS-STFT), each producing a scalar logit plus the
//! intermediate feature maps used by the feature-matching loss.

use candle_core::{DType, Device, Tensor};

use crate::config::DiscConfig;
use crate::error::{Error, Result};
use crate::nn::{leaky_relu, Conv1d, Conv2d, VarRegistry};

const LRELU_SLOPE: f64 = 0.1;

/// Scalar logit (mean of the final map) plus intermediate features.
pub struct DiscriminatorOutput {
    pub logit: Tensor,
    pub features: Vec<Tensor>,
}

struct ScaleDiscriminator {
    factor: usize,
    convs: Vec<Conv1d>,
    post: Conv1d,
}

impl ScaleDiscriminator {
    fn new(reg: &mut VarRegistry, name: &str, factor: usize, c: usize) -> Result<Self> {
        let convs = vec![
            Conv1d::new(reg, &format!("{name}.l0"), 1, c, 15, 1, 7, 1)?,
            Conv1d::new(reg, &format!("{name}.l1"), c, 2 * c, 21, 4, 10, 1)?,
            Conv1d::new(reg, &format!("{name}.l2"), 2 * c, 4 * c, 21, 4, 10, 1)?,
            Conv1d::new(reg, &format!("{name}.l3"), 4 * c, 4 * c, 5, 1, 2, 1)?,
        ];
        let post = Conv1d::new(reg, &format!("{name}.post"), 4 * c, 1, 3, 1, 1, 1)?;
        Ok(Self { factor, convs, post })
    }

    fn forward(&self, x: &Tensor) -> Result<DiscriminatorOutput> {
        let mut y = if self.factor > 1 {
            // Average-pool by the scale factor with a constant kernel.
            let k = Tensor::full(1.0f32 / self.factor as f32, (1, 1, self.factor), x.device())?;
            x.conv1d(&k, 0, self.factor, 1, 1)?
        } else {
            x.clone()
        };
        let mut features = Vec::new();
        for conv in &self.convs {
            y = leaky_relu(&conv.forward(&y)?, LRELU_SLOPE)?;
            features.push(y.clone());
        }
        let map = self.post.forward(&y)?;
        features.push(map.clone());
        Ok(DiscriminatorOutput { logit: map.mean_all()?, features })
    }
}

/// Period discriminator. The (kernel, 1) convolutions of the reference
/// architecture never mix phase columns, so the input is folded to
/// (batch * period, 1, t / period) and shared 1D convolutions are applied
/// along the folded time axis.
struct PeriodDiscriminator {
    period: usize,
    convs: Vec<Conv1d>,
    post: Conv1d,
}

impl PeriodDiscriminator {
    fn new(reg: &mut VarRegistry, name: &str, period: usize, c: usize) -> Result<Self> {
        let convs = vec![
            Conv1d::new(reg, &format!("{name}.l0"), 1, c, 5, 3, 2, 1)?,
            Conv1d::new(reg, &format!("{name}.l1"), c, 2 * c, 5, 3, 2, 1)?,
            Conv1d::new(reg, &format!("{name}.l2"), 2 * c, 4 * c, 5, 3, 2, 1)?,
            Conv1d::new(reg, &format!("{name}.l3"), 4 * c, 4 * c, 3, 1, 1, 1)?,
        ];
        let post = Conv1d::new(reg, &format!("{name}.post"), 4 * c, 1, 3, 1, 1, 1)?;
        Ok(Self { period, convs, post })
    }

    fn forward(&self, x: &Tensor) -> Result<DiscriminatorOutput> {
        let (b, _, len) = x.dims3()?;
        let p = self.period;
        let padded_len = len.div_ceil(p) * p;
        let y = if padded_len != len {
            x.pad_with_zeros(2, 0, padded_len - len)?
        } else {
            x.clone()
        };
        let rows = padded_len / p;
        // (B, 1, rows*p) -> (B*p, 1, rows): phase-major folding.
        let y = y
            .reshape((b, rows, p))?
            .transpose(1, 2)?
            .contiguous()?
            .reshape((b * p, 1, rows))?;
        let mut features = Vec::new();
        let mut y = y;
        for conv in &self.convs {
            y = leaky_relu(&conv.forward(&y)?, LRELU_SLOPE)?;
            features.push(y.clone());
        }
        let map = self.post.forward(&y)?;
        features.push(map.clone());
        Ok(DiscriminatorOutput { logit: map.mean_all()?, features })
    }
}

/// STFT discriminator over the real/imaginary spectrogram of one window
/// size. Square 3x3 kernels with stride-2 downsampling and growing dilation
/// stand in for the reference architecture's frequency-strided,
/// time-dilated convolutions at desk scale.
struct StftDiscriminator {
    window: usize,
    hop: usize,
    dft: Tensor,
    convs: Vec<Conv2d>,
    post: Conv2d,
}

impl StftDiscriminator {
    fn new(reg: &mut VarRegistry, name: &str, window: usize, c: usize, device: &Device) -> Result<Self> {
        let hop = window / 4;
        let n_freq = window / 2 + 1;
        let mut dft = vec![0.0f64; 2 * n_freq * window];
        for f in 0..n_freq {
            for n in 0..window {
                let hann =
                    0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / window as f64).cos();
                let angle = 2.0 * std::f64::consts::PI * f as f64 * n as f64 / window as f64;
                dft[f * window + n] = angle.cos() * hann;
                dft[(n_freq + f) * window + n] = -angle.sin() * hann;
            }
        }
        let dft = Tensor::from_vec(dft, (2 * n_freq, 1, window), device)?.to_dtype(DType::F32)?;
        let convs = vec![
            Conv2d::new(reg, &format!("{name}.l0"), 2, c, (3, 3), 1, 1, 1)?,
            Conv2d::new(reg, &format!("{name}.l1"), c, 2 * c, (3, 3), 2, 1, 1)?,
            Conv2d::new(reg, &format!("{name}.l2"), 2 * c, 2 * c, (3, 3), 2, 2, 2)?,
            Conv2d::new(reg, &format!("{name}.l3"), 2 * c, 2 * c, (3, 3), 2, 4, 4)?,
        ];
        let post = Conv2d::new(reg, &format!("{name}.post"), 2 * c, 1, (3, 3), 1, 1, 1)?;
        Ok(Self { window, hop, dft, convs, post })
    }

    fn forward(&self, x: &Tensor) -> Result<DiscriminatorOutput> {
        let (b, _, len) = x.dims3()?;
        if len < self.window {
            return Err(Error::domain(format!(
                "clip of {len} samples is shorter than the {}-sample STFT window",
                self.window
            )));
        }
        let spec = x.conv1d(&self.dft, 0, self.hop, 1, 1)?;
        let n_freq = self.window / 2 + 1;
        let frames = spec.dim(2)?;
        let real = spec.narrow(1, 0, n_freq)?;
        let imag = spec.narrow(1, n_freq, n_freq)?;
        let mut y = Tensor::stack(&[real, imag], 1)?.reshape((b, 2, n_freq, frames))?;
        let mut features = Vec::new();
        for conv in &self.convs {
            y = leaky_relu(&conv.forward(&y)?, LRELU_SLOPE)?;
            features.push(y.clone());
        }
        let map = self.post.forward(&y)?;
        features.push(map.clone());
        Ok(DiscriminatorOutput { logit: map.mean_all()?, features })
    }
}

/// The full discriminator ensemble.
pub struct Discriminators {
    msd: Vec<ScaleDiscriminator>,
    mpd: Vec<PeriodDiscriminator>,
    stft: Vec<StftDiscriminator>,
    max_window: usize,
}

impl Discriminators {
    pub fn new(cfg: &DiscConfig, reg: &mut VarRegistry) -> Result<Self> {
        let c = cfg.channels;
        let mut msd = Vec::new();
        for (i, &factor) in cfg.msd_scales.iter().enumerate() {
            msd.push(ScaleDiscriminator::new(reg, &format!("disc.msd{i}"), factor, c)?);
        }
        let mut mpd = Vec::new();
        for (i, &period) in cfg.mpd_periods.iter().enumerate() {
            mpd.push(PeriodDiscriminator::new(reg, &format!("disc.mpd{i}"), period, c)?);
        }
        let device = reg.device().clone();
        let mut stft = Vec::new();
        for (i, &window) in cfg.stft_windows.iter().enumerate() {
            stft.push(StftDiscriminator::new(reg, &format!("disc.stft{i}"), window, c, &device)?);
        }
        let max_window = cfg.stft_windows.iter().copied().max().unwrap_or(0);
        Ok(Self { msd, mpd, stft, max_window })
    }

    pub fn n_discriminators(&self) -> usize {
        self.msd.len() + self.mpd.len() + self.stft.len()
    }

    /// Run every sub-discriminator on x: (B, 1, L).
    pub fn run_all(&self, x: &Tensor) -> Result<Vec<DiscriminatorOutput>> {
        let len = x.dim(2)?;
        if len < self.max_window {
            return Err(Error::domain(format!(
                "input of {len} samples is shorter than the largest STFT window {}",
                self.max_window
            )));
        }
        let mut outputs = Vec::with_capacity(self.n_discriminators());
        for d in &self.msd {
            outputs.push(d.forward(x)?);
        }
        for d in &self.mpd {
            outputs.push(d.forward(x)?);
        }
        for d in &self.stft {
            outputs.push(d.forward(x)?);
        }
        Ok(outputs)
    }
}

/// Split a batch of outputs into logit and feature lists for the loss ops.
pub fn split_outputs(outputs: Vec<DiscriminatorOutput>) -> (Vec<Tensor>, Vec<Vec<Tensor>>) {
    let mut logits = Vec::with_capacity(outputs.len());
    let mut features = Vec::with_capacity(outputs.len());
    for o in outputs {
        logits.push(o.logit);
        features.push(o.features);
    }
    (logits, features)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::hinge_discriminator;
    use crate::optim::Adam;

    fn small_cfg() -> DiscConfig {
        DiscConfig {
            msd_scales: vec![1, 2],
            mpd_periods: vec![2, 3],
            stft_windows: vec![256, 512],
            channels: 4,
        }
    }

    fn make(cfg: &DiscConfig, seed: u64) -> (Discriminators, VarRegistry) {
        let mut reg = VarRegistry::new(seed);
        let disc = Discriminators::new(cfg, &mut reg).unwrap();
        (disc, reg)
    }

    fn noise(n: usize, seed: u64) -> Tensor {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f32> = (0..n).map(|_| rng.random_range(-0.5f32..0.5)).collect();
        Tensor::from_vec(data, (1, 1, n), &Device::Cpu).unwrap()
    }

    #[test]
    fn output_count_matches_configuration() {
        let cfg = small_cfg();
        let (disc, _reg) = make(&cfg, 5);
        let x = noise(2048, 1);
        let outputs = disc.run_all(&x).unwrap();
        assert_eq!(
            outputs.len(),
            cfg.msd_scales.len() + cfg.mpd_periods.len() + cfg.stft_windows.len()
        );
        for o in &outputs {
            assert_eq!(o.features.len(), 5);
            assert!(o.logit.to_scalar::<f32>().unwrap().is_finite());
        }
    }

    #[test]
    fn identical_inputs_give_identical_outputs() {
        let (disc, _reg) = make(&small_cfg(), 5);
        let x = noise(1024, 2);
        let a = disc.run_all(&x).unwrap();
        let b = disc.run_all(&x).unwrap();
        for (oa, ob) in a.iter().zip(&b) {
            assert_eq!(
                oa.logit.to_scalar::<f32>().unwrap(),
                ob.logit.to_scalar::<f32>().unwrap()
            );
        }
    }

    #[test]
    fn too_short_input_is_rejected() {
        let (disc, _reg) = make(&small_cfg(), 5);
        let x = noise(128, 3);
        assert!(matches!(disc.run_all(&x), Err(Error::Domain(_))));
    }

    #[test]
    fn one_training_step_does_not_increase_hinge_loss() {
        let cfg = small_cfg();
        let (disc, reg) = make(&cfg, 7);
        let real = noise(1024, 10);
        let fake = noise(1024, 11).affine(0.7, 0.01).unwrap();
        let loss_value = |disc: &Discriminators| -> f64 {
            let (rl, _) = split_outputs(disc.run_all(&real).unwrap());
            let (fl, _) = split_outputs(disc.run_all(&fake).unwrap());
            hinge_discriminator(&rl, &fl).unwrap().to_scalar::<f32>().unwrap() as f64
        };
        let before = loss_value(&disc);
        let mut opt = Adam::new(reg.vars().to_vec(), 1e-5, Some(10.0)).unwrap();
        let (rl, _) = split_outputs(disc.run_all(&real).unwrap());
        let (fl, _) = split_outputs(disc.run_all(&fake).unwrap());
        let loss = hinge_discriminator(&rl, &fl).unwrap();
        opt.step(&loss.backward().unwrap()).unwrap();
        let after = loss_value(&disc);
        assert!(
            after <= before + 1e-6,
            "hinge loss rose after a descent step: {before} -> {after}"
        );
    }
}
