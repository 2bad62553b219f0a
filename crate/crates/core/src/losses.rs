//! Training losses: time/frequency reconstruction, hinge adversarial terms,
//! feature matching, the distillation losses, and the weighted generator
//! total.
//!
//! Every loss here is a pure function over tensors and differentiates through
//! candle's autograd; dtype follows the inputs (training runs f32, the
//! gradient-check tests run f64).

use candle_core::{DType, Device, Tensor};

use crate::config::{DistillAxis, LossWeights};
use crate::error::{Error, Result};

/// Guard for cosine denominators: zero-norm columns get cosine 0, which
/// contributes the neutral ln 2 term.
const COSINE_EPS: f64 = 1e-8;
/// Log-compression floor for mel spectrograms.
const MEL_FLOOR: f64 = 1e-5;

/// Named scalar losses plus the weighted total.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub t: f64,
    pub f: f64,
    pub g: f64,
    pub d: f64,
    pub fm: f64,
    pub w: f64,
    pub distill: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn is_finite(&self) -> bool {
        [self.t, self.f, self.g, self.d, self.fm, self.w, self.distill, self.total]
            .iter()
            .all(|x| x.is_finite())
    }
}

/// Time-domain reconstruction loss: mean absolute difference.
pub fn time_loss(x: &Tensor, x_hat: &Tensor) -> Result<Tensor> {
    if x.dims() != x_hat.dims() {
        return Err(Error::domain(format!(
            "time_loss shape mismatch: {:?} vs {:?}",
            x.dims(),
            x_hat.dims()
        )));
    }
    Ok(x.sub(x_hat)?.abs()?.mean_all()?)
}

/// Multi-scale mel reconstruction loss with cached DFT bases and filterbanks.
///
/// For each scale e in 5..=11 the clip is framed with a 2^e Hann window and
/// hop 2^e/4, projected onto a 64-bin mel filterbank (0..sr/2, HTK spacing),
/// log-compressed with a 1e-5 floor, and compared with an L1 norm plus an L2
/// norm. Scales whose window exceeds the clip length are skipped with a
/// warning.
pub struct MelLoss {
    scales: Vec<MelScale>,
    pub n_mels: usize,
}

struct MelScale {
    window: usize,
    hop: usize,
    /// (2F, 1, window): cosine rows then sine rows, Hann-windowed.
    dft: Tensor,
    /// (n_mels, F)
    filterbank: Tensor,
}

impl MelLoss {
    pub fn new(sample_rate: u32, dtype: DType, device: &Device) -> Result<Self> {
        Self::with_scales(sample_rate, 5..=11, 64, dtype, device)
    }

    pub fn with_scales(
        sample_rate: u32,
        exponents: std::ops::RangeInclusive<u32>,
        n_mels: usize,
        dtype: DType,
        device: &Device,
    ) -> Result<Self> {
        let mut scales = Vec::new();
        for e in exponents {
            let window = 1usize << e;
            let hop = (window / 4).max(1);
            let n_freq = window / 2 + 1;
            let mut dft = vec![0.0f64; 2 * n_freq * window];
            for f in 0..n_freq {
                for n in 0..window {
                    let hann = 0.5
                        - 0.5
                            * (2.0 * std::f64::consts::PI * n as f64 / window as f64).cos();
                    let angle = 2.0 * std::f64::consts::PI * f as f64 * n as f64 / window as f64;
                    dft[f * window + n] = angle.cos() * hann;
                    dft[(n_freq + f) * window + n] = -angle.sin() * hann;
                }
            }
            let dft = Tensor::from_vec(dft, (2 * n_freq, 1, window), device)?.to_dtype(dtype)?;
            let fb = mel_filterbank(n_mels, n_freq, window, sample_rate);
            let filterbank =
                Tensor::from_vec(fb, (n_mels, n_freq), device)?.to_dtype(dtype)?;
            scales.push(MelScale { window, hop, dft, filterbank });
        }
        Ok(Self { scales, n_mels })
    }

    /// Log-mel spectrogram of x: (B, 1, L) -> (B, n_mels, frames).
    fn log_mel(&self, scale: &MelScale, x: &Tensor) -> Result<Tensor> {
        let spec = x.conv1d(&scale.dft, 0, scale.hop, 1, 1)?;
        let n_freq = scale.window / 2 + 1;
        let real = spec.narrow(1, 0, n_freq)?;
        let imag = spec.narrow(1, n_freq, n_freq)?;
        let power = real.sqr()?.add(&imag.sqr()?)?;
        let mel = scale.filterbank.unsqueeze(0)?.broadcast_matmul(&power)?;
        let floor = Tensor::full(MEL_FLOOR, mel.dims(), mel.device())?.to_dtype(mel.dtype())?;
        Ok(mel.maximum(&floor)?.log()?)
    }

    /// Public helper: 64-bin log-mel features at one scale, for feature
    /// extraction outside the loss (synthetic teachers).
    pub fn log_mel_single(&self, scale_idx: usize, x: &Tensor) -> Result<Tensor> {
        self.log_mel(&self.scales[scale_idx], x)
    }

    pub fn scale_window(&self, scale_idx: usize) -> usize {
        self.scales[scale_idx].window
    }

    /// x, x_hat: (B, 1, L). Sum over scales of L1 norm + L2 norm between the
    /// log-mel spectrograms.
    pub fn compute(&self, x: &Tensor, x_hat: &Tensor) -> Result<Tensor> {
        if x.dims() != x_hat.dims() {
            return Err(Error::domain("mel_loss shape mismatch"));
        }
        let len = x.dim(candle_core::D::Minus1)?;
        let mut total: Option<Tensor> = None;
        for scale in &self.scales {
            if scale.window > len {
                log::warn!(
                    "mel_loss: skipping window {} for a {}-sample clip",
                    scale.window,
                    len
                );
                continue;
            }
            let ma = self.log_mel(scale, x)?;
            let mb = self.log_mel(scale, x_hat)?;
            let diff = ma.sub(&mb)?;
            let l1 = diff.abs()?.sum_all()?;
            let l2 = diff.sqr()?.sum_all()?.sqrt()?;
            let term = l1.add(&l2)?;
            total = Some(match total {
                None => term,
                Some(t) => t.add(&term)?,
            });
        }
        match total {
            Some(t) => Ok(t),
            None => {
                log::warn!("mel_loss: clip shorter than every configured window");
                Ok(Tensor::zeros((), x.dtype(), x.device())?)
            }
        }
    }
}

/// Triangular mel filterbank, HTK spacing, spanning 0..sr/2.
fn mel_filterbank(n_mels: usize, n_freq: usize, window: usize, sample_rate: u32) -> Vec<f64> {
    let to_mel = |hz: f64| 2595.0 * (1.0 + hz / 700.0).log10();
    let to_hz = |mel: f64| 700.0 * (10f64.powf(mel / 2595.0) - 1.0);
    let f_max = sample_rate as f64 / 2.0;
    let mel_max = to_mel(f_max);
    let edges: Vec<f64> =
        (0..n_mels + 2).map(|i| to_hz(mel_max * i as f64 / (n_mels + 1) as f64)).collect();
    let mut fb = vec![0.0f64; n_mels * n_freq];
    for m in 0..n_mels {
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..n_freq {
            let f = k as f64 * sample_rate as f64 / window as f64;
            let up = if mid > lo { (f - lo) / (mid - lo) } else { 0.0 };
            let down = if hi > mid { (hi - f) / (hi - mid) } else { 0.0 };
            fb[m * n_freq + k] = up.min(down).max(0.0);
        }
    }
    fb
}

/// Continuous representation distillation: mean over the chosen axis of
/// -log sigmoid(cosine similarity) between projected quantized features and
/// teacher features. Both inputs are (t_prime, dim); under the feature axis
/// each cosine spans time steps within one feature dimension.
pub fn distill_loss(q_proj: &Tensor, target: &Tensor, axis: DistillAxis) -> Result<Tensor> {
    if q_proj.dims() != target.dims() {
        return Err(Error::domain(format!(
            "distill_loss shape mismatch: {:?} vs {:?}",
            q_proj.dims(),
            target.dims()
        )));
    }
    if q_proj.rank() != 2 {
        return Err(Error::domain("distill_loss expects rank-2 inputs"));
    }
    let (q, s) = match axis {
        DistillAxis::FeatureDim => (q_proj.clone(), target.clone()),
        DistillAxis::Time => (q_proj.t()?.contiguous()?, target.t()?.contiguous()?),
    };
    // Column vectors along dim 0; one cosine per column.
    let dots = q.mul(&s)?.sum(0)?;
    let qn = q.sqr()?.sum(0)?.sqrt()?;
    let sn = s.sqr()?.sum(0)?.sqrt()?;
    let denom = qn.mul(&sn)?;
    let eps = Tensor::full(COSINE_EPS, denom.dims(), denom.device())?.to_dtype(denom.dtype())?;
    let cos = dots.div(&denom.maximum(&eps)?)?;
    // -log(sigmoid(c)) = log(1 + exp(-c))
    let loss = cos.neg()?.exp()?.affine(1.0, 1.0)?.log()?;
    Ok(loss.mean_all()?)
}

/// Weighted combination of the LM and SM distillation losses:
/// (w_lm * l_lm + w_sm * l_sm) / 2. Unit weights reproduce the plain average.
pub fn combined_loss(l_lm: f64, l_sm: f64, w_lm: f64, w_sm: f64) -> Result<f64> {
    if w_lm < 0.0 || w_sm < 0.0 {
        return Err(Error::domain("distillation weights must be nonnegative"));
    }
    if w_lm == 0.0 && w_sm == 0.0 {
        return Err(Error::config("at least one distillation weight must be nonzero"));
    }
    Ok(0.5 * (w_lm * l_lm + w_sm * l_sm))
}

/// Tensor form of [`combined_loss`] for the training graph.
pub fn combined_loss_tensor(l_lm: &Tensor, l_sm: &Tensor, w_lm: f64, w_sm: f64) -> Result<Tensor> {
    if w_lm == 0.0 && w_sm == 0.0 {
        return Err(Error::config("at least one distillation weight must be nonzero"));
    }
    Ok(l_lm.affine(0.5 * w_lm, 0.0)?.add(&l_sm.affine(0.5 * w_sm, 0.0)?)?)
}

/// Hinge adversarial loss for the generator: mean over discriminators of
/// max(1 - R_n(x_hat), 0).
pub fn hinge_generator(fake_logits: &[Tensor]) -> Result<Tensor> {
    if fake_logits.is_empty() {
        return Err(Error::domain("hinge_generator needs at least one discriminator output"));
    }
    let mut total: Option<Tensor> = None;
    for logit in fake_logits {
        let term = logit.affine(-1.0, 1.0)?.relu()?;
        total = Some(match total {
            None => term,
            Some(t) => t.add(&term)?,
        });
    }
    Ok((total.unwrap() / fake_logits.len() as f64)?)
}

/// Hinge adversarial loss for the discriminators: mean over discriminators of
/// max(1 - R_n(x), 0) + max(1 + R_n(x_hat), 0).
pub fn hinge_discriminator(real_logits: &[Tensor], fake_logits: &[Tensor]) -> Result<Tensor> {
    if real_logits.is_empty() || real_logits.len() != fake_logits.len() {
        return Err(Error::domain("hinge_discriminator needs matching real/fake outputs"));
    }
    let mut total: Option<Tensor> = None;
    for (real, fake) in real_logits.iter().zip(fake_logits) {
        let real_term = real.affine(-1.0, 1.0)?.relu()?;
        let fake_term = fake.affine(1.0, 1.0)?.relu()?;
        let term = real_term.add(&fake_term)?;
        total = Some(match total {
            None => term,
            Some(t) => t.add(&term)?,
        });
    }
    Ok((total.unwrap() / real_logits.len() as f64)?)
}

/// Feature matching loss: per discriminator and internal layer, the L1 norm
/// of the feature difference normalized by the mean absolute real feature,
/// averaged over all N*M layers. Real features act as constants.
pub fn feature_matching(real_feats: &[Vec<Tensor>], fake_feats: &[Vec<Tensor>]) -> Result<Tensor> {
    if real_feats.is_empty() || real_feats.len() != fake_feats.len() {
        return Err(Error::domain("feature_matching needs matching real/fake feature sets"));
    }
    let mut total: Option<Tensor> = None;
    let mut n_layers = 0usize;
    for (reals, fakes) in real_feats.iter().zip(fake_feats) {
        if reals.len() != fakes.len() {
            return Err(Error::domain("feature_matching layer count mismatch"));
        }
        for (r, f) in reals.iter().zip(fakes) {
            let r = r.detach();
            let numer = r.sub(f)?.abs()?.sum_all()?;
            let denom = r.abs()?.mean_all()?.to_scalar_dtype(&r)?.max(COSINE_EPS);
            let term = (numer / denom)?;
            total = Some(match total {
                None => term,
                Some(t) => t.add(&term)?,
            });
            n_layers += 1;
        }
    }
    Ok((total.unwrap() / n_layers as f64)?)
}

trait ScalarOf {
    fn to_scalar_dtype(&self, like: &Tensor) -> Result<f64>;
}

impl ScalarOf for Tensor {
    fn to_scalar_dtype(&self, _like: &Tensor) -> Result<f64> {
        Ok(match self.dtype() {
            DType::F64 => self.to_scalar::<f64>()?,
            _ => self.to_scalar::<f32>()? as f64,
        })
    }
}

/// Weighted sum of the generator-side components.
pub fn total_generator(components: &LossBreakdown, weights: &LossWeights) -> f64 {
    weights.lambda_distill * components.distill
        + weights.lambda_t * components.t
        + weights.lambda_f * components.f
        + weights.lambda_g * components.g
        + weights.lambda_fm * components.fm
        + weights.lambda_w * components.w
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::Var;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dev() -> Device {
        Device::Cpu
    }

    fn scalar(t: &Tensor) -> f64 {
        match t.dtype() {
            DType::F64 => t.to_scalar::<f64>().unwrap(),
            _ => t.to_scalar::<f32>().unwrap() as f64,
        }
    }

    #[test]
    fn time_loss_hand_cases() {
        let x = Tensor::new(&[1.0f64, 1.0], &dev()).unwrap();
        let y = Tensor::new(&[0.0f64, 0.0], &dev()).unwrap();
        assert_eq!(scalar(&time_loss(&x, &x).unwrap()), 0.0);
        assert_eq!(scalar(&time_loss(&x, &y).unwrap()), 1.0);
        let x = Tensor::new(&[0.5f64, -0.5], &dev()).unwrap();
        let y = x.neg().unwrap();
        assert_eq!(scalar(&time_loss(&x, &y).unwrap()), 1.0);
        let short = Tensor::new(&[0.5f64], &dev()).unwrap();
        assert!(time_loss(&x, &short).is_err());
    }

    #[test]
    fn distill_loss_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<f64> = (0..24).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q = Tensor::from_vec(data, (6, 4), &dev()).unwrap();
        let same = distill_loss(&q, &q, DistillAxis::FeatureDim).unwrap();
        let expected = (1.0 + (-1.0f64).exp()).ln();
        assert!((scalar(&same) - expected).abs() < 1e-9, "{}", scalar(&same));

        let opposite = distill_loss(&q, &q.neg().unwrap(), DistillAxis::FeatureDim).unwrap();
        let expected = (1.0 + 1.0f64.exp()).ln();
        assert!((scalar(&opposite) - expected).abs() < 1e-9);

        // Orthogonal single-dimension case: cosine 0 -> ln 2.
        let a = Tensor::new(&[[1.0f64], [0.0]], &dev()).unwrap();
        let b = Tensor::new(&[[0.0f64], [1.0]], &dev()).unwrap();
        let orth = distill_loss(&a, &b, DistillAxis::FeatureDim).unwrap();
        assert!((scalar(&orth) - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn distill_loss_zero_column_gives_neutral_term() {
        let a = Tensor::new(&[[0.0f64], [0.0]], &dev()).unwrap();
        let b = Tensor::new(&[[1.0f64], [1.0]], &dev()).unwrap();
        let loss = distill_loss(&a, &b, DistillAxis::FeatureDim).unwrap();
        assert_eq!(scalar(&loss), 2.0f64.ln());
    }

    #[test]
    fn distill_loss_scale_invariance_and_axis_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let qd: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let sd: Vec<f64> = (0..15).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q = Tensor::from_vec(qd, (5, 3), &dev()).unwrap();
        let s = Tensor::from_vec(sd, (5, 3), &dev()).unwrap();
        let base = scalar(&distill_loss(&q, &s, DistillAxis::FeatureDim).unwrap());
        let scaled = scalar(
            &distill_loss(
                &q.affine(2.5, 0.0).unwrap(),
                &s.affine(0.3, 0.0).unwrap(),
                DistillAxis::FeatureDim,
            )
            .unwrap(),
        );
        assert!((base - scaled).abs() < 1e-10);

        let time = scalar(&distill_loss(&q, &s, DistillAxis::Time).unwrap());
        let qt = q.t().unwrap().contiguous().unwrap();
        let st = s.t().unwrap().contiguous().unwrap();
        let dual = scalar(&distill_loss(&qt, &st, DistillAxis::FeatureDim).unwrap());
        assert!((time - dual).abs() < 1e-12);

        // Per-dimension terms are bounded by the extreme cosines.
        let lo = (1.0 + (-1.0f64).exp()).ln();
        let hi = (1.0 + 1.0f64.exp()).ln();
        assert!(base >= lo - 1e-12 && base <= hi + 1e-12);
    }

    #[test]
    fn distill_loss_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for axis in [DistillAxis::FeatureDim, DistillAxis::Time] {
            let qd: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let sd: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
            let q = Var::from_tensor(&Tensor::from_vec(qd.clone(), (4, 3), &dev()).unwrap()).unwrap();
            let s = Tensor::from_vec(sd, (4, 3), &dev()).unwrap();
            let loss = distill_loss(q.as_tensor(), &s, axis).unwrap();
            let grads = loss.backward().unwrap();
            let analytic: Vec<f64> = grads
                .get(q.as_tensor())
                .unwrap()
                .flatten_all()
                .unwrap()
                .to_vec1::<f64>()
                .unwrap();
            let h = 1e-6;
            for i in 0..12 {
                let mut plus = qd.clone();
                plus[i] += h;
                let mut minus = qd.clone();
                minus[i] -= h;
                let lp = scalar(
                    &distill_loss(&Tensor::from_vec(plus, (4, 3), &dev()).unwrap(), &s, axis)
                        .unwrap(),
                );
                let lm = scalar(
                    &distill_loss(&Tensor::from_vec(minus, (4, 3), &dev()).unwrap(), &s, axis)
                        .unwrap(),
                );
                let numeric = (lp - lm) / (2.0 * h);
                let denom = numeric.abs().max(analytic[i].abs()).max(1e-8);
                assert!(
                    ((numeric - analytic[i]) / denom).abs() < 1e-4,
                    "axis {axis:?} component {i}: numeric {numeric} analytic {}",
                    analytic[i]
                );
            }
        }
    }

    #[test]
    fn combined_loss_cases() {
        assert_eq!(combined_loss(0.4, 0.6, 1.0, 1.0).unwrap(), 0.5);
        assert_eq!(combined_loss(0.7, 0.7, 1.0, 1.0).unwrap(), 0.7);
        assert_eq!(combined_loss(0.4, 0.6, 0.0, 1.0).unwrap(), 0.3);
        let weighted = combined_loss(0.4, 0.6, 0.8, 0.2).unwrap();
        assert!((weighted - 0.5 * (0.8 * 0.4 + 0.2 * 0.6)).abs() < 1e-15);
        assert!(combined_loss(0.4, 0.6, 0.0, 0.0).is_err());
    }

    #[test]
    fn hinge_losses_hand_cases() {
        let ones = vec![
            Tensor::new(1.0f64, &dev()).unwrap(),
            Tensor::new(1.0f64, &dev()).unwrap(),
        ];
        assert_eq!(scalar(&hinge_generator(&ones).unwrap()), 0.0);
        let mixed = vec![
            Tensor::new(0.0f64, &dev()).unwrap(),
            Tensor::new(2.0f64, &dev()).unwrap(),
        ];
        assert_eq!(scalar(&hinge_generator(&mixed).unwrap()), 0.5);

        let real = vec![Tensor::new(1.0f64, &dev()).unwrap()];
        let fake = vec![Tensor::new(-1.0f64, &dev()).unwrap()];
        assert_eq!(scalar(&hinge_discriminator(&real, &fake).unwrap()), 0.0);
        let real = vec![Tensor::new(0.0f64, &dev()).unwrap()];
        let fake = vec![Tensor::new(0.0f64, &dev()).unwrap()];
        assert_eq!(scalar(&hinge_discriminator(&real, &fake).unwrap()), 2.0);
        let real = vec![Tensor::new(2.0f64, &dev()).unwrap()];
        let fake = vec![Tensor::new(-2.0f64, &dev()).unwrap()];
        assert_eq!(scalar(&hinge_discriminator(&real, &fake).unwrap()), 0.0);
    }

    #[test]
    fn feature_matching_hand_case_and_scale_invariance() {
        let real = vec![vec![Tensor::new(&[2.0f64, 2.0], &dev()).unwrap()]];
        let fake = vec![vec![Tensor::new(&[0.0f64, 0.0], &dev()).unwrap()]];
        assert_eq!(scalar(&feature_matching(&real, &fake).unwrap()), 2.0);

        let identical = feature_matching(&real, &real).unwrap();
        assert_eq!(scalar(&identical), 0.0);

        let real_scaled = vec![vec![real[0][0].affine(3.0, 0.0).unwrap()]];
        let fake_scaled = vec![vec![fake[0][0].affine(3.0, 0.0).unwrap()]];
        let a = scalar(&feature_matching(&real, &fake).unwrap());
        let b = scalar(&feature_matching(&real_scaled, &fake_scaled).unwrap());
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn total_generator_accounting() {
        let zero = LossBreakdown::default();
        assert_eq!(total_generator(&zero, &LossWeights::from_scale(1.0)), 0.0);
        let ones = LossBreakdown { t: 1.0, f: 1.0, g: 1.0, d: 0.0, fm: 1.0, w: 1.0, distill: 1.0, total: 0.0 };
        let total = total_generator(&ones, &LossWeights::from_scale(1.0));
        assert!((total - 7.61).abs() < 1e-12, "{total}");
        // Doubling X doubles distill/t/f/w but not g/fm.
        let doubled = total_generator(&ones, &LossWeights::from_scale(2.0));
        assert!((doubled - (2.0 * (1.0 + 4.15 + 0.375 + 0.085) + 2.0)).abs() < 1e-12);
    }

    #[test]
    fn mel_loss_basic_properties() {
        let mel = MelLoss::with_scales(16_000, 5..=8, 64, DType::F64, &dev()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 400;
        let noise: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let x = Tensor::from_vec(noise, (1, 1, n), &dev()).unwrap();
        let silence = Tensor::zeros((1, 1, n), DType::F64, &dev()).unwrap();

        assert_eq!(scalar(&mel.compute(&x, &x).unwrap()), 0.0);

        let loud = scalar(&mel.compute(&x, &silence).unwrap());
        assert!(loud > 0.0);
        let quiet_x = x.affine(0.25, 0.0).unwrap();
        let quiet = scalar(&mel.compute(&quiet_x, &silence).unwrap());
        assert!(quiet < loud, "quiet {quiet} should be below loud {loud}");

        // Symmetry in the two arguments.
        let ab = scalar(&mel.compute(&x, &quiet_x).unwrap());
        let ba = scalar(&mel.compute(&quiet_x, &x).unwrap());
        assert!((ab - ba).abs() < 1e-9);
    }

    #[test]
    fn mel_loss_skips_oversized_windows() {
        let mel = MelLoss::new(16_000, DType::F64, &dev()).unwrap();
        // 100 samples: every window 32..2048 except 32 and 64 is skipped.
        let x = Tensor::zeros((1, 1, 100), DType::F64, &dev()).unwrap();
        let y = Tensor::ones((1, 1, 100), DType::F64, &dev()).unwrap();
        let loss = scalar(&mel.compute(&x, &y).unwrap());
        assert!(loss.is_finite() && loss > 0.0);
    }
}
