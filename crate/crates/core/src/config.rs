//! Configuration types shared across the codec, trainer, and CLI.
//!
//! Training configs round-trip through a flat `key=value` text format; the
//! canonical serialization doubles as the input to the config hash recorded
//! in checkpoints.

use crate::error::{Error, Result};

/// Codec topology and quantizer sizing.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecConfig {
    /// Channels of the first encoder convolution; doubled at each downsampling stage.
    pub base_channels: usize,
    /// Number of residual downsampling blocks. Must match `strides.len()`.
    pub n_blocks: usize,
    /// Per-block downsampling factors, encoder order.
    pub strides: Vec<usize>,
    /// Dimension of the latent frames produced by the encoder.
    pub latent_dim: usize,
    pub sample_rate: u32,
    pub codebook_size: usize,
    /// Number of residual quantizer layers (K).
    pub n_quantizers: usize,
}

impl CodecConfig {
    /// Full-size configuration: C=32, B=4, S=(2,4,5,8), 16 kHz, 1024x8 codebooks.
    pub fn paper() -> Self {
        Self {
            base_channels: 32,
            n_blocks: 4,
            strides: vec![2, 4, 5, 8],
            latent_dim: 1024,
            sample_rate: 16_000,
            codebook_size: 1024,
            n_quantizers: 8,
        }
    }

    /// Desk-scale configuration with the same stride schedule and codebook
    /// sizing but narrow channels, small latents.
    pub fn toy() -> Self {
        Self {
            base_channels: 8,
            n_blocks: 4,
            strides: vec![2, 4, 5, 8],
            latent_dim: 32,
            sample_rate: 16_000,
            codebook_size: 1024,
            n_quantizers: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_blocks != self.strides.len() {
            return Err(Error::config(format!(
                "n_blocks ({}) must equal the number of strides ({})",
                self.n_blocks,
                self.strides.len()
            )));
        }
        if self.strides.iter().any(|&s| s < 1) {
            return Err(Error::config("all strides must be >= 1"));
        }
        if self.codebook_size < 2 {
            return Err(Error::config("codebook_size must be >= 2"));
        }
        if self.n_quantizers < 1 {
            return Err(Error::config("n_quantizers must be >= 1"));
        }
        let hop = self.hop();
        if hop == 0 || self.sample_rate as usize % hop != 0 {
            return Err(Error::config(format!(
                "sample_rate {} must be divisible by the stride product {}",
                self.sample_rate, hop
            )));
        }
        if self.latent_dim == 0 || self.base_channels == 0 {
            return Err(Error::config("latent_dim and base_channels must be positive"));
        }
        Ok(())
    }

    /// Product of the strides: samples per latent frame.
    pub fn hop(&self) -> usize {
        self.strides.iter().product()
    }

    /// Latent frames per second.
    pub fn frame_rate(&self) -> u32 {
        self.sample_rate / self.hop() as u32
    }
}

/// EMA codebook maintenance knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct RvqOptions {
    /// EMA decay for matched codebook entries.
    pub decay: f64,
    /// Entries whose EMA cluster size drops below this are replaced from the batch.
    pub dead_threshold: f64,
    /// Denominator guard in the EMA normalization.
    pub eps: f64,
}

impl Default for RvqOptions {
    fn default() -> Self {
        Self { decay: 0.99, dead_threshold: 1.0, eps: 1e-5 }
    }
}

/// Which RVQ output a distillation teacher attaches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RvqSelection {
    /// First-layer quantized output (RVQ-1).
    First,
    /// Mean of the quantized outputs over all active layers (RVQ-1:K).
    AverageAll,
    /// Last-layer quantized output (RVQ-K).
    Last,
}

impl RvqSelection {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "first" | "rvq-1" => Ok(Self::First),
            "average" | "rvq-1:8" => Ok(Self::AverageAll),
            "last" | "rvq-8" => Ok(Self::Last),
            _ => Err(Error::config(format!("unknown rvq selection `{s}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::First => "first",
            Self::AverageAll => "average",
            Self::Last => "last",
        }
    }
}

/// Axis along which the distillation cosine similarity is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistillAxis {
    /// One cosine per feature dimension, across time steps.
    FeatureDim,
    /// One cosine per time step, across feature dimensions.
    Time,
}

impl DistillAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "feature_dim" | "d" => Ok(Self::FeatureDim),
            "time" | "t" => Ok(Self::Time),
            _ => Err(Error::config(format!("unknown distill axis `{s}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::FeatureDim => "feature_dim",
            Self::Time => "time",
        }
    }
}

/// How layered teacher dumps are reduced to one vector per token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerPolicy {
    AverageAll,
    Last,
    /// 9th transformer block, 1-based, embedding layer excluded.
    Ninth,
}

impl LayerPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "average_all" | "average" => Ok(Self::AverageAll),
            "last" => Ok(Self::Last),
            "ninth" => Ok(Self::Ninth),
            _ => Err(Error::config(format!("unknown layer policy `{s}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::AverageAll => "average_all",
            Self::Last => "last",
            Self::Ninth => "ninth",
        }
    }
}

/// Distillation variant selecting which teachers contribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistillMode {
    /// No distillation (baseline codec).
    None,
    /// LM-guided only.
    Lm,
    /// SM-guided only.
    Sm,
    /// Combined LM and SM.
    Combined,
    /// Sequence-level token repeated over frames, LM side only.
    Cls,
    /// Static word-embedding targets, LM side only.
    WordEmbedding,
}

impl DistillMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "none" | "baseline" => Ok(Self::None),
            "lm" => Ok(Self::Lm),
            "sm" => Ok(Self::Sm),
            "combined" | "lm+sm" => Ok(Self::Combined),
            "cls" => Ok(Self::Cls),
            "word_embedding" => Ok(Self::WordEmbedding),
            _ => Err(Error::config(format!("unknown distill mode `{s}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Lm => "lm",
            Self::Sm => "sm",
            Self::Combined => "combined",
            Self::Cls => "cls",
            Self::WordEmbedding => "word_embedding",
        }
    }

    pub fn uses_lm(&self) -> bool {
        matches!(self, Self::Lm | Self::Combined | Self::Cls | Self::WordEmbedding)
    }

    pub fn uses_sm(&self) -> bool {
        matches!(self, Self::Sm | Self::Combined)
    }
}

/// Distillation wiring: teachers, RVQ attach points, axis, and mixing weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillTarget {
    pub mode: DistillMode,
    pub lm_selection: RvqSelection,
    pub sm_selection: RvqSelection,
    pub axis: DistillAxis,
    pub w_lm: f64,
    pub w_sm: f64,
    pub layer_policy: LayerPolicy,
    /// Teacher embedding dimension (shared by LM and SM caches).
    pub teacher_dim: usize,
}

impl Default for DistillTarget {
    fn default() -> Self {
        Self {
            mode: DistillMode::Combined,
            lm_selection: RvqSelection::First,
            sm_selection: RvqSelection::AverageAll,
            axis: DistillAxis::FeatureDim,
            w_lm: 1.0,
            w_sm: 1.0,
            layer_policy: LayerPolicy::AverageAll,
            teacher_dim: 96,
        }
    }
}

impl DistillTarget {
    pub fn validate(&self) -> Result<()> {
        if self.w_lm < 0.0 || self.w_sm < 0.0 {
            return Err(Error::config("distill weights must be nonnegative"));
        }
        if self.mode == DistillMode::Combined && self.w_lm == 0.0 && self.w_sm == 0.0 {
            return Err(Error::config("combined distillation requires a nonzero weight"));
        }
        if self.teacher_dim == 0 {
            return Err(Error::config("teacher_dim must be positive"));
        }
        Ok(())
    }
}

/// Generator loss weighting; defaults follow the proportional scheme
/// distill=X, t=4.15X, f=0.375X, w=0.085X with g and fm fixed at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights {
    pub scale: f64,
    pub lambda_distill: f64,
    pub lambda_t: f64,
    pub lambda_f: f64,
    pub lambda_g: f64,
    pub lambda_fm: f64,
    pub lambda_w: f64,
}

impl LossWeights {
    pub fn from_scale(x: f64) -> Self {
        Self {
            scale: x,
            lambda_distill: x,
            lambda_t: 4.15 * x,
            lambda_f: 0.375 * x,
            lambda_g: 1.0,
            lambda_fm: 1.0,
            lambda_w: 0.085 * x,
        }
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self::from_scale(1.0)
    }
}

/// Where teacher embeddings come from during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeacherMode {
    /// Deterministic seeded projection of mel features, generated on the fly.
    Synthetic,
    /// Cached embedding files referenced from the manifest.
    Cached,
}

impl TeacherMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "synthetic" => Ok(Self::Synthetic),
            "cached" => Ok(Self::Cached),
            _ => Err(Error::config(format!("unknown teacher mode `{s}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Synthetic => "synthetic",
            Self::Cached => "cached",
        }
    }
}

/// Discriminator ensemble sizing.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscConfig {
    pub msd_scales: Vec<usize>,
    pub mpd_periods: Vec<usize>,
    pub stft_windows: Vec<usize>,
    /// Base channel width shared by the three discriminator families.
    pub channels: usize,
}

impl Default for DiscConfig {
    fn default() -> Self {
        Self {
            msd_scales: vec![1, 2, 4],
            mpd_periods: vec![2, 3, 5, 7, 11],
            stft_windows: vec![512, 1024, 2048],
            channels: 8,
        }
    }
}

/// Full training configuration for the codec trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub codec: CodecConfig,
    pub rvq: RvqOptions,
    pub disc: DiscConfig,
    pub distill: DistillTarget,
    pub weights: LossWeights,
    pub teacher_mode: TeacherMode,
    pub epochs: usize,
    pub batch_size: usize,
    pub crop_seconds: f64,
    pub learning_rate: f64,
    /// Per-epoch exponential multiplier on the learning rate.
    pub lr_decay: f64,
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            codec: CodecConfig::toy(),
            rvq: RvqOptions::default(),
            disc: DiscConfig::default(),
            distill: DistillTarget::default(),
            weights: LossWeights::default(),
            teacher_mode: TeacherMode::Synthetic,
            epochs: 1,
            batch_size: 4,
            crop_seconds: 3.0,
            learning_rate: 1e-4,
            lr_decay: 0.98,
            grad_clip: 10.0,
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.codec.validate()?;
        self.distill.validate()?;
        let crop = self.crop_samples();
        if crop == 0 || crop % self.codec.hop() != 0 {
            return Err(Error::config(format!(
                "crop of {} samples is not a multiple of the stride product {}",
                crop,
                self.codec.hop()
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be positive"));
        }
        if !(self.rvq.decay > 0.0 && self.rvq.decay < 1.0) {
            return Err(Error::config("rvq decay must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn crop_samples(&self) -> usize {
        (self.crop_seconds * self.codec.sample_rate as f64).round() as usize
    }

    /// Canonical flat key=value serialization. Keys are emitted in a fixed
    /// order so the text doubles as the config-hash input.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let kv = |s: &mut String, k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        kv(&mut s, "codec.base_channels", self.codec.base_channels.to_string());
        kv(&mut s, "codec.n_blocks", self.codec.n_blocks.to_string());
        kv(
            &mut s,
            "codec.strides",
            self.codec.strides.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
        );
        kv(&mut s, "codec.latent_dim", self.codec.latent_dim.to_string());
        kv(&mut s, "codec.sample_rate", self.codec.sample_rate.to_string());
        kv(&mut s, "codec.codebook_size", self.codec.codebook_size.to_string());
        kv(&mut s, "codec.n_quantizers", self.codec.n_quantizers.to_string());
        kv(&mut s, "rvq.decay", fmt_f64(self.rvq.decay));
        kv(&mut s, "rvq.dead_threshold", fmt_f64(self.rvq.dead_threshold));
        kv(&mut s, "rvq.eps", fmt_f64(self.rvq.eps));
        kv(
            &mut s,
            "disc.msd_scales",
            self.disc.msd_scales.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
        );
        kv(
            &mut s,
            "disc.mpd_periods",
            self.disc.mpd_periods.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
        );
        kv(
            &mut s,
            "disc.stft_windows",
            self.disc.stft_windows.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","),
        );
        kv(&mut s, "disc.channels", self.disc.channels.to_string());
        kv(&mut s, "distill.mode", self.distill.mode.as_str().to_string());
        kv(&mut s, "distill.lm_selection", self.distill.lm_selection.as_str().to_string());
        kv(&mut s, "distill.sm_selection", self.distill.sm_selection.as_str().to_string());
        kv(&mut s, "distill.axis", self.distill.axis.as_str().to_string());
        kv(&mut s, "distill.w_lm", fmt_f64(self.distill.w_lm));
        kv(&mut s, "distill.w_sm", fmt_f64(self.distill.w_sm));
        kv(&mut s, "distill.layer_policy", self.distill.layer_policy.as_str().to_string());
        kv(&mut s, "distill.teacher_dim", self.distill.teacher_dim.to_string());
        kv(&mut s, "weights.scale", fmt_f64(self.weights.scale));
        kv(&mut s, "weights.lambda_distill", fmt_f64(self.weights.lambda_distill));
        kv(&mut s, "weights.lambda_t", fmt_f64(self.weights.lambda_t));
        kv(&mut s, "weights.lambda_f", fmt_f64(self.weights.lambda_f));
        kv(&mut s, "weights.lambda_g", fmt_f64(self.weights.lambda_g));
        kv(&mut s, "weights.lambda_fm", fmt_f64(self.weights.lambda_fm));
        kv(&mut s, "weights.lambda_w", fmt_f64(self.weights.lambda_w));
        kv(&mut s, "teacher_mode", self.teacher_mode.as_str().to_string());
        kv(&mut s, "epochs", self.epochs.to_string());
        kv(&mut s, "batch_size", self.batch_size.to_string());
        kv(&mut s, "crop_seconds", fmt_f64(self.crop_seconds));
        kv(&mut s, "learning_rate", fmt_f64(self.learning_rate));
        kv(&mut s, "lr_decay", fmt_f64(self.lr_decay));
        kv(&mut s, "grad_clip", fmt_f64(self.grad_clip));
        kv(&mut s, "seed", self.seed.to_string());
        s
    }

    /// Parse a flat key=value config, starting from defaults. Blank lines and
    /// `#` comments are allowed; unknown keys are rejected.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key=value", lineno + 1)))?;
            cfg.set_key(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply a single key=value override.
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_usize = |v: &str| {
            v.parse::<usize>().map_err(|_| Error::config(format!("invalid integer `{v}`")))
        };
        let parse_f64 =
            |v: &str| v.parse::<f64>().map_err(|_| Error::config(format!("invalid number `{v}`")));
        let parse_list = |v: &str| -> Result<Vec<usize>> {
            v.split(',').map(|x| parse_usize(x.trim())).collect()
        };
        match key {
            "codec.base_channels" => self.codec.base_channels = parse_usize(value)?,
            "codec.n_blocks" => self.codec.n_blocks = parse_usize(value)?,
            "codec.strides" => self.codec.strides = parse_list(value)?,
            "codec.latent_dim" => self.codec.latent_dim = parse_usize(value)?,
            "codec.sample_rate" => {
                self.codec.sample_rate = parse_usize(value)? as u32;
            }
            "codec.codebook_size" => self.codec.codebook_size = parse_usize(value)?,
            "codec.n_quantizers" => self.codec.n_quantizers = parse_usize(value)?,
            "rvq.decay" => self.rvq.decay = parse_f64(value)?,
            "rvq.dead_threshold" => self.rvq.dead_threshold = parse_f64(value)?,
            "rvq.eps" => self.rvq.eps = parse_f64(value)?,
            "disc.msd_scales" => self.disc.msd_scales = parse_list(value)?,
            "disc.mpd_periods" => self.disc.mpd_periods = parse_list(value)?,
            "disc.stft_windows" => self.disc.stft_windows = parse_list(value)?,
            "disc.channels" => self.disc.channels = parse_usize(value)?,
            "distill.mode" => self.distill.mode = DistillMode::parse(value)?,
            "distill.lm_selection" => self.distill.lm_selection = RvqSelection::parse(value)?,
            "distill.sm_selection" => self.distill.sm_selection = RvqSelection::parse(value)?,
            "distill.axis" => self.distill.axis = DistillAxis::parse(value)?,
            "distill.w_lm" => self.distill.w_lm = parse_f64(value)?,
            "distill.w_sm" => self.distill.w_sm = parse_f64(value)?,
            "distill.layer_policy" => self.distill.layer_policy = LayerPolicy::parse(value)?,
            "distill.teacher_dim" => self.distill.teacher_dim = parse_usize(value)?,
            "weights.scale" => self.weights = LossWeights::from_scale(parse_f64(value)?),
            "weights.lambda_distill" => self.weights.lambda_distill = parse_f64(value)?,
            "weights.lambda_t" => self.weights.lambda_t = parse_f64(value)?,
            "weights.lambda_f" => self.weights.lambda_f = parse_f64(value)?,
            "weights.lambda_g" => self.weights.lambda_g = parse_f64(value)?,
            "weights.lambda_fm" => self.weights.lambda_fm = parse_f64(value)?,
            "weights.lambda_w" => self.weights.lambda_w = parse_f64(value)?,
            "teacher_mode" => self.teacher_mode = TeacherMode::parse(value)?,
            "epochs" => self.epochs = parse_usize(value)?,
            "batch_size" => self.batch_size = parse_usize(value)?,
            "crop_seconds" => self.crop_seconds = parse_f64(value)?,
            "learning_rate" => self.learning_rate = parse_f64(value)?,
            "lr_decay" => self.lr_decay = parse_f64(value)?,
            "grad_clip" => self.grad_clip = parse_f64(value)?,
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::config(format!("invalid seed `{value}`")))?;
            }
            _ => return Err(Error::config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// FNV-1a hash of the canonical serialization; distinguishes ablation
    /// switches in checkpoints and logs.
    pub fn config_hash(&self) -> u64 {
        fnv1a(self.to_kv_string().as_bytes())
    }
}

fn fmt_f64(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x1000_0000_01b3);
    }
    hash
}

/// Toy transformer sizing for the codec language model.
#[derive(Debug, Clone, PartialEq)]
pub struct TtsConfig {
    pub dim: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub ff_dim: usize,
    /// Maximum combined sequence length (phonemes + codes).
    pub max_len: usize,
    pub learning_rate: f64,
    pub steps: usize,
    pub seed: u64,
    /// Frames taken from the start of each utterance as the acoustic prompt
    /// during NAR training. May be zero.
    pub prompt_frames: usize,
}

impl Default for TtsConfig {
    fn default() -> Self {
        Self {
            dim: 128,
            n_layers: 2,
            n_heads: 4,
            ff_dim: 512,
            max_len: 512,
            learning_rate: 1e-3,
            steps: 200,
            seed: 42,
            prompt_frames: 0,
        }
    }
}

impl TtsConfig {
    pub fn set_key(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_usize = |v: &str| {
            v.parse::<usize>().map_err(|_| Error::config(format!("invalid integer `{v}`")))
        };
        match key {
            "tts.dim" => self.dim = parse_usize(value)?,
            "tts.n_layers" => self.n_layers = parse_usize(value)?,
            "tts.n_heads" => self.n_heads = parse_usize(value)?,
            "tts.ff_dim" => self.ff_dim = parse_usize(value)?,
            "tts.max_len" => self.max_len = parse_usize(value)?,
            "tts.learning_rate" => {
                self.learning_rate = value
                    .parse::<f64>()
                    .map_err(|_| Error::config(format!("invalid number `{value}`")))?;
            }
            "tts.steps" => self.steps = parse_usize(value)?,
            "tts.seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::config(format!("invalid seed `{value}`")))?;
            }
            "tts.prompt_frames" => self.prompt_frames = parse_usize(value)?,
            _ => return Err(Error::config(format!("unknown tts config key `{key}`"))),
        }
        Ok(())
    }
}
