//! Teacher-representation ingestion and alignment for the distillation
//! losses: cached embedding files, layer reduction policies, sequence-length
//! alignment, the learnable projection, and the deterministic synthetic
//! teacher used for offline runs.

use std::io::{Read, Write};
use std::path::Path;

use candle_core::{DType, Device, Tensor};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{fnv1a, LayerPolicy};
use crate::error::{Error, Result};
use crate::losses::MelLoss;
use crate::nn::{Linear, VarRegistry};

/// What a teacher embedding represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modality {
    /// Language-model hidden states per token.
    Contextual,
    /// Speech-model hidden states per frame.
    Semantic,
    /// Sequence-summary token, one vector per utterance.
    Cls,
    /// Static word embeddings, no context.
    StaticWord,
}

impl Modality {
    fn code(&self) -> u32 {
        match self {
            Self::Contextual => 0,
            Self::Semantic => 1,
            Self::Cls => 2,
            Self::StaticWord => 3,
        }
    }

    fn from_code(code: u32) -> Result<Self> {
        match code {
            0 => Ok(Self::Contextual),
            1 => Ok(Self::Semantic),
            2 => Ok(Self::Cls),
            3 => Ok(Self::StaticWord),
            _ => Err(Error::data(format!("unknown teacher modality code {code}"))),
        }
    }
}

/// Layer-reduced teacher hidden states: `(n, dim)` row-major.
#[derive(Debug, Clone)]
pub struct TeacherEmbedding {
    pub vectors: Vec<f32>,
    pub n: usize,
    pub dim: usize,
    pub modality: Modality,
}

impl TeacherEmbedding {
    pub fn new(vectors: Vec<f32>, n: usize, dim: usize, modality: Modality) -> Result<Self> {
        if n == 0 || dim == 0 || vectors.len() != n * dim {
            return Err(Error::data("teacher embedding shape mismatch"));
        }
        if vectors.iter().any(|x| !x.is_finite()) {
            return Err(Error::data("teacher embedding contains non-finite values"));
        }
        if modality == Modality::Cls && n != 1 {
            return Err(Error::data("CLS teacher must hold a single vector"));
        }
        Ok(Self { vectors, n, dim, modality })
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    /// Mean-reduce all rows to a single CLS-style summary vector.
    pub fn to_cls(&self) -> Result<TeacherEmbedding> {
        let mut mean = vec![0.0f32; self.dim];
        for i in 0..self.n {
            for (m, v) in mean.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        let inv = 1.0 / self.n as f32;
        for m in &mut mean {
            *m *= inv;
        }
        TeacherEmbedding::new(mean, 1, self.dim, Modality::Cls)
    }

    /// Align to the quantized sequence length: pad the tail with zero rows,
    /// truncate extra rows, or repeat the CLS vector `t_prime` times. The
    /// result is `(t_prime, dim)` row-major.
    pub fn align(&self, t_prime: usize) -> Result<Vec<f32>> {
        if t_prime == 0 {
            return Err(Error::domain("alignment target length must be >= 1"));
        }
        let mut out = vec![0.0f32; t_prime * self.dim];
        match self.modality {
            Modality::Cls => {
                for t in 0..t_prime {
                    out[t * self.dim..(t + 1) * self.dim].copy_from_slice(self.row(0));
                }
            }
            _ => {
                let copy = self.n.min(t_prime);
                out[..copy * self.dim].copy_from_slice(&self.vectors[..copy * self.dim]);
            }
        }
        Ok(out)
    }

    pub fn align_tensor(&self, t_prime: usize, dtype: DType, device: &Device) -> Result<Tensor> {
        let data = self.align(t_prime)?;
        Ok(Tensor::from_vec(data, (t_prime, self.dim), device)?.to_dtype(dtype)?)
    }
}

const TEACHER_MAGIC: &[u8; 4] = b"DMTE";
const TEACHER_VERSION: u32 = 1;

/// Write a teacher cache: header (magic, version, modality, L, n, dim,
/// dtype=0 for f32) followed by the row-major f32 payload. `layers = 0`
/// marks a pre-averaged dump with an `(n, dim)` payload; otherwise the
/// payload is `(layers, n, dim)`.
pub fn write_teacher_file(
    path: &Path,
    modality: Modality,
    layers: usize,
    n: usize,
    dim: usize,
    data: &[f32],
) -> Result<()> {
    let expected = if layers == 0 { n * dim } else { layers * n * dim };
    if data.len() != expected {
        return Err(Error::data("teacher payload does not match declared shape"));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(TEACHER_MAGIC)?;
    for v in [TEACHER_VERSION, modality.code(), layers as u32, n as u32, dim as u32, 0u32] {
        f.write_all(&v.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(data.len() * 4);
    for x in data {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    f.write_all(&buf)?;
    Ok(())
}

/// Load a teacher cache and apply the layer policy. Pre-averaged dumps only
/// support `average_all`; layered dumps are reduced to `(n, dim)`.
pub fn load_teacher(
    path: &Path,
    expected_modality: Modality,
    layer_policy: LayerPolicy,
) -> Result<TeacherEmbedding> {
    let mut f = std::fs::File::open(path)?;
    let mut header = [0u8; 28];
    f.read_exact(&mut header)?;
    if &header[0..4] != TEACHER_MAGIC {
        return Err(Error::data(format!("{}: not a teacher cache", path.display())));
    }
    let word = |i: usize| u32::from_le_bytes(header[4 + i * 4..8 + i * 4].try_into().unwrap());
    let version = word(0);
    if version != TEACHER_VERSION {
        return Err(Error::data(format!("{}: unsupported version {version}", path.display())));
    }
    let modality = Modality::from_code(word(1))?;
    if modality != expected_modality {
        return Err(Error::config(format!(
            "{}: teacher modality {:?} does not match requested {:?}",
            path.display(),
            modality,
            expected_modality
        )));
    }
    let layers = word(2) as usize;
    let n = word(3) as usize;
    let dim = word(4) as usize;
    let dtype = word(5);
    if dtype != 0 {
        return Err(Error::data(format!("{}: unsupported dtype code {dtype}", path.display())));
    }
    if n == 0 || dim == 0 {
        return Err(Error::data(format!("{}: empty teacher", path.display())));
    }
    let n_values = if layers == 0 { n * dim } else { layers * n * dim };
    let mut buf = vec![0u8; n_values * 4];
    f.read_exact(&mut buf)?;
    let raw: Vec<f32> = buf
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::data(format!("{}: non-finite teacher values", path.display())));
    }

    let reduced: Vec<f32> = if layers == 0 {
        match layer_policy {
            LayerPolicy::AverageAll => raw,
            _ => {
                return Err(Error::config(format!(
                    "{}: pre-averaged dump cannot satisfy layer policy {:?}",
                    path.display(),
                    layer_policy
                )))
            }
        }
    } else {
        match layer_policy {
            LayerPolicy::AverageAll => {
                let mut out = vec![0.0f32; n * dim];
                for l in 0..layers {
                    let base = l * n * dim;
                    for i in 0..n * dim {
                        out[i] += raw[base + i];
                    }
                }
                let inv = 1.0 / layers as f32;
                for v in &mut out {
                    *v *= inv;
                }
                out
            }
            LayerPolicy::Last => raw[(layers - 1) * n * dim..layers * n * dim].to_vec(),
            LayerPolicy::Ninth => {
                if layers < 9 {
                    return Err(Error::config(format!(
                        "{}: layer policy `ninth` needs >= 9 layers, dump has {layers}",
                        path.display()
                    )));
                }
                // 1-based transformer block counting.
                raw[8 * n * dim..9 * n * dim].to_vec()
            }
        }
    };
    TeacherEmbedding::new(reduced, n, dim, modality)
}

/// Trainable linear projection mapping quantized features into the teacher
/// space: q' = W q with W of shape (teacher_dim, latent_dim). Shared across
/// RVQ layers for one teacher.
pub struct ProjectionW {
    linear: Linear,
}

impl ProjectionW {
    pub fn new(
        reg: &mut VarRegistry,
        name: &str,
        latent_dim: usize,
        teacher_dim: usize,
    ) -> Result<Self> {
        Ok(Self { linear: Linear::new_no_bias(reg, name, latent_dim, teacher_dim)? })
    }

    /// q: (t_prime, latent_dim) -> (t_prime, teacher_dim)
    pub fn project(&self, q: &Tensor) -> Result<Tensor> {
        self.linear.forward(q)
    }
}

/// Deterministic synthetic teachers: a seeded random projection of 64-bin
/// log-mel features. The projection matrix is fixed per (seed, modality), so
/// the same clip always produces the same teacher.
pub struct SyntheticTeacher {
    mel: MelLoss,
    teacher_dim: usize,
    seed: u64,
}

impl SyntheticTeacher {
    pub fn new(sample_rate: u32, teacher_dim: usize, seed: u64) -> Result<Self> {
        // One mid-size window; hop 256 gives a frame count close to but not
        // equal to the quantizer's, exercising the alignment paths.
        let mel = MelLoss::with_scales(sample_rate, 10..=10, 64, DType::F32, &Device::Cpu)?;
        Ok(Self { mel, teacher_dim, seed })
    }

    fn projection(&self, modality: Modality) -> Vec<f32> {
        let tag = fnv1a(format!("teacher-{}", modality.code()).as_bytes());
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ tag);
        let bound = (1.0f32 / 64.0).sqrt();
        (0..64 * self.teacher_dim).map(|_| rng.random_range(-bound..bound)).collect()
    }

    fn mel_frames(&self, samples: &[f32]) -> Result<(Vec<f32>, usize)> {
        let window = self.mel.scale_window(0);
        let mut padded = samples.to_vec();
        if padded.len() < window {
            padded.resize(window, 0.0);
        }
        let n = padded.len();
        let x = Tensor::from_vec(padded, (1, 1, n), &Device::Cpu)?;
        let mel = self.mel.log_mel_single(0, &x)?.squeeze(0)?;
        let (n_mels, frames) = mel.dims2()?;
        debug_assert_eq!(n_mels, 64);
        // (n_mels, frames) -> (frames, n_mels) row-major
        let flat = mel.t()?.contiguous()?.flatten_all()?.to_vec1::<f32>()?;
        Ok((flat, frames))
    }

    fn project_rows(&self, rows: &[f32], n: usize, modality: Modality) -> Vec<f32> {
        let w = self.projection(modality);
        let d = self.teacher_dim;
        let mut out = vec![0.0f32; n * d];
        for i in 0..n {
            let row = &rows[i * 64..(i + 1) * 64];
            for j in 0..d {
                let mut acc = 0.0f32;
                for (k, r) in row.iter().enumerate() {
                    acc += r * w[k * d + j];
                }
                out[i * d + j] = acc;
            }
        }
        out
    }

    /// Frame-level semantic teacher: one row per mel frame.
    pub fn semantic(&self, samples: &[f32]) -> Result<TeacherEmbedding> {
        let (rows, n) = self.mel_frames(samples)?;
        let data = self.project_rows(&rows, n, Modality::Semantic);
        TeacherEmbedding::new(data, n, self.teacher_dim, Modality::Semantic)
    }

    /// Token-level contextual teacher: mel frames are pooled into one segment
    /// per transcript word (a single segment when the transcript is empty).
    pub fn contextual(&self, samples: &[f32], transcript: &str) -> Result<TeacherEmbedding> {
        let (rows, n_frames) = self.mel_frames(samples)?;
        let n_words = crate::eval::normalize_words(transcript).len().max(1).min(n_frames);
        let mut pooled = vec![0.0f32; n_words * 64];
        for w in 0..n_words {
            let start = w * n_frames / n_words;
            let end = ((w + 1) * n_frames / n_words).max(start + 1);
            for f in start..end {
                for k in 0..64 {
                    pooled[w * 64 + k] += rows[f * 64 + k];
                }
            }
            let inv = 1.0 / (end - start) as f32;
            for k in 0..64 {
                pooled[w * 64 + k] *= inv;
            }
        }
        let data = self.project_rows(&pooled, n_words, Modality::Contextual);
        TeacherEmbedding::new(data, n_words, self.teacher_dim, Modality::Contextual)
    }

    /// Static word-embedding teacher: one row per word, indexed purely by the
    /// word identity (no acoustic or sentence context).
    pub fn static_word(&self, transcript: &str) -> Result<TeacherEmbedding> {
        let words = crate::eval::normalize_words(transcript);
        let n = words.len().max(1);
        let d = self.teacher_dim;
        let mut data = vec![0.0f32; n * d];
        if words.is_empty() {
            return TeacherEmbedding::new(data, n, d, Modality::StaticWord);
        }
        let bound = (1.0f32 / d as f32).sqrt();
        for (i, word) in words.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ fnv1a(word.as_bytes()));
            for j in 0..d {
                data[i * d + j] = rng.random_range(-bound..bound);
            }
        }
        TeacherEmbedding::new(data, n, d, Modality::StaticWord)
    }
}
