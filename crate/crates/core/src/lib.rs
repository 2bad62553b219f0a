//! DM-Codec: an RVQ-GAN speech tokenizer with language-model and
//! speech-model guided distillation, its training objectives, a toy codec
//! language model for TTS, and evaluation tooling (WER/WIL and
//! stochastic-dominance significance analysis).

pub mod audio;
pub mod codec;
pub mod config;
pub mod disc;
pub mod distill;
pub mod error;
pub mod eval;
pub mod losses;
pub mod nn;
pub mod optim;
pub mod rvq;

pub use error::{Error, Result};
