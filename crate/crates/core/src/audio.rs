//! Mono waveform container and WAV file I/O.

use std::path::Path;

use crate::error::{Error, Result};

/// A mono waveform at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::domain("sample_rate must be positive"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::data("waveform contains non-finite samples"));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Read a mono PCM16 or float32 WAV. The file must already be at
    /// `expected_rate`; resampling is rejected.
    pub fn read_wav(path: &Path, expected_rate: u32) -> Result<Self> {
        let mut reader = hound::WavReader::open(path)?;
        let spec = reader.spec();
        if spec.channels != 1 {
            return Err(Error::data(format!(
                "{}: expected mono audio, found {} channels",
                path.display(),
                spec.channels
            )));
        }
        if spec.sample_rate != expected_rate {
            return Err(Error::config(format!(
                "{}: sample rate {} does not match configured rate {}; resampling is unsupported",
                path.display(),
                spec.sample_rate,
                expected_rate
            )));
        }
        let samples: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
            (hound::SampleFormat::Int, 16) => reader
                .samples::<i16>()
                .map(|s| s.map(|v| v as f32 / 32768.0))
                .collect::<std::result::Result<_, _>>()?,
            (hound::SampleFormat::Float, 32) => {
                reader.samples::<f32>().collect::<std::result::Result<_, _>>()?
            }
            (fmt, bits) => {
                return Err(Error::data(format!(
                    "{}: unsupported sample format {fmt:?}/{bits}-bit (PCM16 or float32 only)",
                    path.display()
                )))
            }
        };
        Self::new(samples, spec.sample_rate)
    }

    /// Write as PCM16 WAV, clamping to [-1, 1].
    pub fn write_wav(&self, path: &Path) -> Result<()> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(path, spec)?;
        for &s in &self.samples {
            let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
            writer.write_sample(v)?;
        }
        writer.finalize()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wav_round_trip_is_close() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let samples: Vec<f32> = (0..480).map(|i| (i as f32 * 0.05).sin() * 0.5).collect();
        let clip = AudioClip::new(samples.clone(), 16_000).unwrap();
        clip.write_wav(&path).unwrap();
        let back = AudioClip::read_wav(&path, 16_000).unwrap();
        assert_eq!(back.samples.len(), samples.len());
        for (a, b) in back.samples.iter().zip(&samples) {
            assert!((a - b).abs() < 1.0 / 32000.0);
        }
    }

    #[test]
    fn sample_rate_mismatch_is_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let clip = AudioClip::new(vec![0.0; 100], 8_000).unwrap();
        clip.write_wav(&path).unwrap();
        let err = AudioClip::read_wav(&path, 16_000).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn non_finite_samples_rejected() {
        assert!(AudioClip::new(vec![0.0, f32::NAN], 16_000).is_err());
    }
}
