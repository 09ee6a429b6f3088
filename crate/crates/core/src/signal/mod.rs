//! Waveform primitives shared by every other module: the [`Waveform`] type,
//! WAV I/O, framing, STFT/ISTFT, FIR band-pass filtering and peak limiting.
//!
//! Everything here is a pure function of its inputs.

mod fir;
mod stft;
mod wav;

pub use fir::{bandpass_filter, BandSpec, FirBandpass, FIR_LEN};
pub use stft::{
    hann_window, istft, mean_power_spectrum, stft, SpectralFrames, StftParams, WindowKind,
};
pub use wav::{read_wav, write_samples, write_wav};

use crate::error::{ensure_same_len, Error, Result};

/// Sample rate of the reference corpus.
pub const CORPUS_SAMPLE_RATE: u32 = 22_050;

/// Mono sample sequence with its sample rate.
///
/// Samples are always finite, the rate is positive and the sequence is
/// non-empty; the constructors enforce this.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidWaveform("sample rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::Empty("waveform"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidWaveform(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Waveform {
            samples,
            sample_rate,
        })
    }

    pub fn zeros(len: usize, sample_rate: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate)
    }

    /// New waveform at the same sample rate.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false for a constructed waveform; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Sum of squared samples.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn rms(&self) -> f64 {
        (self.energy() / self.samples.len() as f64).sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    pub fn scaled(&self, gain: f64) -> Result<Self> {
        self.with_samples(self.samples.iter().map(|s| s * gain).collect())
    }

    pub fn add(&self, other: &Waveform) -> Result<Self> {
        ensure_same_len(self.len(), other.len())?;
        self.with_samples(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Waveform) -> Result<Self> {
        ensure_same_len(self.len(), other.len())?;
        self.with_samples(
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// Copy of samples `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::param(format!(
                "slice [{start}, {end}) outside waveform of {} samples",
                self.len()
            )));
        }
        self.with_samples(self.samples[start..end].to_vec())
    }
}

/// Splits `w` into full frames of `frame_len` samples every `hop` samples.
///
/// The trailing partial frame is dropped, so the count is
/// `(len - frame_len) / hop + 1` when `len >= frame_len` and zero otherwise.
pub fn frame_signal(w: &Waveform, frame_len: usize, hop: usize) -> Vec<&[f64]> {
    frames_of(w.samples(), frame_len, hop)
}

pub(crate) fn frames_of(x: &[f64], frame_len: usize, hop: usize) -> Vec<&[f64]> {
    if frame_len == 0 || hop == 0 || x.len() < frame_len {
        return Vec::new();
    }
    let count = (x.len() - frame_len) / hop + 1;
    (0..count)
        .map(|m| &x[m * hop..m * hop + frame_len])
        .collect()
}

/// Scales `w` down so its peak equals `ceiling` if it exceeds it; quieter
/// signals are returned unchanged.
pub fn peak_normalize(w: &Waveform, ceiling: f64) -> Result<Waveform> {
    if !(ceiling > 0.0 && ceiling <= 1.0) {
        return Err(Error::param(format!("ceiling {ceiling} not in (0, 1]")));
    }
    let peak = w.peak();
    if peak <= ceiling {
        return Ok(w.clone());
    }
    let gain = ceiling / peak;
    w.scaled(gain)
}
