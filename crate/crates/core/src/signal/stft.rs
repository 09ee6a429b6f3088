use std::f64::consts::PI;

use realfft::num_complex::Complex64;
use realfft::RealFftPlanner;

use super::Waveform;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowKind {
    /// Periodic Hann.
    #[default]
    Hann,
}

impl WindowKind {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Hann => hann_window(len),
        }
    }

    /// Whether the window overlap-adds to a constant at `fft_size / hop`.
    fn is_cola(self, fft_size: usize, hop: usize) -> bool {
        match self {
            WindowKind::Hann => fft_size % hop == 0 && fft_size / hop >= 2,
        }
    }
}

/// Periodic Hann window of length `len`.
pub fn hann_window(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / len as f64).cos())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftParams {
    fft_size: usize,
    hop: usize,
    window: WindowKind,
}

impl StftParams {
    pub fn new(fft_size: usize, hop: usize, window: WindowKind) -> Result<Self> {
        if fft_size < 2 || !fft_size.is_power_of_two() {
            return Err(Error::param(format!(
                "fft_size {fft_size} is not a power of two"
            )));
        }
        if hop == 0 || hop > fft_size {
            return Err(Error::param(format!(
                "hop {hop} outside (0, {fft_size}]"
            )));
        }
        if !window.is_cola(fft_size, hop) {
            return Err(Error::param(format!(
                "{window:?} window is not COLA at fft_size {fft_size}, hop {hop}"
            )));
        }
        Ok(StftParams {
            fft_size,
            hop,
            window,
        })
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    pub fn num_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Centre frequency of `bin` in Hz.
    pub fn bin_hz(&self, bin: usize, sample_rate: u32) -> f64 {
        bin as f64 * sample_rate as f64 / self.fft_size as f64
    }
}

impl Default for StftParams {
    /// 1024-point Hann frames every 256 samples (~46 ms at 22.05 kHz).
    fn default() -> Self {
        StftParams {
            fft_size: 1024,
            hop: 256,
            window: WindowKind::Hann,
        }
    }
}

/// Complex STFT frames, one row per frame with `fft_size / 2 + 1` bins.
///
/// Frames are centred: the signal is zero-padded by `fft_size / 2` on both
/// sides (and at the tail up to a whole number of hops), so every input
/// sample is covered by several frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrames {
    pub frames: Vec<Vec<Complex64>>,
    pub params: StftParams,
    pub original_length: usize,
    pub sample_rate: u32,
}

impl SpectralFrames {
    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    /// Per-bin power averaged over frames.
    pub fn mean_power(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.params.num_bins()];
        for frame in &self.frames {
            for (a, c) in acc.iter_mut().zip(frame) {
                *a += c.norm_sqr();
            }
        }
        let n = self.frames.len().max(1) as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}

/// Windowed FFT of every centred frame. No normalisation is applied, so a
/// unit-amplitude bin-aligned sinusoid peaks at `sum(window) / 2`.
pub fn stft(w: &Waveform, p: &StftParams) -> Result<SpectralFrames> {
    let n = p.fft_size;
    if w.len() < n {
        return Err(Error::TooShort {
            len: w.len(),
            needed: n,
        });
    }
    let half = n / 2;
    let num_frames = w.len().div_ceil(p.hop) + 1;
    let padded_len = (num_frames - 1) * p.hop + n;
    let mut padded = vec![0.0; padded_len];
    padded[half..half + w.len()].copy_from_slice(w.samples());

    let window = p.window.coefficients(n);
    let fft = RealFftPlanner::<f64>::new().plan_fft_forward(n);
    let mut input = fft.make_input_vec();
    let mut scratch = fft.make_scratch_vec();
    let mut frames = Vec::with_capacity(num_frames);
    for m in 0..num_frames {
        let seg = &padded[m * p.hop..m * p.hop + n];
        for ((dst, &x), &win) in input.iter_mut().zip(seg).zip(&window) {
            *dst = x * win;
        }
        let mut out = fft.make_output_vec();
        fft.process_with_scratch(&mut input, &mut out, &mut scratch)
            .expect("buffer sizes come from the planner");
        frames.push(out);
    }
    Ok(SpectralFrames {
        frames,
        params: *p,
        original_length: w.len(),
        sample_rate: w.sample_rate(),
    })
}

/// Weighted overlap-add inverse of [`stft`]: each inverse frame is windowed
/// again and the sum is divided by the accumulated squared window, then
/// trimmed to the original length.
pub fn istft(s: &SpectralFrames) -> Result<Waveform> {
    let p = &s.params;
    let n = p.fft_size;
    let bins = p.num_bins();
    if let Some(i) = s.frames.iter().position(|f| f.len() != bins) {
        return Err(Error::DimensionMismatch(format!(
            "frame {i} has {} bins, expected {bins}",
            s.frames[i].len()
        )));
    }
    if s.original_length == 0 {
        return Err(Error::Empty("spectral frames with zero original length"));
    }

    let window = p.window.coefficients(n);
    let out_len = s.frames.len().saturating_sub(1) * p.hop + n;
    let mut acc = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let ifft = RealFftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut spec = ifft.make_input_vec();
    let mut time = ifft.make_output_vec();
    let mut scratch = ifft.make_scratch_vec();
    let scale = 1.0 / n as f64;
    for (m, frame) in s.frames.iter().enumerate() {
        spec.copy_from_slice(frame);
        // Real signals have purely real DC and Nyquist bins.
        spec[0].im = 0.0;
        spec[bins - 1].im = 0.0;
        ifft.process_with_scratch(&mut spec, &mut time, &mut scratch)
            .expect("buffer sizes come from the planner");
        let off = m * p.hop;
        for (i, (&t, &win)) in time.iter().zip(&window).enumerate() {
            acc[off + i] += t * scale * win;
            norm[off + i] += win * win;
        }
    }

    let half = n / 2;
    let samples = (0..s.original_length)
        .map(|i| {
            let j = half + i;
            match (acc.get(j), norm.get(j)) {
                (Some(&a), Some(&d)) if d > 1e-10 => a / d,
                _ => 0.0,
            }
        })
        .collect();
    Waveform::new(samples, s.sample_rate)
}

/// Mean periodogram of `w`; signals shorter than one frame are zero-padded.
pub fn mean_power_spectrum(w: &Waveform, p: &StftParams) -> Result<Vec<f64>> {
    if w.len() >= p.fft_size {
        return Ok(stft(w, p)?.mean_power());
    }
    let mut padded = w.samples().to_vec();
    padded.resize(p.fft_size, 0.0);
    let padded = w.with_samples(padded)?;
    Ok(stft(&padded, p)?.mean_power())
}
