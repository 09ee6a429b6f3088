use std::f64::consts::PI;

use realfft::RealFftPlanner;

use super::Waveform;
use crate::error::{Error, Result};

/// Number of taps of the band-pass design.
pub const FIR_LEN: usize = 511;
const HALF: usize = FIR_LEN / 2;

/// Pass band `(f_low, f_high)` in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub f_low: f64,
    pub f_high: f64,
}

impl BandSpec {
    pub const fn new(f_low: f64, f_high: f64) -> Self {
        BandSpec { f_low, f_high }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.f_low + self.f_high)
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.f_low && f <= self.f_high
    }

    /// Checks `0 < f_low < f_high < sample_rate / 2`.
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        if !(self.f_low > 0.0 && self.f_low < self.f_high) {
            return Err(Error::param(format!(
                "band ({}, {}) Hz is not an increasing positive range",
                self.f_low, self.f_high
            )));
        }
        if self.f_high >= nyquist {
            return Err(Error::param(format!(
                "band upper edge {} Hz reaches Nyquist {} Hz",
                self.f_high, nyquist
            )));
        }
        Ok(())
    }
}

/// Linear-phase windowed-sinc band-pass (Hamming window, [`FIR_LEN`] taps),
/// applied zero-phase.
#[derive(Debug, Clone, PartialEq)]
pub struct FirBandpass {
    taps: Vec<f64>,
    band: BandSpec,
    sample_rate: u32,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

impl FirBandpass {
    pub fn design(band: BandSpec, sample_rate: u32) -> Result<Self> {
        band.validate(sample_rate)?;
        let fs = sample_rate as f64;
        let lo = band.f_low / fs;
        let hi = band.f_high / fs;
        // Computed on one half and mirrored so the phase is exactly linear.
        let mut taps = vec![0.0; FIR_LEN];
        for k in 0..=HALF {
            let t = k as f64 - HALF as f64;
            let ideal = 2.0 * hi * sinc(2.0 * hi * t) - 2.0 * lo * sinc(2.0 * lo * t);
            let hamming = 0.54 - 0.46 * (2.0 * PI * k as f64 / (FIR_LEN - 1) as f64).cos();
            taps[k] = ideal * hamming;
            taps[FIR_LEN - 1 - k] = ideal * hamming;
        }
        Ok(FirBandpass {
            taps,
            band,
            sample_rate,
        })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn band(&self) -> BandSpec {
        self.band
    }

    /// Zero-phase amplitude response at `freq_hz` (real, may be negative in
    /// the stop band).
    pub fn response(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate as f64;
        self.taps
            .iter()
            .enumerate()
            .map(|(k, h)| h * (w * (k as f64 - HALF as f64)).cos())
            .sum()
    }

    pub fn response_db(&self, freq_hz: f64) -> f64 {
        20.0 * self.response(freq_hz).abs().max(1e-300).log10()
    }

    /// Filters `w` without delay: the signal is mirror-padded by half the
    /// filter length on each side, convolved, and the valid part kept.
    pub fn apply(&self, w: &Waveform) -> Result<Waveform> {
        if w.sample_rate() != self.sample_rate {
            return Err(Error::param(format!(
                "filter designed for {} Hz applied to {} Hz signal",
                self.sample_rate,
                w.sample_rate()
            )));
        }
        let x = w.samples();
        let padded: Vec<f64> = (0..x.len() + 2 * HALF)
            .map(|i| x[mirror_index(i as isize - HALF as isize, x.len())])
            .collect();

        let full_len = padded.len() + FIR_LEN - 1;
        let nfft = full_len.next_power_of_two();
        let mut planner = RealFftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(nfft);
        let inv = planner.plan_fft_inverse(nfft);

        let mut sig = fwd.make_input_vec();
        sig[..padded.len()].copy_from_slice(&padded);
        let mut sig_spec = fwd.make_output_vec();
        fwd.process(&mut sig, &mut sig_spec)
            .expect("buffer sizes come from the planner");

        let mut ker = fwd.make_input_vec();
        ker[..FIR_LEN].copy_from_slice(&self.taps);
        let mut ker_spec = fwd.make_output_vec();
        fwd.process(&mut ker, &mut ker_spec)
            .expect("buffer sizes come from the planner");

        for (s, k) in sig_spec.iter_mut().zip(&ker_spec) {
            *s *= k;
        }
        let last = sig_spec.len() - 1;
        sig_spec[0].im = 0.0;
        sig_spec[last].im = 0.0;
        let mut conv = inv.make_output_vec();
        inv.process(&mut sig_spec, &mut conv)
            .expect("buffer sizes come from the planner");

        let scale = 1.0 / nfft as f64;
        let start = FIR_LEN - 1;
        w.with_samples(
            conv[start..start + x.len()]
                .iter()
                .map(|v| v * scale)
                .collect(),
        )
    }
}

/// Reflects an out-of-range index back into `[0, len)` without repeating
/// the edge sample (`x[-1] = x[1]`).
fn mirror_index(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let r = i.rem_euclid(period);
    if r < len as isize {
        r as usize
    } else {
        (period - r) as usize
    }
}

/// Band-pass filters `w` with a freshly designed [`FirBandpass`].
pub fn bandpass_filter(w: &Waveform, band: BandSpec) -> Result<Waveform> {
    FirBandpass::design(band, w.sample_rate())?.apply(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, len: usize) -> Waveform {
        Waveform::new(
            (0..len)
                .map(|i| (2.0 * PI * freq * i as f64 / 22050.0).sin())
                .collect(),
            22050,
        )
        .unwrap()
    }

    fn db(a: f64, b: f64) -> f64 {
        20.0 * (a / b).log10()
    }

    #[test]
    fn mirror_indices() {
        let idx: Vec<usize> = (-3..8).map(|i| mirror_index(i, 5)).collect();
        assert_eq!(idx, vec![3, 2, 1, 0, 1, 2, 3, 4, 3, 2, 1]);
        assert_eq!(mirror_index(-7, 1), 0);
        // Very short signals wrap several times.
        assert_eq!(mirror_index(-5, 2), 1);
    }

    #[test]
    fn taps_are_symmetric() {
        let f = FirBandpass::design(BandSpec::new(1500.0, 3000.0), 22050).unwrap();
        let t = f.taps();
        assert_eq!(t.len(), FIR_LEN);
        for k in 0..FIR_LEN {
            assert_eq!(t[k], t[FIR_LEN - 1 - k]);
        }
    }

    #[test]
    fn passband_center_and_stopband() {
        let band = BandSpec::new(1500.0, 3000.0);
        let x = tone(2250.0, 44100);
        let y = bandpass_filter(&x, band).unwrap();
        assert_eq!(y.len(), x.len());
        assert!(db(y.rms(), x.rms()).abs() <= 1.0);

        let x = tone(300.0, 44100);
        let y = bandpass_filter(&x, band).unwrap();
        assert!(db(y.rms(), x.rms()) <= -40.0, "{}", db(y.rms(), x.rms()));
    }

    #[test]
    fn zero_in_zero_out() {
        let z = Waveform::zeros(3000, 22050).unwrap();
        let y = bandpass_filter(&z, BandSpec::new(1500.0, 3000.0)).unwrap();
        assert!(y.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn band_validation() {
        assert!(BandSpec::new(7000.0, 11025.0).validate(22050).is_err());
        assert!(BandSpec::new(3000.0, 1500.0).validate(22050).is_err());
        assert!(BandSpec::new(0.0, 1500.0).validate(22050).is_err());
        assert!(BandSpec::new(7000.0, 11000.0).validate(22050).is_ok());
        let x = tone(1000.0, 2048);
        assert!(bandpass_filter(&x, BandSpec::new(8000.0, 12000.0)).is_err());
    }

    #[test]
    fn short_signals_are_filtered() {
        let x = tone(2250.0, 100);
        let y = bandpass_filter(&x, BandSpec::new(1500.0, 3000.0)).unwrap();
        assert_eq!(y.len(), 100);
    }

    #[test]
    fn matches_direct_convolution() {
        let x = tone(2500.0, 2000);
        let f = FirBandpass::design(BandSpec::new(2000.0, 8000.0), 22050).unwrap();
        let y = f.apply(&x).unwrap();
        let s = x.samples();
        for i in [0usize, 10, 999, 1999] {
            let direct: f64 = (0..FIR_LEN)
                .map(|k| {
                    let j = i as isize + k as isize - HALF as isize;
                    f.taps()[k] * s[mirror_index(j, s.len())]
                })
                .sum();
            assert!((direct - y.samples()[i]).abs() < 1e-12);
        }
    }
}
