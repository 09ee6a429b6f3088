//! Ephraim–Malah MMSE short-time spectral amplitude (STSA) and log-spectral
//! amplitude (LSA) estimators with decision-directed a-priori SNR.

use std::f64::consts::PI;

use super::special::{bessel_i0e, bessel_i1e, expint_e1};
use super::subtract::{NoisePsdEstimate, BASELINE_NOISE_S};
use super::{EnhancementResult, Method, DEFAULT_CEILING};
use crate::error::Result;
use crate::signal::{istft, peak_normalize, stft, StftParams, Waveform};

/// Weight of the previous frame's amplitude in the decision-directed rule.
pub const DD_SMOOTHING: f64 = 0.98;
/// Lower bound on the a-priori SNR, in dB.
pub const XI_MIN_DB: f64 = -25.0;
pub const GAIN_MIN: f64 = 1e-3;
pub const GAIN_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmseMode {
    Stsa,
    Lsa,
}

impl MmseMode {
    fn method(self) -> Method {
        match self {
            MmseMode::Stsa => Method::MmseStsa,
            MmseMode::Lsa => Method::MmseLsa,
        }
    }

    /// Unclamped gain for a-priori SNR `xi` and a-posteriori SNR `gamma`
    /// (both linear).
    pub fn gain(self, xi: f64, gamma: f64) -> f64 {
        match self {
            MmseMode::Stsa => stsa_gain(xi, gamma),
            MmseMode::Lsa => lsa_gain(xi, gamma),
        }
    }
}

/// MMSE-STSA gain
/// `sqrt(pi)/2 * sqrt(v)/gamma * exp(-v/2) * ((1+v) I0(v/2) + v I1(v/2))`,
/// `v = xi gamma / (1 + xi)`. The exponential is folded into scaled Bessel
/// functions so large `v` does not overflow.
pub fn stsa_gain(xi: f64, gamma: f64) -> f64 {
    let v = xi * gamma / (1.0 + xi);
    let half = 0.5 * v;
    0.5 * PI.sqrt() * v.sqrt() / gamma * ((1.0 + v) * bessel_i0e(half) + v * bessel_i1e(half))
}

/// MMSE-LSA gain `xi / (1 + xi) * exp(E1(v) / 2)`.
pub fn lsa_gain(xi: f64, gamma: f64) -> f64 {
    let v = xi * gamma / (1.0 + xi);
    xi / (1.0 + xi) * (0.5 * expint_e1(v)).exp()
}

/// Enhances `x` with the chosen MMSE estimator. The noise PSD comes from
/// the first 0.25 s; the a-priori SNR is tracked per bin with the
/// decision-directed rule and floored at -25 dB; gains are clamped to
/// `[1e-3, 1]` and applied with the noisy phase.
pub fn mmse_enhance(x: &Waveform, mode: MmseMode) -> Result<EnhancementResult> {
    let params = StftParams::default();
    let (noise, span, _) = NoisePsdEstimate::from_lead_in(x, BASELINE_NOISE_S, params)?;
    let mut frames = stft(x, &params)?;

    let xi_min = 10f64.powf(XI_MIN_DB / 10.0);
    let mut prev_amp_sq: Option<Vec<f64>> = None;
    for frame in &mut frames.frames {
        let mut amp_sq = vec![0.0; frame.len()];
        for (k, bin) in frame.iter_mut().enumerate() {
            let lambda = noise.psd[k];
            let power = bin.norm_sqr();
            let gain = if lambda <= f64::MIN_POSITIVE {
                GAIN_MAX
            } else {
                let gamma = (power / lambda).max(1e-12);
                let ml = (gamma - 1.0).max(0.0);
                let xi = match &prev_amp_sq {
                    Some(prev) => DD_SMOOTHING * prev[k] / lambda + (1.0 - DD_SMOOTHING) * ml,
                    None => ml,
                }
                .max(xi_min);
                let g = mode.gain(xi, gamma);
                if g.is_nan() {
                    GAIN_MIN
                } else {
                    g.clamp(GAIN_MIN, GAIN_MAX)
                }
            };
            *bin *= gain;
            amp_sq[k] = gain * gain * power;
        }
        prev_amp_sq = Some(amp_sq);
    }

    let cleaned = istft(&frames)?;
    Ok(EnhancementResult {
        enhanced: peak_normalize(&cleaned, DEFAULT_CEILING)?,
        band_weights: Vec::new(),
        snr_est_db: None,
        alpha_prime: None,
        noise_ref_span: span,
        method: mode.method(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn gains_approach_wiener_at_high_snr() {
        for &xi in &[1.0, 10.0, 100.0] {
            let wiener = xi / (1.0 + xi);
            let gamma = 1e4;
            assert!((stsa_gain(xi, gamma) - wiener).abs() < 1e-3);
            assert!((lsa_gain(xi, gamma) - wiener).abs() < 1e-3);
        }
    }

    #[test]
    fn lsa_never_exceeds_stsa_on_grid() {
        for i in 0..25 {
            for j in 0..25 {
                let xi = 10f64.powf((-25.0 + 2.0 * i as f64) / 10.0);
                let gamma = 10f64.powf((-10.0 + 1.5 * j as f64) / 10.0);
                let (s, l) = (stsa_gain(xi, gamma), lsa_gain(xi, gamma));
                assert!(l <= s * (1.0 + 1e-12), "xi {xi} gamma {gamma}: {l} > {s}");
            }
        }
    }

    fn white(len: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, 0.1).unwrap();
        Waveform::new((0..len).map(|_| n.sample(&mut rng)).collect(), 22050).unwrap()
    }

    #[test]
    fn noise_only_is_reduced_lsa_more() {
        let x = white(44100, 11);
        let stsa = mmse_enhance(&x, MmseMode::Stsa).unwrap().enhanced;
        let lsa = mmse_enhance(&x, MmseMode::Lsa).unwrap().enhanced;
        assert!(stsa.energy() < x.energy());
        assert!(lsa.energy() <= stsa.energy());
    }

    #[test]
    fn silent_lead_in_passes_signal() {
        let mut s = vec![0.0; 44100];
        for (i, v) in s.iter_mut().enumerate().skip(8000) {
            *v = 0.3 * (2.0 * PI * 2500.0 * i as f64 / 22050.0).sin();
        }
        let x = Waveform::new(s, 22050).unwrap();
        for mode in [MmseMode::Stsa, MmseMode::Lsa] {
            let y = mmse_enhance(&x, mode).unwrap().enhanced;
            for (a, b) in y.samples().iter().zip(x.samples()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
