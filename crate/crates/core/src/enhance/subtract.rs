use log::warn;

use super::{EnhancementResult, Method, DEFAULT_CEILING, DEFAULT_SPECTRAL_FLOOR};
use crate::error::{Error, Result};
use crate::signal::{istft, mean_power_spectrum, peak_normalize, stft, SpectralFrames, StftParams, Waveform};

/// Fixed over-subtraction factor of the spectral-subtraction baseline.
pub const SPECSUB_ALPHA: f64 = 2.0;

/// Length of the lead-in the baselines treat as noise only, in seconds.
pub const BASELINE_NOISE_S: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSource {
    /// Leading frames of the clip, assumed call-free.
    InitialFrames,
    /// A fragment picked from the residual.
    ReferenceFragment,
}

/// Per-bin noise power on the STFT grid of `params`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePsdEstimate {
    pub psd: Vec<f64>,
    pub source: NoiseSource,
    pub params: StftParams,
}

impl NoisePsdEstimate {
    /// Mean periodogram of `fragment`.
    pub fn from_fragment(fragment: &Waveform, params: StftParams, source: NoiseSource) -> Result<Self> {
        Ok(NoisePsdEstimate {
            psd: mean_power_spectrum(fragment, &params)?,
            source,
            params,
        })
    }

    pub fn zeros(params: StftParams, source: NoiseSource) -> Self {
        NoisePsdEstimate {
            psd: vec![0.0; params.num_bins()],
            source,
            params,
        }
    }

    /// Estimate from the first `seconds` of `x`, or the whole clip when it is
    /// shorter. The second value is the span used and whether the fallback
    /// was taken.
    pub(crate) fn from_lead_in(x: &Waveform, seconds: f64, params: StftParams) -> Result<(Self, (usize, usize), bool)> {
        let want = (seconds * x.sample_rate() as f64).round() as usize;
        let degenerate = want > x.len();
        let end = want.clamp(1, x.len());
        if degenerate {
            warn!(
                "clip of {} samples is shorter than the {seconds} s noise lead-in; using the whole clip",
                x.len()
            );
        }
        let fragment = x.slice(0, end)?;
        let est = Self::from_fragment(&fragment, params, NoiseSource::InitialFrames)?;
        Ok((est, (0, end), degenerate))
    }
}

fn check_subtraction_args(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::param(format!("over-subtraction factor {alpha} must be >= 0")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param(format!("spectral floor {beta} not in (0, 1)")));
    }
    Ok(())
}

/// Power subtraction on existing frames:
/// `|S|^2 = max(|X|^2 - alpha * P, beta * |X|^2)`, keeping the phase of `X`.
pub fn subtract_frames(
    frames: &SpectralFrames,
    noise_psd: &[f64],
    alpha: f64,
    beta: f64,
) -> Result<SpectralFrames> {
    check_subtraction_args(alpha, beta)?;
    if noise_psd.len() != frames.params.num_bins() {
        return Err(Error::DimensionMismatch(format!(
            "noise PSD has {} bins, STFT has {}",
            noise_psd.len(),
            frames.params.num_bins()
        )));
    }
    let mut out = frames.clone();
    for frame in &mut out.frames {
        for (bin, &p_noise) in frame.iter_mut().zip(noise_psd) {
            let power = bin.norm_sqr();
            if power > 0.0 {
                let kept = (power - alpha * p_noise).max(beta * power);
                *bin *= (kept / power).sqrt();
            }
        }
    }
    Ok(out)
}

/// Spectral subtraction of `noise_psd` from `target`, resynthesised to the
/// input length.
pub fn spectral_subtract(
    target: &Waveform,
    noise_psd: &NoisePsdEstimate,
    alpha: f64,
    beta: f64,
) -> Result<Waveform> {
    let frames = stft(target, &noise_psd.params)?;
    let cleaned = subtract_frames(&frames, &noise_psd.psd, alpha, beta)?;
    istft(&cleaned)
}

/// Full-spectrum spectral subtraction: noise PSD from the first 0.25 s,
/// `alpha = 2`, `beta = 0.01`, no band decomposition.
pub fn specsub_baseline(x: &Waveform) -> Result<EnhancementResult> {
    let params = StftParams::default();
    let (noise, span, _) = NoisePsdEstimate::from_lead_in(x, BASELINE_NOISE_S, params)?;
    let cleaned = spectral_subtract(x, &noise, SPECSUB_ALPHA, DEFAULT_SPECTRAL_FLOOR)?;
    Ok(EnhancementResult {
        enhanced: peak_normalize(&cleaned, DEFAULT_CEILING)?,
        band_weights: Vec::new(),
        snr_est_db: None,
        alpha_prime: Some(SPECSUB_ALPHA),
        noise_ref_span: span,
        method: Method::SpecSub,
    })
}
