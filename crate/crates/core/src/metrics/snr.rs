use crate::enhance::split_signal_noise_proxy;
use crate::error::{ensure_same_len, Error, Result};
use crate::signal::{frame_signal, stft, StftParams, Waveform};

/// Default SegSNR frame length in samples.
pub const SEGSNR_FRAME_LEN: usize = 1024;
/// Added to each frame's noise energy.
pub const SEGSNR_EPS: f64 = 1e-10;
/// Optional per-frame clamp range in dB.
pub const SEGSNR_CLAMP_DB: (f64, f64) = (-20.0, 35.0);
/// A frame is active when its signal energy exceeds this fraction of the
/// loudest frame's.
pub const ACTIVE_FRAME_REL_THRESHOLD: f64 = 1e-6;

const ISD_POWER_FLOOR: f64 = 1e-10;

/// `(signal energy, per-frame SNR in dB)` for each full frame.
fn frame_snrs(s: &Waveform, n: &Waveform, frame_len: usize) -> Result<Vec<(f64, f64)>> {
    ensure_same_len(s.len(), n.len())?;
    if frame_len == 0 {
        return Err(Error::param("frame_len must be positive"));
    }
    if s.len() < frame_len {
        return Err(Error::TooShort {
            len: s.len(),
            needed: frame_len,
        });
    }
    let sf = frame_signal(s, frame_len, frame_len);
    let nf = frame_signal(n, frame_len, frame_len);
    Ok(sf
        .iter()
        .zip(&nf)
        .map(|(a, b)| {
            let es: f64 = a.iter().map(|v| v * v).sum();
            let en: f64 = b.iter().map(|v| v * v).sum();
            (es, 10.0 * (es / (en + SEGSNR_EPS)).log10())
        })
        .collect())
}

fn mean(v: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = v.len() as f64;
    v.sum::<f64>() / n
}

/// Segmental SNR: mean over non-overlapping frames of
/// `10 log10(E_s / (E_n + 1e-10))`. A trailing partial frame is ignored.
pub fn seg_snr(s_est: &Waveform, n_est: &Waveform, frame_len: usize) -> Result<f64> {
    let frames = frame_snrs(s_est, n_est, frame_len)?;
    Ok(mean(frames.iter().map(|f| f.1)))
}

/// [`seg_snr`] with every frame clamped to [`SEGSNR_CLAMP_DB`].
pub fn seg_snr_clamped(s_est: &Waveform, n_est: &Waveform, frame_len: usize) -> Result<f64> {
    let (lo, hi) = SEGSNR_CLAMP_DB;
    let frames = frame_snrs(s_est, n_est, frame_len)?;
    Ok(mean(frames.iter().map(|f| f.1.clamp(lo, hi))))
}

/// [`seg_snr`] restricted to frames where the signal is active (energy above
/// [`ACTIVE_FRAME_REL_THRESHOLD`] times the loudest frame). Used to mix at a
/// target SNR, where silent gaps would otherwise dominate the mean.
pub fn seg_snr_active(clean: &Waveform, noise: &Waveform, frame_len: usize) -> Result<f64> {
    let frames = frame_snrs(clean, noise, frame_len)?;
    let peak = frames.iter().map(|f| f.0).fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::InvalidWaveform("signal is silent in every frame".into()));
    }
    let threshold = ACTIVE_FRAME_REL_THRESHOLD * peak;
    let active: Vec<f64> = frames
        .iter()
        .filter(|f| f.0 > threshold)
        .map(|f| f.1)
        .collect();
    Ok(mean(active.into_iter()))
}

/// Change in proxy SegSNR: each waveform is split into its 2–8 kHz band
/// ("signal") and the rest ("noise"), and the SegSNR of `after` minus that
/// of `before` is returned.
pub fn snr_improvement(before: &Waveform, after: &Waveform) -> Result<f64> {
    ensure_same_len(before.len(), after.len())?;
    let proxy = |w: &Waveform| -> Result<f64> {
        let (s, n) = split_signal_noise_proxy(w)?;
        seg_snr(&s, &n, SEGSNR_FRAME_LEN.min(w.len()))
    };
    Ok(proxy(after)? - proxy(before)?)
}

/// Itakura–Saito distance between power spectra, averaged over STFT frames
/// and bins: `r - ln r - 1` with `r = P_ref / P_test`, both floored at
/// 1e-10. The argument order matters.
pub fn isd(reference: &Waveform, test: &Waveform) -> Result<f64> {
    ensure_same_len(reference.len(), test.len())?;
    let p = StftParams::default();
    let a = stft(reference, &p)?;
    let b = stft(test, &p)?;
    let mut total = 0.0;
    let mut count = 0usize;
    for (fa, fb) in a.frames.iter().zip(&b.frames) {
        for (x, y) in fa.iter().zip(fb) {
            let pr = x.norm_sqr().max(ISD_POWER_FLOOR);
            let pt = y.norm_sqr().max(ISD_POWER_FLOOR);
            let r = pr / pt;
            total += r - r.ln() - 1.0;
            count += 1;
        }
    }
    Ok(total / count as f64)
}
