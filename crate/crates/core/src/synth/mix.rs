use crate::error::{ensure_same_len, Error, Result};
use crate::metrics::{seg_snr_active, SEGSNR_FRAME_LEN};
use crate::signal::Waveform;

/// Clean call, scaled noise and their exact sum.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthMix {
    pub clean: Waveform,
    /// The noise after scaling, so `mix = clean + noise` sample for sample.
    pub noise: Waveform,
    pub mix: Waveform,
    pub target_segsnr_db: f64,
    pub achieved_segsnr_db: f64,
    /// Gain applied to the input noise.
    pub noise_gain: f64,
}

impl GroundTruthMix {
    /// Scales all three signals by the largest power of two that brings
    /// every peak to at most `ceiling`. Powers of two keep
    /// `mix = clean + noise` exact and leave the SegSNR unchanged.
    pub fn with_headroom(self, ceiling: f64) -> Result<Self> {
        if !(ceiling > 0.0) {
            return Err(Error::param("headroom ceiling must be positive"));
        }
        let peak = self.clean.peak().max(self.noise.peak()).max(self.mix.peak());
        if peak <= ceiling {
            return Ok(self);
        }
        let scale = 0.5f64.powi((peak / ceiling).log2().ceil() as i32);
        let clean = self.clean.scaled(scale)?;
        let noise = self.noise.scaled(scale)?;
        let achieved = seg_snr_active(&clean, &noise, SEGSNR_FRAME_LEN.min(clean.len()))?;
        Ok(GroundTruthMix {
            mix: self.mix.scaled(scale)?,
            clean,
            noise,
            achieved_segsnr_db: achieved,
            noise_gain: self.noise_gain * scale,
            ..self
        })
    }
}

/// Scales `noise` so the active-frame SegSNR of `clean` against it equals
/// `target_db`, using `seg_snr(s, g n) = seg_snr(s, n) - 20 log10 g`. A few
/// fixed-point passes absorb the 1e-10 guard term.
pub fn mix_at_segsnr(clean: &Waveform, noise: &Waveform, target_db: f64) -> Result<GroundTruthMix> {
    ensure_same_len(clean.len(), noise.len())?;
    if !target_db.is_finite() {
        return Err(Error::param("target SegSNR must be finite"));
    }
    if noise.energy() <= 0.0 {
        return Err(Error::InvalidWaveform("noise is silent; no gain reaches the target".into()));
    }
    let frame = SEGSNR_FRAME_LEN.min(clean.len());
    let mut gain = 1.0;
    let mut scaled = noise.clone();
    let mut achieved = seg_snr_active(clean, &scaled, frame)?;
    for _ in 0..4 {
        if (achieved - target_db).abs() < 1e-9 {
            break;
        }
        gain *= 10f64.powf((achieved - target_db) / 20.0);
        scaled = noise.scaled(gain)?;
        achieved = seg_snr_active(clean, &scaled, frame)?;
    }
    Ok(GroundTruthMix {
        mix: clean.add(&scaled)?,
        clean: clean.clone(),
        noise: scaled,
        target_segsnr_db: target_db,
        achieved_segsnr_db: achieved,
        noise_gain: gain,
    })
}
