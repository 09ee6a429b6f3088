use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signal::{Waveform, CORPUS_SAMPLE_RATE};

/// Length of every synthetic clip, in seconds.
pub const CLIP_SECONDS: f64 = 2.0;

/// Maximum relative per-syllable frequency jitter drawn from the seed.
const FREQ_JITTER: f64 = 0.02;
/// Attack/release ramp of the exponential envelope, in seconds.
const RAMP_S: f64 = 0.004;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Envelope {
    Hann,
    /// Short linear attack, exponential decay to about -35 dB, short release.
    Exponential,
}

impl Envelope {
    fn value(self, t: f64, len: f64) -> f64 {
        match self {
            Envelope::Hann => 0.5 * (1.0 - (2.0 * PI * t / len).cos()),
            Envelope::Exponential => {
                let attack = (t / RAMP_S).min(1.0);
                let release = ((len - t) / RAMP_S).min(1.0);
                attack * release * (-4.0 * t / len).exp()
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Envelope::Hann => "hann",
            Envelope::Exponential => "exponential",
        }
    }
}

/// Parameters of a synthetic call: `syllable_count` harmonic linear sweeps
/// from `f_start` to `f_end` separated by silent gaps, starting at
/// `onset_s`. Harmonic `h` has relative amplitude `1/h`.
#[derive(Debug, Clone, PartialEq)]
pub struct CallSpec {
    pub name: String,
    pub f_start: f64,
    pub f_end: f64,
    pub n_harmonics: u32,
    pub syllable_count: u32,
    pub syllable_len_s: f64,
    pub gap_len_s: f64,
    pub onset_s: f64,
    pub envelope: Envelope,
    /// Peak amplitude bound in `[0, 1]`.
    pub amplitude: f64,
    pub seed: u64,
}

impl CallSpec {
    /// Time from onset to the end of the last syllable.
    pub fn active_s(&self) -> f64 {
        self.syllable_count as f64 * self.syllable_len_s
            + self.syllable_count.saturating_sub(1) as f64 * self.gap_len_s
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        for f in [self.f_start, self.f_end] {
            if !(f > 0.0 && f < nyquist) {
                return Err(Error::param(format!("sweep frequency {f} Hz outside (0, {nyquist})")));
            }
        }
        if self.n_harmonics == 0 || self.syllable_count == 0 {
            return Err(Error::param("need at least one harmonic and one syllable"));
        }
        let top = self.f_start.max(self.f_end) * self.n_harmonics as f64 * (1.0 + FREQ_JITTER);
        if top >= nyquist {
            return Err(Error::param(format!("highest harmonic {top:.0} Hz reaches Nyquist")));
        }
        if !(self.syllable_len_s > 0.0 && self.gap_len_s >= 0.0 && self.onset_s >= 0.0) {
            return Err(Error::param("syllable length must be positive, gap and onset non-negative"));
        }
        if self.onset_s + self.active_s() > CLIP_SECONDS + 1e-12 {
            return Err(Error::param(format!(
                "call ends at {:.3} s, past the {CLIP_SECONDS} s clip",
                self.onset_s + self.active_s()
            )));
        }
        if !(0.0..=1.0).contains(&self.amplitude) {
            return Err(Error::param("amplitude must lie in [0, 1]"));
        }
        Ok(())
    }

    /// The twelve built-in call types, all with onset 0.3 s, amplitude 0.5 and
    /// seed 0. Their energy lies inside 1.5–11 kHz.
    pub fn presets() -> Vec<CallSpec> {
        use Envelope::{Exponential as E, Hann as H};
        let table: [(&str, f64, f64, u32, u32, f64, f64, Envelope); 12] = [
            ("steady-whistle", 3000.0, 3000.0, 2, 3, 0.20, 0.10, H),
            ("down-sweep", 6000.0, 3000.0, 1, 4, 0.12, 0.08, H),
            ("up-sweep", 2500.0, 5000.0, 2, 3, 0.15, 0.10, H),
            ("trill", 4000.0, 4500.0, 1, 8, 0.05, 0.04, E),
            ("low-warble", 1800.0, 2400.0, 3, 3, 0.20, 0.12, H),
            ("high-chip", 7000.0, 8000.0, 1, 5, 0.06, 0.10, E),
            ("harmonic-call", 2000.0, 2200.0, 4, 2, 0.30, 0.15, H),
            ("rising-chirp", 3500.0, 7500.0, 1, 3, 0.10, 0.15, H),
            ("falling-whistle", 5000.0, 2000.0, 2, 2, 0.35, 0.20, H),
            ("buzz", 5500.0, 5600.0, 1, 1, 0.60, 0.0, E),
            ("two-note", 4200.0, 3600.0, 2, 4, 0.12, 0.06, H),
            ("long-sweep", 1600.0, 9000.0, 1, 3, 0.18, 0.10, H),
        ];
        table
            .iter()
            .map(|&(name, f_start, f_end, n_harmonics, syllable_count, syllable_len_s, gap_len_s, envelope)| CallSpec {
                name: name.to_string(),
                f_start,
                f_end,
                n_harmonics,
                syllable_count,
                syllable_len_s,
                gap_len_s,
                onset_s: 0.3,
                envelope,
                amplitude: 0.5,
                seed: 0,
            })
            .collect()
    }
}

/// Renders `spec` as a 2 s clip at 22050 Hz. The seed sets each harmonic's
/// starting phase and a small per-syllable frequency jitter, so equal specs
/// give bit-identical output.
pub fn gen_call(spec: &CallSpec) -> Result<Waveform> {
    let fs = CORPUS_SAMPLE_RATE;
    spec.validate(fs)?;
    let rate = fs as f64;
    let len = (CLIP_SECONDS * rate).round() as usize;
    let mut out = vec![0.0; len];
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let harmonic_norm: f64 = (1..=spec.n_harmonics).map(|h| 1.0 / h as f64).sum();
    let syl_len = (spec.syllable_len_s * rate).round() as usize;

    for s in 0..spec.syllable_count {
        let jitter = 1.0 + rng.random_range(-FREQ_JITTER..=FREQ_JITTER);
        let phases: Vec<f64> = (0..spec.n_harmonics).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let (f0, f1) = (spec.f_start * jitter, spec.f_end * jitter);
        let start_s = spec.onset_s + s as f64 * (spec.syllable_len_s + spec.gap_len_s);
        let start = (start_s * rate).round() as usize;
        let dur = syl_len as f64 / rate;
        for i in 0..syl_len {
            let Some(slot) = out.get_mut(start + i) else { break };
            let t = i as f64 / rate;
            // Phase of a linear sweep: 2 pi (f0 t + (f1 - f0) t^2 / (2 dur)).
            let base = 2.0 * PI * (f0 * t + 0.5 * (f1 - f0) * t * t / dur);
            let tone: f64 = (1..=spec.n_harmonics)
                .zip(&phases)
                .map(|(h, ph)| (h as f64 * base + ph).sin() / h as f64)
                .sum();
            *slot = spec.amplitude * spec.envelope.value(t, dur) * tone / harmonic_norm;
        }
    }
    Waveform::new(out, fs)
}
