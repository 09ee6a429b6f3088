use std::f64::consts::PI;

use realfft::num_complex::Complex64;
use realfft::RealFftPlanner;

use crate::error::{ensure_same_len, Error, Result};
use crate::signal::{hann_window, Waveform};

const PV_FFT: usize = 1024;
const PV_HOP: usize = 256;
/// Zero crossings of the interpolation kernel on each side.
const SINC_ZEROS: f64 = 16.0;

/// `lambda * a + (1 - lambda) * b`.
pub fn mixup(a: &Waveform, b: &Waveform, lambda: f64) -> Result<Waveform> {
    ensure_same_len(a.len(), b.len())?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::param(format!("mix-up weight {lambda} not in [0, 1]")));
    }
    let mu = 1.0 - lambda;
    a.with_samples(a.samples().iter().zip(b.samples()).map(|(x, y)| lambda * x + mu * y).collect())
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn blackman(u: f64) -> f64 {
    // u in [-1, 1]
    0.42 + 0.5 * (PI * u).cos() + 0.08 * (2.0 * PI * u).cos()
}

/// Reads `x` at positions `m * step` (`step > 1` speeds up and raises
/// pitch) with a Blackman-windowed sinc. When `step > 1` the kernel cutoff
/// drops to `1/step` of Nyquist so no content folds over.
fn resample_by_step(x: &[f64], step: f64, out_len: usize) -> Vec<f64> {
    let cutoff = (1.0 / step).min(1.0);
    let half = SINC_ZEROS / cutoff;
    (0..out_len)
        .map(|m| {
            let t = m as f64 * step;
            if t.fract() == 0.0 && cutoff == 1.0 {
                return x.get(t as usize).copied().unwrap_or(0.0);
            }
            let lo = (t - half).ceil().max(0.0) as usize;
            let hi = ((t + half).floor() as usize).min(x.len().saturating_sub(1));
            (lo..=hi)
                .map(|k| {
                    let d = t - k as f64;
                    x[k] * cutoff * sinc(cutoff * d) * blackman(d / half)
                })
                .sum()
        })
        .collect()
}

fn princarg(p: f64) -> f64 {
    p - 2.0 * PI * ((p + PI) / (2.0 * PI)).floor()
}

/// Phase-vocoder stretch of `x` to `out_len` samples: analysis frames every
/// `len / out_len * 256` samples, synthesis frames every 256.
fn stretch_to(x: &[f64], out_len: usize) -> Vec<f64> {
    let n = PV_FFT;
    let half = n / 2;
    let ha = x.len() as f64 / out_len as f64 * PV_HOP as f64;
    let frames = out_len.div_ceil(PV_HOP) + 1;
    let window = hann_window(n);

    let mut planner = RealFftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf = fwd.make_input_vec();
    let mut spec = fwd.make_output_vec();
    let bins = spec.len();
    let omega: Vec<f64> = (0..bins).map(|k| 2.0 * PI * k as f64 / n as f64).collect();

    let mut out = vec![0.0; (frames - 1) * PV_HOP + n];
    let mut norm = vec![0.0; out.len()];
    let mut prev_arg = vec![0.0; bins];
    let mut phase = vec![0.0; bins];
    let mut prev_pos = 0isize;

    for m in 0..frames {
        // Frame centred on input sample `pos`.
        let pos = (m as f64 * ha).round() as isize;
        for (i, b) in buf.iter_mut().enumerate() {
            let idx = pos + i as isize - half as isize;
            let v = if idx >= 0 { x.get(idx as usize).copied().unwrap_or(0.0) } else { 0.0 };
            *b = v * window[i];
        }
        fwd.process(&mut buf, &mut spec).expect("planner-sized buffers");
        let step = (pos - prev_pos) as f64;
        for k in 0..bins {
            let arg = spec[k].arg();
            if m == 0 {
                phase[k] = arg;
            } else {
                let dev = princarg(arg - prev_arg[k] - omega[k] * step);
                let inst = omega[k] + dev / step;
                phase[k] += inst * PV_HOP as f64;
            }
            prev_arg[k] = arg;
            spec[k] = Complex64::from_polar(spec[k].norm(), phase[k]);
        }
        spec[0].im = 0.0;
        spec[bins - 1].im = 0.0;
        inv.process(&mut spec, &mut buf).expect("planner-sized buffers");
        let start = m * PV_HOP;
        for i in 0..n {
            out[start + i] += buf[i] / n as f64 * window[i];
            norm[start + i] += window[i] * window[i];
        }
        prev_pos = pos;
    }
    (0..out_len)
        .map(|i| {
            let j = i + half;
            if norm[j] > 1e-8 {
                out[j] / norm[j]
            } else {
                0.0
            }
        })
        .collect()
}

/// Phase-vocoder time stretch to `round(len / rate)` samples, keeping pitch.
/// `rate > 1` shortens.
pub fn time_stretch(w: &Waveform, rate: f64) -> Result<Waveform> {
    if !(0.5..=2.0).contains(&rate) {
        return Err(Error::param(format!("stretch rate {rate} not in [0.5, 2]")));
    }
    let out_len = ((w.len() as f64 / rate).round() as usize).max(1);
    w.with_samples(stretch_to(w.samples(), out_len))
}

/// Shifts pitch by `semitones` at constant length: windowed-sinc resampling
/// by `2^(semitones/12)` followed by a phase-vocoder stretch back to the
/// input length.
pub fn pitch_shift(w: &Waveform, semitones: f64) -> Result<Waveform> {
    if !(semitones.abs() <= 12.0) {
        return Err(Error::param(format!("pitch shift {semitones} exceeds 12 semitones")));
    }
    let step = 2f64.powf(semitones / 12.0);
    let mid_len = ((w.len() as f64 / step).round() as usize).max(1);
    let resampled = resample_by_step(w.samples(), step, mid_len);
    w.with_samples(stretch_to(&resampled, w.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{stft, StftParams};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tone(f: f64, len: usize) -> Waveform {
        Waveform::new((0..len).map(|i| 0.5 * (2.0 * PI * f * i as f64 / 22050.0).sin()).collect(), 22050).unwrap()
    }

    /// Frequency of the strongest bin of the mean magnitude spectrum,
    /// refined by parabolic interpolation on log magnitude.
    fn dominant_hz(w: &Waveform) -> f64 {
        let p = StftParams::default();
        let s = stft(w, &p).unwrap();
        let mut mag = vec![0.0; p.num_bins()];
        for f in &s.frames {
            mag.iter_mut().zip(f).for_each(|(m, c)| *m += c.norm());
        }
        let k = (1..mag.len() - 1).max_by(|&a, &b| mag[a].partial_cmp(&mag[b]).unwrap()).unwrap();
        let (a, b, c) = (mag[k - 1].ln(), mag[k].ln(), mag[k + 1].ln());
        let delta = 0.5 * (a - c) / (a - 2.0 * b + c);
        (k as f64 + delta) * 22050.0 / 1024.0
    }

    fn rel_err_db(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        10.0 * (num / den).log10()
    }

    #[test]
    fn mixup_identities() {
        let a = tone(1000.0, 1000);
        let b = tone(3000.0, 1000);
        assert_eq!(mixup(&a, &b, 1.0).unwrap(), a);
        assert_eq!(mixup(&a, &b, 0.0).unwrap(), b);
        let neg = a.scaled(-1.0).unwrap();
        assert!(mixup(&a, &neg, 0.5).unwrap().samples().iter().all(|&v| v == 0.0));
        assert!(mixup(&a, &b, 1.5).is_err());
        assert!(mixup(&a, &tone(1.0, 10), 0.5).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn mixup_energy_bound(seed in 0u64..1000, lambda in 0.0f64..=1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = Waveform::new((0..512).map(|_| rng.random_range(-1.0..1.0)).collect(), 22050).unwrap();
            let b = Waveform::new((0..512).map(|_| rng.random_range(-1.0..1.0)).collect(), 22050).unwrap();
            let e = mixup(&a, &b, lambda).unwrap().energy();
            let (ea, eb) = (a.energy(), b.energy());
            let bound = lambda * lambda * ea + (1.0 - lambda).powi(2) * eb + 2.0 * lambda * (1.0 - lambda) * (ea * eb).sqrt();
            prop_assert!(e <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn identity_shift_and_stretch() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = Waveform::new((0..20000).map(|_| rng.random_range(-0.5..0.5)).collect(), 22050).unwrap();
        let p = pitch_shift(&w, 0.0).unwrap();
        assert_eq!(p.len(), w.len());
        assert!(rel_err_db(p.samples(), w.samples()) <= -50.0);
        let s = time_stretch(&w, 1.0).unwrap();
        assert_eq!(s.len(), w.len());
        assert!(rel_err_db(s.samples(), w.samples()) <= -50.0);
    }

    #[test]
    fn octave_shifts() {
        let w = tone(2000.0, 44100);
        let up = pitch_shift(&w, 12.0).unwrap();
        assert_eq!(up.len(), w.len());
        let f = dominant_hz(&up);
        assert!((f - 4000.0).abs() <= 0.03 * 4000.0, "{f}");
        let down = pitch_shift(&w, -12.0).unwrap();
        assert_eq!(down.len(), w.len());
        let f = dominant_hz(&down);
        assert!((f - 1000.0).abs() <= 0.03 * 1000.0, "{f}");
        assert!(pitch_shift(&w, 12.5).is_err());
    }

    #[test]
    fn shifting_up_does_not_alias() {
        // 8 kHz up an octave would land at 16 kHz, past Nyquist.
        let w = tone(8000.0, 22050);
        let up = pitch_shift(&w, 12.0).unwrap();
        assert!(up.energy() < 1e-3 * w.energy(), "{}", up.energy() / w.energy());
    }

    #[test]
    fn stretch_keeps_pitch_and_length() {
        let w = tone(3000.0, 44100);
        let slow = time_stretch(&w, 0.5).unwrap();
        assert_eq!(slow.len(), 88200);
        let f = dominant_hz(&slow);
        assert!((f - 3000.0).abs() <= 0.03 * 3000.0, "{f}");
        let fast = time_stretch(&w, 2.0).unwrap();
        assert_eq!(fast.len(), 22050);
        assert!((dominant_hz(&fast) - 3000.0).abs() <= 90.0);
        assert!(time_stretch(&w, 2.5).is_err());
        assert!(time_stretch(&w, 0.4).is_err());
    }
}
