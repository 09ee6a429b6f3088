use realfft::RealFftPlanner;

use super::subtract::{spectral_subtract, NoisePsdEstimate, NoiseSource};
use super::{EnhancementResult, Method, DEFAULT_CEILING, DEFAULT_SPECTRAL_FLOOR};
use crate::error::{ensure_same_len, Error, Result};
use crate::metrics::seg_snr;
use crate::signal::{
    bandpass_filter, mean_power_spectrum, peak_normalize, BandSpec, StftParams, Waveform,
};

/// The four overlapping analysis bands, in Hz.
pub const DEFAULT_BANDS: [BandSpec; 4] = [
    BandSpec::new(1500.0, 3000.0),
    BandSpec::new(2500.0, 5000.0),
    BandSpec::new(4000.0, 8000.0),
    BandSpec::new(7000.0, 11000.0),
];

/// Pass band of the signal/noise proxy split.
pub const PROXY_BAND: BandSpec = BandSpec::new(2000.0, 8000.0);

#[derive(Debug, Clone, PartialEq)]
pub struct MabeConfig {
    pub bands: Vec<BandSpec>,
    pub weight_floor: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub snr_lo_db: f64,
    pub snr_hi_db: f64,
    pub noise_win_s: f64,
    pub noise_hop_s: f64,
    pub spectral_floor_beta: f64,
    pub normalize_ceiling: f64,
    pub stft: StftParams,
    /// Frame length of the SegSNR estimate, in samples.
    pub segsnr_frame_len: usize,
}

impl Default for MabeConfig {
    fn default() -> Self {
        MabeConfig {
            bands: DEFAULT_BANDS.to_vec(),
            weight_floor: 0.1,
            alpha_min: 1.0,
            alpha_max: 3.0,
            snr_lo_db: 0.0,
            snr_hi_db: 20.0,
            noise_win_s: 0.5,
            noise_hop_s: 0.25,
            spectral_floor_beta: DEFAULT_SPECTRAL_FLOOR,
            normalize_ceiling: DEFAULT_CEILING,
            stft: StftParams::default(),
            segsnr_frame_len: 1024,
        }
    }
}

impl MabeConfig {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if self.bands.is_empty() {
            return Err(Error::param("at least one band is required"));
        }
        for band in &self.bands {
            band.validate(sample_rate)?;
        }
        if !(self.weight_floor > 0.0) {
            return Err(Error::param("weight_floor must be positive"));
        }
        if !(self.alpha_min >= 0.0 && self.alpha_min <= self.alpha_max) {
            return Err(Error::param("need 0 <= alpha_min <= alpha_max"));
        }
        if !(self.snr_lo_db < self.snr_hi_db) {
            return Err(Error::param("need snr_lo_db < snr_hi_db"));
        }
        if !(self.spectral_floor_beta > 0.0 && self.spectral_floor_beta < 1.0) {
            return Err(Error::param("spectral_floor_beta must lie in (0, 1)"));
        }
        if !(self.noise_hop_s > 0.0 && self.noise_hop_s <= self.noise_win_s) {
            return Err(Error::param("need 0 < noise_hop_s <= noise_win_s"));
        }
        if !(self.normalize_ceiling > 0.0 && self.normalize_ceiling <= 1.0) {
            return Err(Error::param("normalize_ceiling must lie in (0, 1]"));
        }
        if self.segsnr_frame_len == 0 {
            return Err(Error::param("segsnr_frame_len must be positive"));
        }
        Ok(())
    }

    /// Frequency range covered by the union of the bands.
    pub fn band_union(&self) -> BandSpec {
        let lo = self.bands.iter().map(|b| b.f_low).fold(f64::INFINITY, f64::min);
        let hi = self.bands.iter().map(|b| b.f_high).fold(0.0, f64::max);
        BandSpec::new(lo, hi)
    }
}

/// Heuristic signal/noise split: `s_est` is the 2–8 kHz band-pass of `x`
/// and `n_est = x - s_est`.
pub fn split_signal_noise_proxy(x: &Waveform) -> Result<(Waveform, Waveform)> {
    let s_est = bandpass_filter(x, PROXY_BAND)?;
    let n_est = x.sub(&s_est)?;
    Ok((s_est, n_est))
}

/// Geometric over arithmetic mean of the mean power spectrum of `w`,
/// restricted to bins inside `band`. A spectrum with no power counts as
/// perfectly flat (1).
pub fn spectral_flatness(w: &Waveform, band: BandSpec, params: &StftParams) -> Result<f64> {
    let power = mean_power_spectrum(w, params)?;
    let rate = w.sample_rate();
    let mut in_band: Vec<f64> = power
        .iter()
        .enumerate()
        .filter(|(k, _)| band.contains(params.bin_hz(*k, rate)))
        .map(|(_, &p)| p)
        .collect();
    if in_band.is_empty() {
        // Band narrower than a bin: use the bin nearest its centre.
        let k = (band.center() / params.bin_hz(1, rate)).round() as usize;
        in_band.push(power[k.min(power.len() - 1)]);
    }
    let n = in_band.len() as f64;
    let arith = in_band.iter().sum::<f64>() / n;
    if arith <= 0.0 {
        return Ok(1.0);
    }
    let log_mean = in_band
        .iter()
        .map(|p| p.max(f64::MIN_POSITIVE).ln())
        .sum::<f64>()
        / n;
    Ok((log_mean.exp() / arith).clamp(0.0, 1.0))
}

/// Band weight `max(floor, E_band / E_x) * (2 - flatness)`: the band's share
/// of total energy, boosted up to twofold when the band is tonal.
pub fn adaptive_weight(
    band_signal: &Waveform,
    x: &Waveform,
    band: BandSpec,
    cfg: &MabeConfig,
) -> Result<f64> {
    ensure_same_len(band_signal.len(), x.len())?;
    let e_x = x.energy();
    if e_x <= 0.0 {
        return Ok(cfg.weight_floor);
    }
    let share = band_signal.energy() / e_x;
    let flatness = spectral_flatness(band_signal, band, &cfg.stft)?;
    Ok(share.max(cfg.weight_floor) * (2.0 - flatness))
}

/// `s_est = sum_i w_i / sum_j w_j * b_i` and `r_rn = x - s_est`.
pub fn reconstruct_weighted(
    x: &Waveform,
    bands: &[Waveform],
    weights: &[f64],
) -> Result<(Waveform, Waveform)> {
    if bands.is_empty() || bands.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} band signals for {} weights",
            bands.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::param("band weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::param("at least one band weight must be positive"));
    }
    let mut s = vec![0.0; x.len()];
    for (b, &w) in bands.iter().zip(weights) {
        ensure_same_len(b.len(), x.len())?;
        let k = w / total;
        for (acc, v) in s.iter_mut().zip(b.samples()) {
            *acc += k * v;
        }
    }
    let s_est = x.with_samples(s)?;
    let r_rn = x.sub(&s_est)?;
    Ok((s_est, r_rn))
}

/// Over-subtraction factor from the estimated SNR: `alpha_max` at or below
/// `snr_lo_db`, `alpha_min` at or above `snr_hi_db`, linear in between.
pub fn adapt_strength(snr_est_db: f64, cfg: &MabeConfig) -> f64 {
    if snr_est_db <= cfg.snr_lo_db {
        cfg.alpha_max
    } else if snr_est_db >= cfg.snr_hi_db {
        cfg.alpha_min
    } else {
        let t = (snr_est_db - cfg.snr_lo_db) / (cfg.snr_hi_db - cfg.snr_lo_db);
        cfg.alpha_max + t * (cfg.alpha_min - cfg.alpha_max)
    }
}

/// Selected noise fragment of the residual.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReference {
    /// `[start, end)` in samples.
    pub span: (usize, usize),
    pub reference: Waveform,
}

fn window_lengths(len_s: f64, hop_s: f64, rate: u32) -> (usize, usize) {
    let win = ((len_s * rate as f64) as usize).max(1);
    let hop = ((hop_s * rate as f64) as usize).max(1);
    (win, hop)
}

/// Sliding-window scores used by [`select_noise_reference`]: for each
/// window start, the fraction of the window's energy inside the band union.
/// Empty when the residual is shorter than one window.
pub fn noise_reference_scores(r_rn: &Waveform, cfg: &MabeConfig) -> Vec<(usize, f64)> {
    let (win, hop) = window_lengths(cfg.noise_win_s, cfg.noise_hop_s, r_rn.sample_rate());
    if r_rn.len() < win {
        return Vec::new();
    }
    let union = cfg.band_union();
    let rate = r_rn.sample_rate() as f64;
    let fft = RealFftPlanner::<f64>::new().plan_fft_forward(win);
    let mut input = fft.make_input_vec();
    let mut spec = fft.make_output_vec();
    let in_union: Vec<bool> = (0..spec.len())
        .map(|k| union.contains(k as f64 * rate / win as f64))
        .collect();

    let starts = (0..=(r_rn.len() - win)).step_by(hop);
    starts
        .map(|start| {
            input.copy_from_slice(&r_rn.samples()[start..start + win]);
            fft.process(&mut input, &mut spec)
                .expect("buffer sizes come from the planner");
            let mut total = 0.0;
            let mut inside = 0.0;
            for (c, &is_in) in spec.iter().zip(&in_union) {
                let p = c.norm_sqr();
                total += p;
                if is_in {
                    inside += p;
                }
            }
            let score = if total > 0.0 { inside / total } else { 0.0 };
            (start, score)
        })
        .collect()
}

/// Picks the residual window with the least energy share inside the band
/// union (least call content). Ties go to the earliest window; a residual
/// shorter than one window is used whole.
pub fn select_noise_reference(r_rn: &Waveform, cfg: &MabeConfig) -> Result<NoiseReference> {
    let (win, _) = window_lengths(cfg.noise_win_s, cfg.noise_hop_s, r_rn.sample_rate());
    let scores = noise_reference_scores(r_rn, cfg);
    let Some(&(first_start, first_score)) = scores.first() else {
        return Ok(NoiseReference {
            span: (0, r_rn.len()),
            reference: r_rn.clone(),
        });
    };
    let (start, _) = scores
        .iter()
        .skip(1)
        .fold((first_start, first_score), |best, &(s, score)| {
            if score < best.1 {
                (s, score)
            } else {
                best
            }
        });
    Ok(NoiseReference {
        span: (start, start + win),
        reference: r_rn.slice(start, start + win)?,
    })
}

/// Multi-band adaptive enhancement.
///
/// 1. band-pass `x` into each configured band and weight every band;
/// 2. recombine into `s_est`, leaving the residual `r_rn = x - s_est`;
/// 3. estimate SegSNR(`s_est`, `r_rn`) and map it to an over-subtraction
///    factor;
/// 4. pick a noise fragment from the residual and spectrally subtract its
///    mean PSD from the residual only;
/// 5. return the peak-limited `s_est + r_clean`.
pub fn mabe_enhance(x: &Waveform, cfg: &MabeConfig) -> Result<EnhancementResult> {
    cfg.validate(x.sample_rate())?;
    if x.len() < cfg.stft.fft_size() {
        return Err(Error::TooShort {
            len: x.len(),
            needed: cfg.stft.fft_size(),
        });
    }

    let mut band_signals = Vec::with_capacity(cfg.bands.len());
    let mut band_weights = Vec::with_capacity(cfg.bands.len());
    for &band in &cfg.bands {
        let b = bandpass_filter(x, band)?;
        let w = adaptive_weight(&b, x, band, cfg)?;
        band_signals.push(b);
        band_weights.push((band, w));
    }
    let weights: Vec<f64> = band_weights.iter().map(|(_, w)| *w).collect();
    let (s_est, r_rn) = reconstruct_weighted(x, &band_signals, &weights)?;

    let frame_len = cfg.segsnr_frame_len.min(x.len());
    let snr_est_db = seg_snr(&s_est, &r_rn, frame_len)?;
    let alpha_prime = adapt_strength(snr_est_db, cfg);

    let noise_ref = select_noise_reference(&r_rn, cfg)?;
    let noise_psd =
        NoisePsdEstimate::from_fragment(&noise_ref.reference, cfg.stft, NoiseSource::ReferenceFragment)?;
    let r_clean = spectral_subtract(&r_rn, &noise_psd, alpha_prime, cfg.spectral_floor_beta)?;

    let enhanced = peak_normalize(&s_est.add(&r_clean)?, cfg.normalize_ceiling)?;
    Ok(EnhancementResult {
        enhanced,
        band_weights,
        snr_est_db: Some(snr_est_db),
        alpha_prime: Some(alpha_prime),
        noise_ref_span: noise_ref.span,
        method: Method::Mabe,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::PI;

    const FS: u32 = 22050;

    fn tone(freq: f64, amp: f64, len: usize) -> Vec<f64> {
        (0..len)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / FS as f64).sin())
            .collect()
    }

    fn wave(s: Vec<f64>) -> Waveform {
        Waveform::new(s, FS).unwrap()
    }

    fn white(len: usize, sigma: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, sigma).unwrap();
        (0..len).map(|_| n.sample(&mut rng)).collect()
    }

    fn db(a: f64, b: f64) -> f64 {
        10.0 * (a / b).log10()
    }

    #[test]
    fn proxy_split_of_in_band_tone() {
        let x = wave(tone(4000.0, 0.5, 44100));
        let (s, n) = split_signal_noise_proxy(&x).unwrap();
        assert!(db(n.energy(), x.energy()) <= -35.0, "{}", db(n.energy(), x.energy()));
        assert!(db(s.energy(), x.energy()).abs() < 0.1);
    }

    #[test]
    fn proxy_split_of_out_of_band_tone() {
        let x = wave(tone(500.0, 0.5, 44100));
        let (s, n) = split_signal_noise_proxy(&x).unwrap();
        assert!(db(s.energy(), x.energy()) <= -35.0, "{}", db(s.energy(), x.energy()));
        assert!(db(n.energy(), x.energy()).abs() < 0.1);
    }

    #[test]
    fn proxy_split_of_silence() {
        let x = Waveform::zeros(4096, FS).unwrap();
        let (s, n) = split_signal_noise_proxy(&x).unwrap();
        assert!(s.samples().iter().chain(n.samples()).all(|&v| v == 0.0));
    }

    #[test]
    fn weight_of_tonal_band_with_half_the_energy() {
        let a = tone(2250.0, 0.5, 44100);
        let b = tone(500.0, 0.5, 44100);
        let x = wave(a.iter().zip(&b).map(|(p, q)| p + q).collect());
        let cfg = MabeConfig::default();
        let band = DEFAULT_BANDS[0];
        let bs = bandpass_filter(&x, band).unwrap();
        let sf = spectral_flatness(&bs, band, &cfg.stft).unwrap();
        assert!(sf < 0.01, "{sf}");
        let w = adaptive_weight(&bs, &x, band, &cfg).unwrap();
        assert!((w - 1.0).abs() <= 0.1, "{w}");
    }

    #[test]
    fn weight_of_empty_band_is_floor() {
        let x = wave(tone(500.0, 0.5, 8192));
        let cfg = MabeConfig::default();
        let silent = Waveform::zeros(8192, FS).unwrap();
        assert_eq!(spectral_flatness(&silent, DEFAULT_BANDS[3], &cfg.stft).unwrap(), 1.0);
        let w = adaptive_weight(&silent, &x, DEFAULT_BANDS[3], &cfg).unwrap();
        assert!((w - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_input_gives_uniform_floor_weights() {
        let x = Waveform::zeros(8192, FS).unwrap();
        let cfg = MabeConfig::default();
        for band in DEFAULT_BANDS {
            let b = bandpass_filter(&x, band).unwrap();
            assert_eq!(adaptive_weight(&b, &x, band, &cfg).unwrap(), cfg.weight_floor);
        }
    }

    #[test]
    fn symmetric_bands_get_equal_weights() {
        let x = wave(white(8192, 0.1, 1));
        let cfg = MabeConfig::default();
        let band = DEFAULT_BANDS[1];
        let b = bandpass_filter(&x, band).unwrap();
        let w = adaptive_weight(&b, &x, band, &cfg).unwrap();
        let bands = vec![b.clone(), b.clone(), b.clone(), b];
        let weights = vec![w; 4];
        let (s, _) = reconstruct_weighted(&x, &bands, &weights).unwrap();
        let total: f64 = weights.iter().sum();
        for wi in &weights {
            assert!((wi / total - 0.25).abs() < 1e-15);
        }
        for (p, q) in s.samples().iter().zip(bands[0].samples()) {
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn reconstruction_identities() {
        let x = wave(white(4096, 0.2, 2));
        let b0 = wave(white(4096, 0.1, 3));
        let (s, r) = reconstruct_weighted(&x, std::slice::from_ref(&b0), &[1.0]).unwrap();
        assert_eq!(s.samples(), b0.samples());
        for ((si, ri), xi) in s.samples().iter().zip(r.samples()).zip(x.samples()) {
            assert!((si + ri - xi).abs() <= 1e-12);
        }
        let (s2, _) = reconstruct_weighted(&x, &[b0.clone(), b0.clone()], &[0.3, 1.7]).unwrap();
        for (p, q) in s2.samples().iter().zip(b0.samples()) {
            assert!((p - q).abs() < 1e-15);
        }
        assert!(reconstruct_weighted(&x, &[b0.clone()], &[0.0]).is_err());
        assert!(reconstruct_weighted(&x, &[b0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn strength_ramp() {
        let cfg = MabeConfig::default();
        assert_eq!(adapt_strength(-5.0, &cfg), 3.0);
        assert_eq!(adapt_strength(0.0, &cfg), 3.0);
        assert_eq!(adapt_strength(10.0, &cfg), 2.0);
        assert_eq!(adapt_strength(20.0, &cfg), 1.0);
        assert_eq!(adapt_strength(25.0, &cfg), 1.0);
    }

    #[test]
    fn noise_reference_avoids_chirp_window() {
        let cfg = MabeConfig::default();
        let len = 44100;
        let mut s = tone(200.0, 0.3, len);
        // Burst confined to [0.8 s, 0.95 s), covered only by windows 2 and 3
        // (starts at 0.5 s and 0.75 s).
        let (b0, b1) = (17640, 20947);
        for (i, v) in s.iter_mut().enumerate().take(b1).skip(b0) {
            *v += 0.3 * (2.0 * PI * 3000.0 * i as f64 / FS as f64).sin();
        }
        let r = wave(s);
        let scores = noise_reference_scores(&r, &cfg);
        let chosen = select_noise_reference(&r, &cfg).unwrap();
        let chosen_idx = scores.iter().position(|(st, _)| *st == chosen.span.0).unwrap();
        assert_ne!(chosen_idx, 3);
        assert!(scores[3].1 > scores[chosen_idx].1);
        assert_eq!(chosen.span.1 - chosen.span.0, 11025);
        assert_eq!(chosen.reference.len(), 11025);
    }

    #[test]
    fn noise_reference_ties_go_to_earliest() {
        let cfg = MabeConfig::default();
        // Period of 5512 samples (= window hop), so every window holds the
        // same samples.
        let period = white(5512, 0.1, 5);
        let s: Vec<f64> = (0..44100).map(|i| period[i % 5512]).collect();
        let chosen = select_noise_reference(&wave(s), &cfg).unwrap();
        assert_eq!(chosen.span, (0, 11025));

        let z = Waveform::zeros(44100, FS).unwrap();
        assert_eq!(select_noise_reference(&z, &cfg).unwrap().span, (0, 11025));
    }

    #[test]
    fn short_residual_used_whole() {
        let cfg = MabeConfig::default();
        let r = wave(white(8820, 0.1, 6));
        let chosen = select_noise_reference(&r, &cfg).unwrap();
        assert_eq!(chosen.span, (0, 8820));
        assert_eq!(chosen.reference, r);
    }

    #[test]
    fn clean_tone_is_nearly_unchanged() {
        let x = wave(tone(3000.0, 0.5, 44100));
        let r = mabe_enhance(&x, &MabeConfig::default()).unwrap();
        let isd = crate::metrics::isd(&x, &r.enhanced).unwrap();
        assert!(isd <= 0.2, "{isd}");
    }

    #[test]
    fn white_noise_loses_energy() {
        let x = wave(white(44100, 0.1, 7));
        let r = mabe_enhance(&x, &MabeConfig::default()).unwrap();
        assert!(r.enhanced.energy() < x.energy());
        let a = r.alpha_prime.unwrap();
        assert!((1.0..=3.0).contains(&a));
        assert!(r.noise_ref_span.1 <= x.len());
        let sum: f64 = r.normalized_weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mabe_is_deterministic_and_peak_limited() {
        let mut s = white(44100, 0.4, 8);
        s.iter_mut().zip(tone(3500.0, 0.8, 44100)).for_each(|(a, b)| *a += b);
        let x = wave(s);
        let cfg = MabeConfig::default();
        let a = mabe_enhance(&x, &cfg).unwrap();
        let b = mabe_enhance(&x, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.enhanced.peak() <= cfg.normalize_ceiling);
    }

    #[test]
    fn config_validation() {
        let mut cfg = MabeConfig::default();
        assert!(cfg.validate(FS).is_ok());
        cfg.alpha_min = 4.0;
        assert!(cfg.validate(FS).is_err());
        let mut cfg = MabeConfig::default();
        cfg.bands.clear();
        assert!(cfg.validate(FS).is_err());
        let mut cfg = MabeConfig::default();
        cfg.noise_hop_s = 1.0;
        assert!(cfg.validate(FS).is_err());
        let mut cfg = MabeConfig::default();
        cfg.spectral_floor_beta = 1.0;
        assert!(cfg.validate(FS).is_err());
        // The top band does not fit under an 8 kHz Nyquist.
        assert!(MabeConfig::default().validate(16000).is_err());
    }
}
