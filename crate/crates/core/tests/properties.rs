use birdcall::enhance::{
    adapt_strength, adaptive_weight, enhance, mabe_enhance, reconstruct_weighted, subtract_frames, MabeConfig, Method,
    DEFAULT_BANDS,
};
use birdcall::metrics::{seg_snr_active, SEGSNR_FRAME_LEN};
use birdcall::signal::{bandpass_filter, stft, StftParams, Waveform};
use birdcall::synth::{corpus_clip, gen_call, gen_noise, mix_at_segsnr, CallSpec, NoiseKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_wave(len: usize, seed: u64) -> Waveform {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Waveform::new((0..len).map(|_| rng.random_range(-0.5..0.5)).collect(), 22050).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weighted_decomposition_is_exact(seed in any::<u64>(), ws in prop::collection::vec(0.0f64..5.0, 4)) {
        prop_assume!(ws.iter().sum::<f64>() > 0.0);
        let x = random_wave(6000, seed);
        let bands: Vec<_> = DEFAULT_BANDS.iter().map(|b| bandpass_filter(&x, *b).unwrap()).collect();
        let (s, r) = reconstruct_weighted(&x, &bands, &ws).unwrap();
        for ((a, b), c) in s.samples().iter().zip(r.samples()).zip(x.samples()) {
            prop_assert!((a + b - c).abs() <= 1e-12);
        }
    }

    #[test]
    fn weights_are_positive_and_normalise(seed in any::<u64>()) {
        let cfg = MabeConfig::default();
        let x = random_wave(6000, seed);
        let ws: Vec<f64> = DEFAULT_BANDS
            .iter()
            .map(|b| adaptive_weight(&bandpass_filter(&x, *b).unwrap(), &x, *b, &cfg).unwrap())
            .collect();
        prop_assert!(ws.iter().all(|w| *w >= cfg.weight_floor && *w <= 2.0));
        let total: f64 = ws.iter().sum();
        prop_assert!((ws.iter().map(|w| w / total).sum::<f64>() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn strength_is_monotone(a in -40.0f64..60.0, b in -40.0f64..60.0) {
        let cfg = MabeConfig::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(adapt_strength(lo, &cfg) >= adapt_strength(hi, &cfg));
        prop_assert!((cfg.alpha_min..=cfg.alpha_max).contains(&adapt_strength(a, &cfg)));
    }

    #[test]
    fn subtraction_respects_floor_and_ceiling(seed in any::<u64>(), alpha in 0.0f64..6.0, scale in 0.0f64..4.0) {
        let beta = 0.01;
        let p = StftParams::default();
        let frames = stft(&random_wave(5000, seed), &p).unwrap();
        let noise: Vec<f64> = frames.mean_power().iter().map(|v| v * scale).collect();
        let out = subtract_frames(&frames, &noise, alpha, beta).unwrap();
        for (fo, fi) in out.frames.iter().zip(&frames.frames) {
            for (o, i) in fo.iter().zip(fi) {
                prop_assert!(o.norm() >= beta.sqrt() * i.norm() * (1.0 - 1e-12));
                prop_assert!(o.norm() <= i.norm() * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn every_method_is_length_preserving_and_peak_limited() {
    let clip = corpus_clip(3, 99, -5.0).unwrap();
    for m in Method::ALL {
        let y = enhance(&clip.mix.mix, m, &MabeConfig::default()).unwrap().enhanced;
        assert_eq!(y.len(), clip.mix.mix.len());
        assert!(y.peak() <= 0.99 + 1e-12, "{m}: {}", y.peak());
    }
}

#[test]
fn mabe_diagnostics_are_consistent() {
    let cfg = MabeConfig::default();
    let clip = corpus_clip(7, 5, -5.0).unwrap();
    let r = mabe_enhance(&clip.mix.mix, &cfg).unwrap();
    let alpha = r.alpha_prime.unwrap();
    assert_eq!(alpha, adapt_strength(r.snr_est_db.unwrap(), &cfg));
    assert!((r.normalized_weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let (s, e) = r.noise_ref_span;
    assert!(s < e && e <= clip.mix.mix.len());
    assert_eq!(r, mabe_enhance(&clip.mix.mix, &cfg).unwrap());
}

#[test]
fn mixes_remeasure_through_metrics() {
    for (i, spec) in CallSpec::presets().iter().enumerate() {
        let clean = gen_call(spec).unwrap();
        let kind = NoiseKind::ALL[i % 3];
        let noise = gen_noise(kind, clean.len(), 22050, i as u64).unwrap();
        for target in [-5.0, 0.0, 15.0] {
            let m = mix_at_segsnr(&clean, &noise, target).unwrap().with_headroom(0.99).unwrap();
            let got = seg_snr_active(&m.clean, &m.noise, SEGSNR_FRAME_LEN).unwrap();
            assert!((got - target).abs() < 0.1, "{} {kind} {target}: {got}", spec.name);
            assert!(m.mix.peak() <= 0.99);
        }
    }
}
