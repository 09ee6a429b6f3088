use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use realfft::RealFftPlanner;

use crate::error::{Error, Result};
use crate::signal::Waveform;

const HUM_HZ: f64 = 150.0;
const HUM_HARMONICS: u32 = 5;
/// Amplitude of the white floor under the hum, relative to the fundamental.
const HUM_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseKind {
    White,
    Pink,
    LowHum,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::White, NoiseKind::Pink, NoiseKind::LowHum];

    pub fn id(self) -> &'static str {
        match self {
            NoiseKind::White => "white",
            NoiseKind::Pink => "pink",
            NoiseKind::LowHum => "lowhum",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "white" => Ok(NoiseKind::White),
            "pink" => Ok(NoiseKind::Pink),
            "lowhum" | "low-hum" | "hum" => Ok(NoiseKind::LowHum),
            _ => Err(Error::param(format!("unknown noise kind '{s}'"))),
        }
    }
}

fn gaussian(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// White noise shaped by a `1/sqrt(f)` magnitude response (DC removed).
fn pink(len: usize, sample_rate: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut planner = RealFftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut buf = gaussian(len, rng);
    let mut spec = fwd.make_output_vec();
    fwd.process(&mut buf, &mut spec).expect("planner-sized buffers");
    spec[0] = Default::default();
    for (k, c) in spec.iter_mut().enumerate().skip(1) {
        let f = k as f64 * sample_rate as f64 / len as f64;
        *c /= f.sqrt();
    }
    if len % 2 == 0 {
        if let Some(last) = spec.last_mut() {
            last.im = 0.0;
        }
    }
    inv.process(&mut spec, &mut buf).expect("planner-sized buffers");
    buf
}

fn low_hum(len: usize, sample_rate: u32, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let phases: Vec<f64> = (0..HUM_HARMONICS).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let floor = gaussian(len, rng);
    (0..len)
        .map(|i| {
            let t = i as f64 / sample_rate as f64;
            let hum: f64 = (1..=HUM_HARMONICS)
                .zip(&phases)
                .map(|(h, ph)| (2.0 * PI * HUM_HZ * h as f64 * t + ph).sin() / h as f64)
                .sum();
            hum + HUM_FLOOR * floor[i]
        })
        .collect()
}

/// Background noise of `len` samples scaled to unit RMS; deterministic in
/// `seed`. `LowHum` is a 150 Hz tone with four harmonics over a weak white
/// floor.
pub fn gen_noise(kind: NoiseKind, len: usize, sample_rate: u32, seed: u64) -> Result<Waveform> {
    if len == 0 {
        return Err(Error::Empty("noise length"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = match kind {
        NoiseKind::White => gaussian(len, &mut rng),
        NoiseKind::Pink => pink(len, sample_rate, &mut rng),
        NoiseKind::LowHum => low_hum(len, sample_rate, &mut rng),
    };
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / len as f64).sqrt();
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v /= rms);
    }
    Waveform::new(x, sample_rate)
}
