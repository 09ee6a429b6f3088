use crate::error::{Error, Result};
use crate::signal::{stft, StftParams, Waveform};

pub const FEATURE_DIM: usize = 10;

/// Column names, in [`FeatureVector::to_array`] order.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "mean_amp",
    "std_amp",
    "max_abs_amp",
    "mean_abs_amp",
    "zcr",
    "mean_mag",
    "std_mag",
    "dom_freq_pos",
    "total_spec_energy",
    "spectral_centroid_hz",
];

/// Five temporal and five spectral clip descriptors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVector {
    pub mean_amp: f64,
    pub std_amp: f64,
    pub max_abs_amp: f64,
    pub mean_abs_amp: f64,
    /// Sign changes per adjacent sample pair, in `[0, 1]`.
    pub zcr: f64,
    pub mean_mag: f64,
    pub std_mag: f64,
    /// Dominant bin over the highest bin index, in `[0, 1]`.
    pub dom_freq_pos: f64,
    pub total_spec_energy: f64,
    pub spectral_centroid_hz: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_DIM] {
        [
            self.mean_amp,
            self.std_amp,
            self.max_abs_amp,
            self.mean_abs_amp,
            self.zcr,
            self.mean_mag,
            self.std_mag,
            self.dom_freq_pos,
            self.total_spec_energy,
            self.spectral_centroid_hz,
        ]
    }

    pub fn from_array(a: [f64; FEATURE_DIM]) -> Self {
        FeatureVector {
            mean_amp: a[0],
            std_amp: a[1],
            max_abs_amp: a[2],
            mean_abs_amp: a[3],
            zcr: a[4],
            mean_mag: a[5],
            std_mag: a[6],
            dom_freq_pos: a[7],
            total_spec_energy: a[8],
            spectral_centroid_hz: a[9],
        }
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        let a: [f64; FEATURE_DIM] = v.try_into().map_err(|_| {
            Error::DimensionMismatch(format!("feature row has {} values, need {FEATURE_DIM}", v.len()))
        })?;
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("feature vector"));
        }
        Ok(Self::from_array(a))
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Computes the ten descriptors of `w`.
///
/// Temporal statistics use the raw samples (population standard
/// deviation). Spectral statistics use the frame-averaged STFT magnitude
/// spectrum (1024-point Hann, hop 256); clips shorter than a frame are
/// zero-padded. A silent clip yields all zeros.
pub fn extract_features(w: &Waveform) -> Result<FeatureVector> {
    let x = w.samples();
    let (mean_amp, std_amp) = mean_std(x);
    let max_abs_amp = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mean_abs_amp = x.iter().map(|v| v.abs()).sum::<f64>() / x.len() as f64;
    let zcr = if x.len() > 1 {
        let changes = x.windows(2).filter(|p| p[0] * p[1] < 0.0).count();
        changes as f64 / (x.len() - 1) as f64
    } else {
        0.0
    };

    let params = StftParams::default();
    let frames = if w.len() >= params.fft_size() {
        stft(w, &params)?
    } else {
        let mut padded = x.to_vec();
        padded.resize(params.fft_size(), 0.0);
        stft(&w.with_samples(padded)?, &params)?
    };
    let bins = params.num_bins();
    let mut mag = vec![0.0; bins];
    for frame in &frames.frames {
        for (m, c) in mag.iter_mut().zip(frame) {
            *m += c.norm();
        }
    }
    let nf = frames.num_frames() as f64;
    mag.iter_mut().for_each(|m| *m /= nf);

    let (mean_mag, std_mag) = mean_std(&mag);
    let total_spec_energy = mag.iter().map(|m| m * m).sum::<f64>();
    let mag_sum: f64 = mag.iter().sum();
    let (dom_freq_pos, spectral_centroid_hz) = if mag_sum > 0.0 {
        let dom = mag
            .iter()
            .enumerate()
            .fold(0, |best, (k, &m)| if m > mag[best] { k } else { best });
        let centroid = mag
            .iter()
            .enumerate()
            .map(|(k, &m)| params.bin_hz(k, w.sample_rate()) * m)
            .sum::<f64>()
            / mag_sum;
        (dom as f64 / (bins - 1) as f64, centroid)
    } else {
        (0.0, 0.0)
    };

    Ok(FeatureVector {
        mean_amp,
        std_amp,
        max_abs_amp,
        mean_abs_amp,
        zcr,
        mean_mag,
        std_mag,
        dom_freq_pos,
        total_spec_energy,
        spectral_centroid_hz,
    })
}
