//! Bird-call enhancement.
//!
//! [`mabe_enhance`] is the multi-band adaptive enhancer: the input is split
//! into overlapping bands, recombined with adaptive weights into a signal
//! estimate, and only the residual is denoised by spectral subtraction
//! against an automatically selected noise fragment. The three classical
//! full-spectrum baselines ([`specsub_baseline`] and [`mmse_enhance`]) are
//! provided for comparison.

mod mabe;
mod mmse;
pub mod special;
mod subtract;

use std::fmt;
use std::str::FromStr;

pub use mabe::{
    adapt_strength, adaptive_weight, mabe_enhance, noise_reference_scores, reconstruct_weighted,
    select_noise_reference, spectral_flatness, split_signal_noise_proxy, MabeConfig,
    NoiseReference, DEFAULT_BANDS, PROXY_BAND,
};
pub use mmse::{
    lsa_gain, mmse_enhance, stsa_gain, MmseMode, DD_SMOOTHING, GAIN_MAX, GAIN_MIN, XI_MIN_DB,
};
pub use subtract::{
    spectral_subtract, specsub_baseline, subtract_frames, NoisePsdEstimate, NoiseSource,
    BASELINE_NOISE_S, SPECSUB_ALPHA,
};

use crate::error::{Error, Result};
use crate::signal::{BandSpec, Waveform};

/// Spectral floor shared by every subtraction-based method (-20 dB).
pub const DEFAULT_SPECTRAL_FLOOR: f64 = 0.01;

/// Peak ceiling applied to every enhancer output.
pub const DEFAULT_CEILING: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    SpecSub,
    MmseStsa,
    MmseLsa,
    Mabe,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::SpecSub,
        Method::MmseStsa,
        Method::MmseLsa,
        Method::Mabe,
    ];

    /// Short identifier used in file names and on the command line.
    pub fn id(self) -> &'static str {
        match self {
            Method::Mabe => "mabe",
            Method::SpecSub => "specsub",
            Method::MmseStsa => "mmse-stsa",
            Method::MmseLsa => "mmse-lsa",
        }
    }

    /// Row label for comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Mabe => "MABE",
            Method::SpecSub => "Spectral Subtraction",
            Method::MmseStsa => "MMSE-STSA",
            Method::MmseLsa => "MMSE-LSA",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        match norm.as_str() {
            "mabe" => Ok(Method::Mabe),
            "specsub" | "spectral-subtraction" => Ok(Method::SpecSub),
            "mmse-stsa" | "mmsestsa" | "stsa" => Ok(Method::MmseStsa),
            "mmse-lsa" | "mmselsa" | "lsa" => Ok(Method::MmseLsa),
            _ => Err(Error::param(format!("unknown enhancement method '{s}'"))),
        }
    }
}

/// Enhanced waveform plus the diagnostics of the run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancementResult {
    pub enhanced: Waveform,
    /// Raw (unnormalised) band weights; empty for the baselines.
    pub band_weights: Vec<(BandSpec, f64)>,
    /// Estimated SegSNR of the signal estimate against the residual, in dB.
    /// Only MABE estimates it.
    pub snr_est_db: Option<f64>,
    /// Over-subtraction factor actually used, if the method has one.
    pub alpha_prime: Option<f64>,
    /// Sample span `[start, end)` the noise estimate was taken from.
    pub noise_ref_span: (usize, usize),
    pub method: Method,
}

impl EnhancementResult {
    /// Band weights divided by their sum.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let total: f64 = self.band_weights.iter().map(|(_, w)| w).sum();
        self.band_weights.iter().map(|(_, w)| w / total).collect()
    }
}

/// Runs `method` on `x`; `cfg` is only consulted by MABE.
pub fn enhance(x: &Waveform, method: Method, cfg: &MabeConfig) -> Result<EnhancementResult> {
    match method {
        Method::Mabe => mabe_enhance(x, cfg),
        Method::SpecSub => specsub_baseline(x),
        Method::MmseStsa => mmse_enhance(x, MmseMode::Stsa),
        Method::MmseLsa => mmse_enhance(x, MmseMode::Lsa),
    }
}
