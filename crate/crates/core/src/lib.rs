//! Bird-call enhancement and generative-audio evaluation.
//!
//! - [`signal`]: waveform type, WAV I/O, STFT, FIR band-pass, normalisation
//! - [`enhance`]: multi-band adaptive enhancement and three classical baselines
//! - [`metrics`]: SegSNR, Itakura–Saito distance, feature JSD/NDB, Fréchet distance
//! - [`synth`]: synthetic bird-call corpus with exact clean/noise ground truth,
//!   plus the traditional augmentation operations

pub mod enhance;
pub mod error;
pub mod metrics;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use signal::Waveform;
