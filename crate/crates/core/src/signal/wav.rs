use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use log::warn;

use super::{Waveform, CORPUS_SAMPLE_RATE};
use crate::error::{Error, Result};

/// Reads a PCM WAV file as a mono waveform in [-1, 1].
///
/// 8/16/24/32-bit integer and 32-bit float files are accepted. Integer
/// samples are divided by 2^(bits-1), so the most negative code maps to
/// exactly -1.0. Multi-channel files are averaged to mono. Files at rates
/// other than 22.05 kHz are read as-is with a warning.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => wav_err(other),
    })?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::UnsupportedEncoding("zero channels".into()));
    }

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = (1_u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?
        }
        (format, bits) => {
            return Err(Error::UnsupportedEncoding(format!(
                "{format:?} with {bits} bits per sample"
            )))
        }
    };
    if interleaved.is_empty() {
        return Err(Error::Empty("WAV file contains no samples"));
    }

    let mono: Vec<f64> = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    if spec.sample_rate != CORPUS_SAMPLE_RATE {
        warn!(
            "{}: sample rate {} Hz differs from {} Hz; no resampling is performed",
            path.display(),
            spec.sample_rate,
            CORPUS_SAMPLE_RATE
        );
    }
    Waveform::new(mono, spec.sample_rate)
}

/// Writes `w` as 16-bit mono PCM and returns the number of clipped samples.
pub fn write_wav(path: impl AsRef<Path>, w: &Waveform) -> Result<usize> {
    write_samples(path, w.samples(), w.sample_rate())
}

/// Writes raw samples as 16-bit mono PCM. Samples outside [-1, 1] are
/// hard-clipped; the count of clipped samples is returned.
pub fn write_samples(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32) -> Result<usize> {
    let path = path.as_ref();
    if samples.is_empty() {
        return Err(Error::Empty("refusing to write an empty waveform"));
    }
    if sample_rate == 0 {
        return Err(Error::InvalidWaveform("sample rate must be positive".into()));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("samples to write"));
    }
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let wav_err = |e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Wav {
            path: path.to_path_buf(),
            source: other,
        },
    };
    let mut writer = WavWriter::create(path, spec).map_err(wav_err)?;
    let mut clipped = 0;
    for &s in samples {
        if s.abs() > 1.0 {
            clipped += 1;
        }
        writer.write_sample(quantize_i16(s)).map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)?;
    if clipped > 0 {
        warn!("{}: {clipped} samples clipped to full scale", path.display());
    }
    Ok(clipped)
}

fn quantize_i16(s: f64) -> i16 {
    (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}
