//! Mono WAV reading and writing.

use std::path::Path;

use crate::error::{Error, Result};

/// Sample encoding for written files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WavFormat {
    #[default]
    Pcm16,
    Float32,
}

impl std::str::FromStr for WavFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pcm16" | "i16" | "16" => Ok(WavFormat::Pcm16),
            "float32" | "f32" | "32f" => Ok(WavFormat::Float32),
            _ => Err(Error::invalid(format!("unknown wav format `{s}` (use pcm16 or float32)"))),
        }
    }
}

fn wav_err(path: &Path) -> impl FnOnce(hound::Error) -> Error + '_ {
    move |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_wav(path: &Path, samples: &[f32], sample_rate_hz: u32, format: WavFormat) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: sample_rate_hz,
        bits_per_sample: match format {
            WavFormat::Pcm16 => 16,
            WavFormat::Float32 => 32,
        },
        sample_format: match format {
            WavFormat::Pcm16 => hound::SampleFormat::Int,
            WavFormat::Float32 => hound::SampleFormat::Float,
        },
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(wav_err(path))?;
    for &s in samples {
        match format {
            WavFormat::Pcm16 => w.write_sample((s.clamp(-1.0, 1.0) * i16::MAX as f32).round() as i16),
            WavFormat::Float32 => w.write_sample(s),
        }
        .map_err(wav_err(path))?;
    }
    w.finalize().map_err(wav_err(path))
}

/// Reads a WAV file as mono floats in [-1, 1]; multichannel input is averaged.
pub fn read_wav(path: &Path) -> Result<(Vec<f32>, u32)> {
    let mut r = hound::WavReader::open(path).map_err(wav_err(path))?;
    let spec = r.spec();
    let interleaved: Vec<f32> = match spec.sample_format {
        hound::SampleFormat::Float => r.samples::<f32>().collect::<std::result::Result<_, _>>(),
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f32;
            r.samples::<i32>()
                .map(|s| s.map(|v| v as f32 * scale))
                .collect::<std::result::Result<_, _>>()
        }
    }
    .map_err(wav_err(path))?;
    let ch = spec.channels.max(1) as usize;
    let mono = interleaved
        .chunks(ch)
        .map(|f| f.iter().sum::<f32>() / ch as f32)
        .collect();
    Ok((mono, spec.sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let x: Vec<f32> = (0..100).map(|i| ((i as f32) * 0.1).sin() * 0.9).collect();
        for (fmt, tol) in [(WavFormat::Pcm16, 1.0 / 16_000.0), (WavFormat::Float32, 0.0)] {
            let p = dir.path().join(format!("{fmt:?}.wav"));
            write_wav(&p, &x, 16_000, fmt).unwrap();
            let (y, sr) = read_wav(&p).unwrap();
            assert_eq!(sr, 16_000);
            assert_eq!(y.len(), x.len());
            assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() <= tol));
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        let e = read_wav(Path::new("/nonexistent/x.wav")).unwrap_err();
        assert_eq!(e.kind(), crate::ErrorKind::Io);
    }

    #[test]
    fn parses_format_names() {
        assert_eq!("f32".parse::<WavFormat>().unwrap(), WavFormat::Float32);
        assert!("mp3".parse::<WavFormat>().is_err());
    }
}
