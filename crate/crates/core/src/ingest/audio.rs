use std::path::Path;

use crate::error::{Error, Result};

use super::resample::resample;
use super::ANALYSIS_RATE;

/// Mono audio at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub source_id: String,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32, source_id: impl Into<String>) -> Self {
        AudioBuffer {
            samples,
            sample_rate,
            source_id: source_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }
}

/// Decode a 16- or 24-bit PCM WAV file, mix it down to mono, and resample it
/// to [`ANALYSIS_RATE`]. The result is peak-normalized only if it clips.
pub fn load_audio(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })?;
    let spec = reader.spec();
    let unsupported = |reason: String| Error::UnsupportedEncoding {
        path: path.to_path_buf(),
        reason,
    };
    if spec.sample_format != hound::SampleFormat::Int {
        return Err(unsupported("floating-point samples".into()));
    }
    if spec.bits_per_sample != 16 && spec.bits_per_sample != 24 {
        return Err(unsupported(format!("{}-bit samples", spec.bits_per_sample)));
    }
    if spec.channels == 0 || spec.channels > 2 {
        return Err(unsupported(format!("{} channels", spec.channels)));
    }
    let scale = 1.0 / (1u32 << (spec.bits_per_sample - 1)) as f32;
    let interleaved: Vec<f32> = reader
        .samples::<i32>()
        .map(|s| s.map(|v| v as f32 * scale))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;

    let mono: Vec<f32> = if spec.channels == 2 {
        interleaved
            .chunks_exact(2)
            .map(|lr| 0.5 * (lr[0] + lr[1]))
            .collect()
    } else {
        interleaved
    };
    let id = path.to_string_lossy().into_owned();
    if mono.is_empty() {
        return Err(Error::EmptyAudio(id));
    }

    let mut samples = if spec.sample_rate == ANALYSIS_RATE {
        mono
    } else {
        resample(&mono, spec.sample_rate, ANALYSIS_RATE)?
    };
    if samples.is_empty() {
        return Err(Error::EmptyAudio(id));
    }
    let peak = samples.iter().fold(0.0f32, |m, s| m.max(s.abs()));
    if peak > 1.0 {
        let g = 1.0 / peak;
        samples.iter_mut().for_each(|s| *s *= g);
    }
    Ok(AudioBuffer::new(samples, ANALYSIS_RATE, id))
}

/// Write a mono 16-bit PCM WAV file. Samples are clamped to [-1, 1].
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let map_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Decode {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    };
    let mut w = hound::WavWriter::create(path, spec).map_err(map_err)?;
    for &s in &audio.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        w.write_sample(v).map_err(map_err)?;
    }
    w.finalize().map_err(map_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_stereo(path: &Path, rate: u32, bits: u16, frames: &[(f32, f32)]) {
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: rate,
            bits_per_sample: bits,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        let full = ((1u32 << (bits - 1)) - 1) as f32;
        for &(l, r) in frames {
            w.write_sample((l * full).round() as i32).unwrap();
            w.write_sample((r * full).round() as i32).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn stereo_silence_at_44k() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        write_stereo(&p, 44_100, 16, &vec![(0.0, 0.0); 44_100]);
        let a = load_audio(&p).unwrap();
        assert_eq!(a.sample_rate, 22_050);
        assert_eq!(a.len(), 22_050);
        assert!(a.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn antiphase_cancels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("anti.wav");
        let frames: Vec<(f32, f32)> = (0..8000)
            .map(|i| {
                let v = 0.5 * (i as f32 * 0.05).sin();
                (v, -v)
            })
            .collect();
        write_stereo(&p, 44_100, 24, &frames);
        let a = load_audio(&p).unwrap();
        assert!(a.samples.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn rejects_zero_length_and_float() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("empty.wav");
        write_stereo(&p, 22_050, 16, &[]);
        assert!(matches!(load_audio(&p), Err(Error::EmptyAudio(_))));

        let pf = dir.path().join("f.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 22_050,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&pf, spec).unwrap();
        w.write_sample(0.1f32).unwrap();
        w.finalize().unwrap();
        assert!(matches!(load_audio(&pf), Err(Error::UnsupportedEncoding { .. })));

        let garbage = dir.path().join("g.wav");
        std::fs::write(&garbage, b"not a wav file at all").unwrap();
        assert!(matches!(load_audio(&garbage), Err(Error::Decode { .. })));
        assert!(matches!(load_audio(dir.path().join("nope.wav")), Err(Error::Io { .. })));
    }

    #[test]
    fn wav_round_trip_at_analysis_rate() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.wav");
        let samples: Vec<f32> = (0..2205).map(|i| 0.3 * (i as f32 * 0.1).sin()).collect();
        write_wav(&p, &AudioBuffer::new(samples.clone(), 22_050, "x")).unwrap();
        let back = load_audio(&p).unwrap();
        assert_eq!(back.len(), samples.len());
        for (a, b) in back.samples.iter().zip(&samples) {
            assert!((a - b).abs() < 1e-4);
        }
    }
}
