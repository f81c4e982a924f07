//! Time-averaged log-mel, MFCC and chroma baselines.
//!
//! STFT: 2048-point Hann frames, hop 512, no padding. Mel: 128 HTK-scale
//! triangular bands on 0–11025 Hz, power in dB with a -100 dB floor. MFCC:
//! orthonormal DCT-II of the log-mel frame, first 40 coefficients. Chroma:
//! STFT power folded onto the nearest equal-tempered pitch class (A = 440 Hz,
//! index 0 = C), L2-normalized per frame.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{FeatureKind, FeatureVector};
use crate::error::{Error, Result};
use crate::ingest::AudioBuffer;
use crate::par::{self, ExecMode};

pub const LOG_FLOOR_DB: f64 = -100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralParams {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub n_mfcc: usize,
    pub f_max: f64,
    #[serde(skip)]
    pub exec: ExecMode,
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams {
            n_fft: 2048,
            hop: 512,
            n_mels: 128,
            n_mfcc: 40,
            f_max: 11_025.0,
            exec: ExecMode::Parallel,
        }
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// `n_mels × (n_fft/2 + 1)` triangular filters and their centre frequencies.
pub fn mel_filterbank(n_fft: usize, rate: f64, n_mels: usize, f_max: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n_freqs = n_fft / 2 + 1;
    let m_max = hz_to_mel(f_max);
    let pts: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(m_max * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bank = (0..n_mels)
        .map(|m| {
            let (lo, c, hi) = (pts[m], pts[m + 1], pts[m + 2]);
            (0..n_freqs)
                .map(|k| {
                    let f = k as f64 * rate / n_fft as f64;
                    let down = (f - lo) / (c - lo);
                    let up = (hi - f) / (hi - c);
                    down.min(up).max(0.0)
                })
                .collect()
        })
        .collect();
    (bank, pts[1..=n_mels].to_vec())
}

fn power_frames(audio: &AudioBuffer, p: &SpectralParams) -> Result<Vec<Vec<f64>>> {
    if audio.len() < p.n_fft {
        return Err(Error::TooShort {
            needed: p.n_fft,
            got: audio.len(),
        });
    }
    let n_frames = (audio.len() - p.n_fft) / p.hop + 1;
    let window: Vec<f64> = (0..p.n_fft)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / p.n_fft as f64).cos())
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(p.n_fft);
    const CHUNK: usize = 64;
    let chunks = par::map_range(p.exec, n_frames.div_ceil(CHUNK), |c| {
        let mut buf = vec![Complex::new(0.0, 0.0); p.n_fft];
        let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        (c * CHUNK..((c + 1) * CHUNK).min(n_frames))
            .map(|f| {
                let off = f * p.hop;
                for (i, z) in buf.iter_mut().enumerate() {
                    *z = Complex::new(audio.samples[off + i] as f64 * window[i], 0.0);
                }
                fft.process_with_scratch(&mut buf, &mut scratch);
                buf[..p.n_fft / 2 + 1].iter().map(|z| z.norm_sqr()).collect::<Vec<f64>>()
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

fn log_mel_frames(frames: &[Vec<f64>], rate: f64, p: &SpectralParams) -> Vec<Vec<f64>> {
    let (bank, _) = mel_filterbank(p.n_fft, rate, p.n_mels, p.f_max);
    frames
        .iter()
        .map(|pw| {
            bank.iter()
                .map(|filt| {
                    let e: f64 = filt.iter().zip(pw).map(|(w, x)| w * x).sum();
                    10.0 * e.max(1e-10).log10()
                })
                .collect()
        })
        .collect()
}

fn dct_ortho(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let s: f64 = x
                .iter()
                .enumerate()
                .map(|(i, &v)| v * (PI * k as f64 * (i as f64 + 0.5) / n).cos())
                .sum();
            s * if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() }
        })
        .collect()
}

fn mean_rows(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows[0].len();
    let mut out = vec![0.0; d];
    for r in rows {
        for (o, v) in out.iter_mut().zip(r) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|v| *v /= rows.len() as f64);
    out
}

fn vector(kind: FeatureKind, values: Vec<f64>, audio: &AudioBuffer) -> FeatureVector {
    FeatureVector {
        kind,
        values,
        recording_id: audio.source_id.clone(),
        segment: 0,
    }
}

pub fn time_avg_mel(audio: &AudioBuffer, p: &SpectralParams) -> Result<FeatureVector> {
    let frames = power_frames(audio, p)?;
    let mel = log_mel_frames(&frames, audio.sample_rate as f64, p);
    Ok(vector(FeatureKind::Mel128, mean_rows(&mel), audio))
}

pub fn time_avg_mfcc(audio: &AudioBuffer, p: &SpectralParams) -> Result<FeatureVector> {
    let frames = power_frames(audio, p)?;
    let mel = log_mel_frames(&frames, audio.sample_rate as f64, p);
    let mfcc: Vec<Vec<f64>> = mel.iter().map(|m| dct_ortho(m, p.n_mfcc)).collect();
    Ok(vector(FeatureKind::Mfcc40, mean_rows(&mfcc), audio))
}

fn chroma_frames(frames: &[Vec<f64>], rate: f64, n_fft: usize) -> Vec<Vec<f64>> {
    let classes: Vec<Option<usize>> = (0..n_fft / 2 + 1)
        .map(|k| {
            let f = k as f64 * rate / n_fft as f64;
            (f >= 27.5).then(|| ((12.0 * (f / 440.0).log2()).round() as i64 + 9).rem_euclid(12) as usize)
        })
        .collect();
    frames
        .iter()
        .map(|pw| {
            let mut c = vec![0.0; 12];
            for (x, cl) in pw.iter().zip(&classes) {
                if let Some(i) = cl {
                    c[*i] += x;
                }
            }
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                c.iter_mut().for_each(|v| *v /= norm);
            }
            c
        })
        .collect()
}

pub fn time_avg_chroma(audio: &AudioBuffer, p: &SpectralParams) -> Result<FeatureVector> {
    let frames = power_frames(audio, p)?;
    let chroma = chroma_frames(&frames, audio.sample_rate as f64, p.n_fft);
    Ok(vector(FeatureKind::Chroma12, mean_rows(&chroma), audio))
}

/// All three baselines from a single STFT pass: (chroma12, mel128, mfcc40).
pub fn spectral_baselines(audio: &AudioBuffer, p: &SpectralParams) -> Result<[FeatureVector; 3]> {
    let frames = power_frames(audio, p)?;
    let rate = audio.sample_rate as f64;
    let mel = log_mel_frames(&frames, rate, p);
    let mfcc: Vec<Vec<f64>> = mel.iter().map(|m| dct_ortho(m, p.n_mfcc)).collect();
    let chroma = chroma_frames(&frames, rate, p.n_fft);
    Ok([
        vector(FeatureKind::Chroma12, mean_rows(&chroma), audio),
        vector(FeatureKind::Mel128, mean_rows(&mel), audio),
        vector(FeatureKind::Mfcc40, mean_rows(&mfcc), audio),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn tones(freqs: &[f64], secs: f64) -> AudioBuffer {
        let n = (secs * 22_050.0) as usize;
        let s = (0..n)
            .map(|i| {
                let t = i as f64 / 22_050.0;
                freqs.iter().map(|f| 0.3 * (2.0 * PI * f * t).sin()).sum::<f64>() as f32
            })
            .collect();
        AudioBuffer::new(s, 22_050, "t")
    }

    fn entropy(v: &[f64]) -> f64 {
        let lin: Vec<f64> = v.iter().map(|db| 10f64.powf(db / 10.0)).collect();
        let s: f64 = lin.iter().sum();
        -lin.iter().map(|x| x / s).filter(|&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    #[test]
    fn silence() {
        let a = AudioBuffer::new(vec![0.0; 8192], 22_050, "z");
        let p = SpectralParams::default();
        let mel = time_avg_mel(&a, &p).unwrap();
        assert_eq!(mel.values.len(), 128);
        assert!(mel.values.iter().all(|&v| v == LOG_FLOOR_DB));
        let mfcc = time_avg_mfcc(&a, &p).unwrap();
        assert_eq!(mfcc.values.len(), 40);
        assert!((mfcc.values[0] - LOG_FLOOR_DB * 128f64.sqrt()).abs() < 1e-9);
        assert!(mfcc.values[1..].iter().all(|v| v.abs() < 1e-9));
        assert!(time_avg_chroma(&a, &p).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sine_440_bands() {
        let a = tones(&[440.0], 1.0);
        let p = SpectralParams::default();
        let mel = time_avg_mel(&a, &p).unwrap().values;
        let (_, centres) = mel_filterbank(2048, 22_050.0, 128, 11_025.0);
        let nearest = (0..128)
            .min_by(|&i, &j| (centres[i] - 440.0).abs().total_cmp(&(centres[j] - 440.0).abs()))
            .unwrap();
        let arg = (0..128).max_by(|&i, &j| mel[i].total_cmp(&mel[j])).unwrap();
        assert_eq!(arg, nearest);

        let chroma = time_avg_chroma(&a, &p).unwrap().values;
        let arg = (0..12).max_by(|&i, &j| chroma[i].total_cmp(&chroma[j])).unwrap();
        assert_eq!(arg, 9, "pitch class A");
        let octave = time_avg_chroma(&tones(&[220.0, 440.0], 1.0), &p).unwrap().values;
        assert_eq!((0..12).max_by(|&i, &j| octave[i].total_cmp(&octave[j])).unwrap(), 9);
    }

    #[test]
    fn noise_flatter_than_sine() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let noise = AudioBuffer::new((0..22_050).map(|_| rng.gen_range(-0.3f32..0.3)).collect(), 22_050, "n");
        let p = SpectralParams::default();
        let en = entropy(&time_avg_mel(&noise, &p).unwrap().values);
        let es = entropy(&time_avg_mel(&tones(&[440.0], 1.0), &p).unwrap().values);
        assert!(en > es, "{en} vs {es}");
    }

    #[test]
    fn too_short() {
        let a = AudioBuffer::new(vec![0.0; 1000], 22_050, "s");
        assert!(matches!(time_avg_mel(&a, &SpectralParams::default()), Err(Error::TooShort { .. })));
    }

    #[test]
    fn shared_pass_matches_individual() {
        let a = tones(&[300.0, 450.0], 0.5);
        let p = SpectralParams::default();
        let [c, m, f] = spectral_baselines(&a, &p).unwrap();
        assert_eq!(c, time_avg_chroma(&a, &p).unwrap());
        assert_eq!(m, time_avg_mel(&a, &p).unwrap());
        assert_eq!(f, time_avg_mfcc(&a, &p).unwrap());
    }
}
