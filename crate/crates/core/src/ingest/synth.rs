//! Synthetic chant-like recordings with exact ground-truth F0.
//!
//! A recording is a sequence of notes. Each note draws a pitch class from the
//! categorical distribution over `pitch_centers`, adds Gaussian jitter with
//! that class's variance, and is rendered as a 6-harmonic tone (1/k rolloff)
//! with sinusoidal vibrato, a global linear drift, 10 ms raised-cosine
//! on/offsets and a silent gap of 5% of the note slot.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode::Mode;
use crate::pitch::{PitchContour, FRAME_SIZE, HOP};
use crate::presets;

use super::{AudioBuffer, ANALYSIS_RATE};

const HARMONICS: usize = 6;
const RAMP_S: f64 = 0.010;
const GAP_FRACTION: f64 = 0.05;
pub const REF_HZ: f64 = 82.4;

/// Parameters of one synthetic recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    /// Note pitch classes, in cents relative to 82.4 Hz.
    pub pitch_centers: Vec<f64>,
    /// Per-class jitter variance, cents².
    pub pitch_vars: Vec<f64>,
    /// Categorical weights over the classes; must sum to 1.
    pub weights: Vec<f64>,
    /// Linear drift, cents per second.
    #[serde(default)]
    pub drift_rate: f64,
    #[serde(default)]
    pub vibrato_depth: f64,
    #[serde(default = "default_vibrato_rate")]
    pub vibrato_rate: f64,
    #[serde(default = "default_note_rate")]
    pub note_rate: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_rate")]
    pub sample_rate: u32,
}

fn default_vibrato_rate() -> f64 {
    5.5
}
fn default_note_rate() -> f64 {
    2.5
}
fn default_rate() -> u32 {
    ANALYSIS_RATE
}

impl SynthSpec {
    /// A spec seeded with a published pitch set (weights renormalized).
    pub fn for_mode(mode: Mode, duration_s: f64, rng_seed: u64) -> SynthSpec {
        let set = presets::pitch_set(mode);
        SynthSpec {
            pitch_centers: set.iter().map(|p| p.mu).collect(),
            pitch_vars: set.iter().map(|p| p.var).collect(),
            weights: presets::normalized_weights(mode),
            drift_rate: 0.0,
            vibrato_depth: 0.0,
            vibrato_rate: default_vibrato_rate(),
            note_rate: default_note_rate(),
            duration_s,
            rng_seed,
            sample_rate: ANALYSIS_RATE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParam(m));
        if self.pitch_centers.is_empty() {
            return bad("synth spec has no pitch centers".into());
        }
        if self.pitch_vars.len() != self.pitch_centers.len() || self.weights.len() != self.pitch_centers.len() {
            return bad("pitch_centers, pitch_vars and weights must have equal lengths".into());
        }
        if self.pitch_vars.iter().any(|v| !(*v >= 0.0)) {
            return bad("pitch_vars must be non-negative".into());
        }
        let s: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| !(*w >= 0.0)) || (s - 1.0).abs() > 1e-9 {
            return bad(format!("weights must be a probability vector (sum = {s})"));
        }
        if !(self.duration_s > 0.0) || !(self.note_rate > 0.0) || self.sample_rate == 0 {
            return bad("duration_s, note_rate and sample_rate must be positive".into());
        }
        if !self.vibrato_depth.is_finite() || !self.drift_rate.is_finite() || self.vibrato_rate < 0.0 {
            return bad("invalid vibrato or drift parameters".into());
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<SynthSpec> {
        let spec: SynthSpec = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy)]
struct Note {
    start: f64,
    voiced_end: f64,
    cents: f64,
    vib_phase: f64,
}

/// Render `spec` and return the audio with its exact F0 track, sampled on the
/// tracker's default frame grid.
pub fn synthesize(spec: &SynthSpec) -> Result<(AudioBuffer, PitchContour)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let pick = WeightedIndex::new(&spec.weights).map_err(|e| Error::InvalidParam(e.to_string()))?;
    let slot = 1.0 / spec.note_rate;

    let mut notes = Vec::new();
    let mut t = 0.0;
    while t < spec.duration_s {
        let len = slot * rng.gen_range(0.5..1.5);
        let k = pick.sample(&mut rng);
        let sd = spec.pitch_vars[k].sqrt();
        let jitter = if sd > 0.0 {
            Normal::new(0.0, sd).unwrap().sample(&mut rng)
        } else {
            0.0
        };
        let vib_phase = rng.gen_range(0.0..2.0 * PI);
        notes.push(Note {
            start: t,
            voiced_end: t + len * (1.0 - GAP_FRACTION),
            cents: spec.pitch_centers[k] + jitter,
            vib_phase,
        });
        t += len;
    }

    let rate = spec.sample_rate as f64;
    let n = (spec.duration_s * rate).round().max(1.0) as usize;
    let cents_at = |note: &Note, t: f64| {
        note.cents
            + spec.drift_rate * t
            + spec.vibrato_depth * (2.0 * PI * spec.vibrato_rate * (t - note.start) + note.vib_phase).sin()
    };

    let norm: f64 = (1..=HARMONICS).map(|k| 1.0 / k as f64).sum();
    let amp = 0.5 / norm;
    let mut samples = vec![0.0f32; n];
    let mut phase = 0.0f64;
    let mut ni = 0;
    for (i, out) in samples.iter_mut().enumerate() {
        let t = i as f64 / rate;
        while ni + 1 < notes.len() && t >= notes[ni + 1].start {
            ni += 1;
            phase = 0.0;
        }
        let note = &notes[ni];
        if t >= note.voiced_end {
            continue;
        }
        let f0 = REF_HZ * (cents_at(note, t) / 1200.0).exp2();
        phase += 2.0 * PI * f0 / rate;
        if phase > 2.0 * PI {
            phase -= 2.0 * PI;
        }
        let env = {
            let a = ((t - note.start) / RAMP_S).min((note.voiced_end - t) / RAMP_S).clamp(0.0, 1.0);
            0.5 - 0.5 * (PI * a).cos()
        };
        // sin(k x) by the Chebyshev recurrence
        let (s1, c1) = phase.sin_cos();
        let (mut prev, mut cur) = (0.0, s1);
        let mut acc = 0.0;
        for k in 1..=HARMONICS {
            if f0 * k as f64 >= 0.5 * rate {
                break;
            }
            acc += cur / k as f64;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
        *out = (amp * env * acc) as f32;
    }

    let n_frames = if n >= FRAME_SIZE { (n - FRAME_SIZE) / HOP + 1 } else { 0 };
    let mut f0_hz = vec![0.0; n_frames];
    let mut voiced = vec![false; n_frames];
    let mut ni = 0;
    for f in 0..n_frames {
        let t = (f * HOP + FRAME_SIZE / 2) as f64 / rate;
        while ni + 1 < notes.len() && t >= notes[ni + 1].start {
            ni += 1;
        }
        let note = &notes[ni];
        if t < note.voiced_end {
            voiced[f] = true;
            f0_hz[f] = REF_HZ * (cents_at(note, t) / 1200.0).exp2();
        }
    }
    let confidence = voiced.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
    let contour = PitchContour {
        f0_hz,
        voiced,
        confidence,
        hop_s: HOP as f64 / rate,
        t0_s: (FRAME_SIZE / 2) as f64 / rate,
    };
    let audio = AudioBuffer::new(samples, spec.sample_rate, format!("synth-{}", spec.rng_seed));
    Ok((audio, contour))
}

/// Per-mode section of a [`CorpusSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub mode: Mode,
    pub centers: Vec<f64>,
    pub vars: Vec<f64>,
    /// Renormalized to sum to 1 when recordings are generated.
    pub weights: Vec<f64>,
}

impl ModeSpec {
    pub fn preset(mode: Mode) -> ModeSpec {
        let set = presets::pitch_set(mode);
        ModeSpec {
            mode,
            centers: set.iter().map(|p| p.mu).collect(),
            vars: set.iter().map(|p| p.var).collect(),
            weights: set.iter().map(|p| p.weight).collect(),
        }
    }
}

/// A reproducible synthetic corpus: a fixed number of recordings per mode with
/// durations, drift totals and vibrato drawn from the given ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub dataset: String,
    pub seed: u64,
    pub recordings_per_mode: usize,
    #[serde(default = "default_duration_range")]
    pub duration_range_s: (f64, f64),
    /// Total drift over a recording in cents, drawn uniformly per recording.
    #[serde(default = "default_drift_total")]
    pub drift_total_cents: (f64, f64),
    #[serde(default = "default_vibrato_depth")]
    pub vibrato_depth_cents: (f64, f64),
    #[serde(default = "default_vibrato_rate_range")]
    pub vibrato_rate_hz: (f64, f64),
    #[serde(default = "default_note_rate")]
    pub note_rate: f64,
    pub modes: Vec<ModeSpec>,
}

fn default_duration_range() -> (f64, f64) {
    presets::DURATION_RANGE_S
}
fn default_drift_total() -> (f64, f64) {
    (100.0, 100.0)
}
fn default_vibrato_depth() -> (f64, f64) {
    (4.0, 8.0)
}
fn default_vibrato_rate_range() -> (f64, f64) {
    (5.0, 6.5)
}

impl CorpusSpec {
    /// All three published pitch sets.
    pub fn published(dataset: impl Into<String>, seed: u64, recordings_per_mode: usize) -> CorpusSpec {
        CorpusSpec {
            dataset: dataset.into(),
            seed,
            recordings_per_mode,
            duration_range_s: default_duration_range(),
            drift_total_cents: default_drift_total(),
            vibrato_depth_cents: default_vibrato_depth(),
            vibrato_rate_hz: default_vibrato_rate_range(),
            note_rate: default_note_rate(),
            modes: Mode::ALL.iter().map(|&m| ModeSpec::preset(m)).collect(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<CorpusSpec> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<CorpusSpec> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    /// Recording specs in (mode, index) order, with a stable name for each.
    pub fn recordings(&self) -> Result<Vec<(Mode, String, SynthSpec)>> {
        let mut out = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for ms in &self.modes {
            let total: f64 = ms.weights.iter().sum();
            if !(total > 0.0) {
                return Err(Error::InvalidParam(format!("{} weights sum to zero", ms.mode)));
            }
            let weights: Vec<f64> = ms.weights.iter().map(|w| w / total).collect();
            for i in 0..self.recordings_per_mode {
                let duration_s = uniform(&mut rng, self.duration_range_s);
                let drift = uniform(&mut rng, self.drift_total_cents);
                let spec = SynthSpec {
                    pitch_centers: ms.centers.clone(),
                    pitch_vars: ms.vars.clone(),
                    weights: weights.clone(),
                    drift_rate: drift / duration_s,
                    vibrato_depth: uniform(&mut rng, self.vibrato_depth_cents),
                    vibrato_rate: uniform(&mut rng, self.vibrato_rate_hz),
                    note_rate: self.note_rate,
                    duration_s,
                    rng_seed: rng.gen(),
                    sample_rate: ANALYSIS_RATE,
                };
                spec.validate()?;
                out.push((ms.mode, format!("{}_{}_{:03}", self.dataset, ms.mode.name().to_lowercase(), i), spec));
            }
        }
        Ok(out)
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}
