//! Frame-level F0 tracking: probabilistic YIN candidates decoded with a
//! pitch/voicing hidden Markov model.

mod cache;
mod viterbi;
mod yin;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{AudioBuffer, ANALYSIS_RATE};
use crate::par::ExecMode;

pub use cache::{read_contour_csv, write_contour_csv, ContourCsvRow};

/// Analysis frame length in samples.
pub const FRAME_SIZE: usize = 2048;
/// Hop between frames in samples (5.8 ms at 22.05 kHz).
pub const HOP: usize = 128;

/// Per-frame F0 track. Unvoiced frames carry `f0_hz == 0.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchContour {
    pub f0_hz: Vec<f64>,
    pub voiced: Vec<bool>,
    pub confidence: Vec<f64>,
    pub hop_s: f64,
    /// Time of frame 0 (its centre), in seconds.
    pub t0_s: f64,
}

impl PitchContour {
    pub fn len(&self) -> usize {
        self.f0_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f0_hz.is_empty()
    }

    pub fn time_of(&self, frame: usize) -> f64 {
        self.t0_s + frame as f64 * self.hop_s
    }

    pub fn voiced_count(&self) -> usize {
        self.voiced.iter().filter(|&&v| v).count()
    }

    /// Frames whose centre lies in `[start_s, end_s)`.
    pub fn frames_in(&self, start_s: f64, end_s: f64) -> std::ops::Range<usize> {
        let first = ((start_s - self.t0_s) / self.hop_s).ceil().max(0.0) as usize;
        let last = ((end_s - self.t0_s) / self.hop_s).ceil().max(0.0) as usize;
        first.min(self.len())..last.min(self.len())
    }
}

/// Number of frames for a signal of `len` samples.
pub fn frame_count(len: usize, frame_size: usize) -> usize {
    if len < frame_size {
        0
    } else {
        (len - frame_size) / HOP + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerParams {
    pub frame_size: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub n_thresholds: usize,
    pub beta_a: f64,
    pub beta_b: f64,
    /// Boltzmann prior parameter favouring earlier (shorter-period) troughs.
    pub boltzmann: f64,
    /// Weight given to the global minimum when no trough is below a threshold.
    pub no_trough_prob: f64,
    /// Pitch-state resolution, cents.
    pub resolution_cents: f64,
    /// Decay scale of the pitch transition probability, cents per frame.
    pub transition_scale_cents: f64,
    pub switch_prob: f64,
    #[serde(skip)]
    pub exec: ExecMode,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams {
            frame_size: FRAME_SIZE,
            fmin: 60.0,
            fmax: 1200.0,
            n_thresholds: 100,
            beta_a: 2.0,
            beta_b: 18.0,
            boltzmann: 2.0,
            no_trough_prob: 0.01,
            resolution_cents: 10.0,
            transition_scale_cents: 80.0,
            switch_prob: 0.01,
            exec: ExecMode::Parallel,
        }
    }
}

impl TrackerParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParam(m.into()));
        if !(self.fmin >= 50.0 && self.fmax <= 2000.0 && self.fmin < self.fmax) {
            return bad("need 50 <= fmin < fmax <= 2000 Hz");
        }
        if self.frame_size < 64 || !self.frame_size.is_power_of_two() {
            return bad("frame_size must be a power of two >= 64");
        }
        if self.n_thresholds == 0 || !(self.beta_a > 0.0 && self.beta_b > 0.0) {
            return bad("invalid threshold prior");
        }
        if !(self.resolution_cents > 0.0 && self.transition_scale_cents > 0.0) {
            return bad("resolution and transition scale must be positive");
        }
        if !(self.switch_prob > 0.0 && self.switch_prob < 1.0) {
            return bad("switch_prob must lie in (0, 1)");
        }
        Ok(())
    }

    fn n_pitch_bins(&self) -> usize {
        ((1200.0 / self.resolution_cents) * (self.fmax / self.fmin).log2()).floor() as usize + 1
    }

    fn bin_freq(&self, bin: usize) -> f64 {
        self.fmin * (bin as f64 * self.resolution_cents / 1200.0).exp2()
    }
}

/// Track F0 over `audio`, which must be at the analysis rate.
pub fn extract_contour(audio: &AudioBuffer, params: &TrackerParams) -> Result<PitchContour> {
    params.validate()?;
    if audio.sample_rate != ANALYSIS_RATE {
        return Err(Error::InvalidParam(format!(
            "audio must be at {ANALYSIS_RATE} Hz, got {}",
            audio.sample_rate
        )));
    }
    if audio.len() < params.frame_size {
        return Err(Error::TooShort {
            needed: params.frame_size,
            got: audio.len(),
        });
    }
    let rate = audio.sample_rate as f64;
    let frames = yin::candidates(&audio.samples, rate, params);
    let n_bins = params.n_pitch_bins();
    let states = viterbi::decode(&frames, n_bins, params);

    let mut f0_hz = Vec::with_capacity(frames.len());
    let mut voiced = Vec::with_capacity(frames.len());
    let mut confidence = Vec::with_capacity(frames.len());
    for (frame, &state) in frames.iter().zip(&states) {
        confidence.push(frame.voiced_prob.clamp(0.0, 1.0));
        if state < n_bins {
            // report the refined candidate nearest the decoded bin
            let f = frame
                .candidates
                .iter()
                .filter(|c| c.bin.abs_diff(state) <= 1)
                .min_by_key(|c| c.bin.abs_diff(state))
                .map(|c| c.freq)
                .unwrap_or_else(|| params.bin_freq(state));
            f0_hz.push(f.clamp(params.fmin, params.fmax));
            voiced.push(true);
        } else {
            f0_hz.push(0.0);
            voiced.push(false);
        }
    }
    Ok(PitchContour {
        f0_hz,
        voiced,
        confidence,
        hop_s: HOP as f64 / rate,
        t0_s: (params.frame_size / 2) as f64 / rate,
    })
}

/// Summary statistics over voiced frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourStats {
    pub voiced_ratio: f64,
    /// `None` when no frame is voiced.
    pub median_f0: Option<f64>,
    /// Span between the lowest and highest voiced pitch, in cents.
    pub range_cents: Option<f64>,
}

pub fn contour_stats(contour: &PitchContour) -> ContourStats {
    let mut f: Vec<f64> = contour
        .f0_hz
        .iter()
        .zip(&contour.voiced)
        .filter(|(_, &v)| v)
        .map(|(&f, _)| f)
        .collect();
    if f.is_empty() {
        return ContourStats {
            voiced_ratio: 0.0,
            median_f0: None,
            range_cents: None,
        };
    }
    f.sort_by(f64::total_cmp);
    let n = f.len();
    let median = if n % 2 == 1 { f[n / 2] } else { 0.5 * (f[n / 2 - 1] + f[n / 2]) };
    ContourStats {
        voiced_ratio: n as f64 / contour.len() as f64,
        median_f0: Some(median),
        range_cents: Some(1200.0 * (f[n - 1] / f[0]).log2()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn tone(freq: f64, secs: f64) -> AudioBuffer {
        let n = (secs * 22_050.0) as usize;
        let s = (0..n)
            .map(|i| (0.5 * (2.0 * std::f64::consts::PI * freq * i as f64 / 22_050.0).sin()) as f32)
            .collect();
        AudioBuffer::new(s, 22_050, "tone")
    }

    fn cents_err(a: f64, b: f64) -> f64 {
        (1200.0 * (a / b).log2()).abs()
    }

    #[test]
    fn sine_220() {
        let c = extract_contour(&tone(220.0, 2.0), &TrackerParams::default()).unwrap();
        assert_eq!(c.len(), frame_count(44_100, 2048));
        assert!(c.voiced_count() as f64 >= 0.95 * c.len() as f64);
        let stats = contour_stats(&c);
        assert!(cents_err(stats.median_f0.unwrap(), 220.0) < 10.0);
        assert!(c.f0_hz.iter().zip(&c.voiced).all(|(f, v)| !v || (60.0..=1200.0).contains(f)));
    }

    #[test]
    fn noise_is_unvoiced() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        // uniform noise with rms 0.1 (-20 dBFS)
        let a = 0.1 * 3f64.sqrt();
        let s = (0..44_100).map(|_| rng.gen_range(-a..a) as f32).collect();
        let c = extract_contour(&AudioBuffer::new(s, 22_050, "n"), &TrackerParams::default()).unwrap();
        let unvoiced = c.len() - c.voiced_count();
        assert!(unvoiced as f64 >= 0.9 * c.len() as f64, "{unvoiced}/{}", c.len());
    }

    #[test]
    fn silence_is_unvoiced() {
        let c = extract_contour(&AudioBuffer::new(vec![0.0; 30_000], 22_050, "z"), &TrackerParams::default()).unwrap();
        assert_eq!(c.voiced_count(), 0);
        assert!(c.f0_hz.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn errors() {
        let p = TrackerParams::default();
        assert!(matches!(
            extract_contour(&AudioBuffer::new(vec![0.0; 100], 22_050, "s"), &p),
            Err(Error::TooShort { .. })
        ));
        let bad = TrackerParams {
            fmin: 40.0,
            ..p.clone()
        };
        assert!(extract_contour(&tone(200.0, 1.0), &bad).is_err());
        let bad = TrackerParams {
            fmin: 500.0,
            fmax: 400.0,
            ..p
        };
        assert!(extract_contour(&tone(200.0, 1.0), &bad).is_err());
    }

    #[test]
    fn stats() {
        let mut c = PitchContour {
            f0_hz: vec![164.8; 10],
            voiced: vec![true; 10],
            confidence: vec![1.0; 10],
            hop_s: HOP as f64 / 22_050.0,
            t0_s: 0.0,
        };
        let s = contour_stats(&c);
        assert_eq!(s.voiced_ratio, 1.0);
        assert_eq!(s.median_f0, Some(164.8));
        assert_eq!(s.range_cents, Some(0.0));
        for i in 0..5 {
            c.f0_hz[i] = 0.0;
            c.voiced[i] = false;
        }
        c.f0_hz[5..].iter_mut().for_each(|f| *f = 100.0);
        assert_eq!(contour_stats(&c).voiced_ratio, 0.5);
        c.voiced.iter_mut().for_each(|v| *v = false);
        assert_eq!(contour_stats(&c).median_f0, None);
    }

    #[test]
    fn deterministic_across_exec_modes() {
        let a = tone(311.0, 1.0);
        let p = TrackerParams::default();
        let seq = TrackerParams {
            exec: ExecMode::Sequential,
            ..p.clone()
        };
        assert_eq!(extract_contour(&a, &p).unwrap(), extract_contour(&a, &seq).unwrap());
    }
}
