//! Cent-scale contours, stable-region masks and linear drift calibration.

mod drift;
mod stability;

use serde::{Deserialize, Serialize};

use crate::pitch::PitchContour;

pub use drift::{calibrate, estimate_drift, estimate_drift_with, CalibrationFit, DriftParams, DRIFT_BAND_CENTS, MIN_DRIFT_FRAMES};
pub use stability::{stabilize_masking, stabilize_morphetic, MaskingParams, MorpheticParams, StabilityMask, StabilityMethod};

/// Reference pitch for 0 cents.
pub const REF_HZ: f64 = 82.4;

/// Contour in cents relative to [`REF_HZ`]. Unvoiced frames hold 0.0 and are
/// ignored by every statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentContour {
    pub cents: Vec<f64>,
    pub voiced: Vec<bool>,
    pub hop_s: f64,
    pub t0_s: f64,
}

impl CentContour {
    pub fn len(&self) -> usize {
        self.cents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cents.is_empty()
    }

    /// Seconds from the start of the recording.
    pub fn time_of(&self, frame: usize) -> f64 {
        self.t0_s + frame as f64 * self.hop_s
    }

    pub fn voiced_count(&self) -> usize {
        self.voiced.iter().filter(|&&v| v).count()
    }

    /// Voiced cent values in frame order.
    pub fn voiced_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.cents.iter().zip(&self.voiced).filter(|(_, &v)| v).map(|(&c, _)| c)
    }

    /// Build directly from per-frame values; `None` marks an unvoiced frame.
    pub fn from_frames(values: &[Option<f64>], hop_s: f64) -> CentContour {
        CentContour {
            cents: values.iter().map(|v| v.unwrap_or(0.0)).collect(),
            voiced: values.iter().map(Option::is_some).collect(),
            hop_s,
            t0_s: 0.0,
        }
    }
}

/// `cents = 1200 log2(f0 / ref_hz)` on voiced frames.
pub fn to_cents(contour: &PitchContour, ref_hz: f64) -> CentContour {
    let cents = contour
        .f0_hz
        .iter()
        .zip(&contour.voiced)
        .map(|(&f, &v)| if v && f > 0.0 { 1200.0 * (f / ref_hz).log2() } else { 0.0 })
        .collect();
    let voiced = contour
        .f0_hz
        .iter()
        .zip(&contour.voiced)
        .map(|(&f, &v)| v && f > 0.0)
        .collect();
    CentContour {
        cents,
        voiced,
        hop_s: contour.hop_s,
        t0_s: contour.t0_s,
    }
}
