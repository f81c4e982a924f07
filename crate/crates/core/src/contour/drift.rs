use serde::{Deserialize, Serialize};

use super::CentContour;
use crate::error::{Error, Result};
use crate::features::PitchDistribution;

/// Half-width of the regression band around the histogram maximum.
pub const DRIFT_BAND_CENTS: f64 = 100.0;
pub const MIN_DRIFT_FRAMES: usize = 50;

/// Least-squares line `cents = intercept + slope_s * t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFit {
    /// Cents per second.
    pub slope_s: f64,
    pub intercept: f64,
    pub n_frames_used: usize,
    pub residual_rms: f64,
}

impl CalibrationFit {
    pub const IDENTITY: CalibrationFit = CalibrationFit {
        slope_s: 0.0,
        intercept: 0.0,
        n_frames_used: 0,
        residual_rms: 0.0,
    };

    /// Total drift over `duration_s` seconds, in cents.
    pub fn total_drift(&self, duration_s: f64) -> f64 {
        self.slope_s * duration_s
    }
}

/// Drift regression settings. The reference method is a single regression
/// over a fixed band around the histogram maximum (`refine_iterations = 0`).
/// Each refinement pass re-selects the frames within the band around the
/// previous fitted line and refits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriftParams {
    pub band_cents: f64,
    pub refine_iterations: usize,
}

impl Default for DriftParams {
    fn default() -> Self {
        DriftParams {
            band_cents: DRIFT_BAND_CENTS,
            refine_iterations: 0,
        }
    }
}

/// Fit the pitch drift on the voiced frames lying within ±100 cents of the
/// maximum of `hist`.
pub fn estimate_drift(c: &CentContour, hist: &PitchDistribution) -> Result<CalibrationFit> {
    estimate_drift_with(c, hist, &DriftParams::default())
}

pub fn estimate_drift_with(c: &CentContour, hist: &PitchDistribution, p: &DriftParams) -> Result<CalibrationFit> {
    if !(p.band_cents > 0.0) {
        return Err(Error::InvalidParam("drift band must be positive".into()));
    }
    let peak = hist.argmax().ok_or(Error::EmptyDistribution)?;
    let centre = hist.bin_center(peak);
    let mut fit = fit_band(c, p.band_cents, |_| centre)?;
    for _ in 0..p.refine_iterations {
        let prev = fit;
        fit = fit_band(c, p.band_cents, |t| prev.intercept + prev.slope_s * t)?;
        if fit.n_frames_used == prev.n_frames_used && (fit.slope_s - prev.slope_s).abs() < 1e-12 {
            break;
        }
    }
    Ok(fit)
}

fn fit_band(c: &CentContour, band: f64, centre: impl Fn(f64) -> f64) -> Result<CalibrationFit> {
    let pts: Vec<(f64, f64)> = (0..c.len())
        .filter(|&i| c.voiced[i] && (c.cents[i] - centre(c.time_of(i))).abs() <= band)
        .map(|i| (c.time_of(i), c.cents[i]))
        .collect();
    if pts.len() < MIN_DRIFT_FRAMES {
        return Err(Error::TooFewFrames {
            found: pts.len(),
            needed: MIN_DRIFT_FRAMES,
        });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, y) in &pts {
        sxy += (t - mt) * (y - my);
        sxx += (t - mt) * (t - mt);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mt;
    let rss: f64 = pts.iter().map(|&(t, y)| (y - intercept - slope * t).powi(2)).sum();
    Ok(CalibrationFit {
        slope_s: slope,
        intercept,
        n_frames_used: pts.len(),
        residual_rms: (rss / n).sqrt(),
    })
}

/// Subtract `slope_s * t` from every voiced frame.
pub fn calibrate(c: &CentContour, fit: &CalibrationFit) -> CentContour {
    let mut out = c.clone();
    for i in 0..c.len() {
        if c.voiced[i] {
            out.cents[i] = c.cents[i] - fit.slope_s * c.time_of(i);
        }
    }
    out
}
