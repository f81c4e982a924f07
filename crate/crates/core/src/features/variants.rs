use serde::{Deserialize, Serialize};

use super::histogram::{pitch_histogram_frames, PitchDistribution};
use crate::contour::{
    calibrate, estimate_drift_with, DriftParams, stabilize_masking, stabilize_morphetic, to_cents, CalibrationFit, CentContour, MaskingParams,
    MorpheticParams, StabilityMask, StabilityMethod, REF_HZ,
};
use crate::error::{Error, Result};
use crate::pitch::PitchContour;

/// The six pitch distributions of one segment, indexed like
/// [`super::FeatureKind::tag`]: uncalibrated none/morphetic/masking, then
/// calibrated none/morphetic/masking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchVariants(pub [PitchDistribution; 6]);

impl PitchVariants {
    pub fn get(&self, stabilization: StabilityMethod, calibrated: bool) -> &PitchDistribution {
        &self.0[stabilization as usize + if calibrated { 3 } else { 0 }]
    }
}

/// Everything derived from one tracked recording: cent contour, both
/// stability masks and the drift fit. Masks are computed on the uncalibrated
/// contour and reused for the calibrated one.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingAnalysis {
    pub contour: PitchContour,
    pub cents: CentContour,
    pub calibrated: CentContour,
    /// `None` when too few frames lay near the histogram peak to fit a drift.
    pub fit: Option<CalibrationFit>,
    pub morphetic: StabilityMask,
    pub masking: StabilityMask,
}

impl RecordingAnalysis {
    pub fn new(contour: PitchContour, masking: &MaskingParams, morphetic: &MorpheticParams, drift: &DriftParams) -> Result<Self> {
        let cents = to_cents(&contour, REF_HZ);
        let raw = pitch_histogram_frames(&cents, None, 0..cents.len());
        let fit = match estimate_drift_with(&cents, &raw, drift) {
            Ok(f) => Some(f),
            Err(e @ (Error::TooFewFrames { .. } | Error::EmptyDistribution)) => {
                log::warn!("skipping drift calibration: {e}");
                None
            }
            Err(e) => return Err(e),
        };
        let calibrated = match &fit {
            Some(f) => calibrate(&cents, f),
            None => cents.clone(),
        };
        let masking = stabilize_masking(&cents, masking)?;
        let morphetic = stabilize_morphetic(&cents, morphetic)?;
        Ok(RecordingAnalysis {
            contour,
            cents,
            calibrated,
            fit,
            morphetic,
            masking,
        })
    }

    pub fn mask(&self, method: StabilityMethod) -> Option<&StabilityMask> {
        match method {
            StabilityMethod::None => None,
            StabilityMethod::Morphetic => Some(&self.morphetic),
            StabilityMethod::Masking => Some(&self.masking),
        }
    }

    pub fn histogram(&self, method: StabilityMethod, calibrated: bool, frames: std::ops::Range<usize>) -> PitchDistribution {
        let c = if calibrated { &self.calibrated } else { &self.cents };
        pitch_histogram_frames(c, self.mask(method), frames)
    }

    /// All six variants over the frames whose centres fall in
    /// `[start_s, end_s)`.
    pub fn variants(&self, start_s: f64, end_s: f64) -> PitchVariants {
        let frames = self.contour.frames_in(start_s, end_s);
        let mut out = Vec::with_capacity(6);
        for calibrated in [false, true] {
            for m in StabilityMethod::ALL {
                out.push(self.histogram(m, calibrated, frames.clone()));
            }
        }
        PitchVariants(out.try_into().expect("six variants"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pitch::HOP;

    #[test]
    fn six_variants_from_one_contour() {
        let hop = HOP as f64 / 22_050.0;
        let n = 3000;
        let f0: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 * hop;
                let note = if (t * 2.0) as i64 % 2 == 0 { 1200.0 } else { 1400.0 };
                REF_HZ * ((note + 5.0 * t) / 1200.0).exp2()
            })
            .collect();
        let contour = PitchContour {
            f0_hz: f0,
            voiced: vec![true; n],
            confidence: vec![1.0; n],
            hop_s: hop,
            t0_s: 0.0,
        };
        let a = RecordingAnalysis::new(contour, &MaskingParams::default(), &MorpheticParams::default(), &DriftParams::default()).unwrap();
        assert!(a.fit.is_some());
        let v = a.variants(0.0, 1e9);
        for d in &v.0 {
            assert!((d.bins.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        // calibration concentrates the drifting notes
        let peak = |d: &PitchDistribution| d.bins.iter().cloned().fold(0.0, f64::max);
        assert!(peak(v.get(StabilityMethod::None, true)) > peak(v.get(StabilityMethod::None, false)));
    }
}
