use serde::{Deserialize, Serialize};

use crate::contour::{CentContour, StabilityMask};

pub const N_BINS: usize = 512;
pub const BIN_WIDTH_CENTS: f64 = 10.0;
/// Lower edge of bin 0, cents relative to 82.4 Hz.
pub const ORIGIN_CENTS: f64 = -160.0;

/// Normalized histogram of frame pitches over 512 bins of 10 cents covering
/// `[-160, 4960)` cents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchDistribution {
    pub bins: Vec<f64>,
    /// Frames that fell outside the bin range and were counted in an edge bin.
    pub out_of_range: usize,
    /// Number of frames counted.
    pub n_frames: usize,
}

impl PitchDistribution {
    pub fn zeros() -> Self {
        PitchDistribution {
            bins: vec![0.0; N_BINS],
            out_of_range: 0,
            n_frames: 0,
        }
    }

    /// Wrap raw bin masses, normalizing them to sum to one.
    pub fn from_bins(mut bins: Vec<f64>) -> Self {
        assert_eq!(bins.len(), N_BINS);
        let s: f64 = bins.iter().sum();
        if s > 0.0 {
            bins.iter_mut().for_each(|b| *b /= s);
        }
        PitchDistribution {
            bins,
            out_of_range: 0,
            n_frames: 0,
        }
    }

    /// True when no frame was counted.
    pub fn is_empty(&self) -> bool {
        self.bins.iter().all(|&b| b == 0.0)
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        bin_center(i)
    }

    pub fn bin_of(cents: f64) -> (usize, bool) {
        let raw = ((cents - ORIGIN_CENTS) / BIN_WIDTH_CENTS).floor();
        if raw < 0.0 {
            (0, true)
        } else if raw >= N_BINS as f64 {
            (N_BINS - 1, true)
        } else {
            (raw as usize, false)
        }
    }

    /// Index of the largest bin (lowest index on ties), `None` if empty.
    pub fn argmax(&self) -> Option<usize> {
        if self.is_empty() {
            return None;
        }
        let mut best = 0;
        for (i, &b) in self.bins.iter().enumerate() {
            if b > self.bins[best] {
                best = i;
            }
        }
        Some(best)
    }

    /// Move all mass `k` bins up (negative: down). Mass pushed past either end
    /// is dropped and returned; the result is not renormalized.
    pub fn shifted(&self, k: i64) -> (Vec<f64>, f64) {
        let mut out = vec![0.0; N_BINS];
        let mut lost = 0.0;
        for (i, &b) in self.bins.iter().enumerate() {
            let j = i as i64 + k;
            if (0..N_BINS as i64).contains(&j) {
                out[j as usize] += b;
            } else {
                lost += b;
            }
        }
        (out, lost)
    }
}

pub fn bin_center(i: usize) -> f64 {
    ORIGIN_CENTS + (i as f64 + 0.5) * BIN_WIDTH_CENTS
}

/// Histogram of the stable frames (or every voiced frame when `mask` is
/// `None`). An all-zero distribution is returned, and logged, when no frame
/// qualifies.
pub fn pitch_histogram(c: &CentContour, mask: Option<&StabilityMask>) -> PitchDistribution {
    pitch_histogram_frames(c, mask, 0..c.len())
}

/// As [`pitch_histogram`], restricted to the frames in `frames`.
pub fn pitch_histogram_frames(c: &CentContour, mask: Option<&StabilityMask>, frames: std::ops::Range<usize>) -> PitchDistribution {
    let mut counts = vec![0u64; N_BINS];
    let mut out_of_range = 0;
    let mut n = 0usize;
    for i in frames {
        let keep = match mask {
            Some(m) => m.stable[i] && c.voiced[i],
            None => c.voiced[i],
        };
        if !keep {
            continue;
        }
        let (b, oor) = PitchDistribution::bin_of(c.cents[i]);
        counts[b] += 1;
        out_of_range += oor as usize;
        n += 1;
    }
    if n == 0 {
        log::debug!("pitch histogram: no eligible frames");
        return PitchDistribution::zeros();
    }
    if out_of_range > 0 {
        log::debug!("pitch histogram: {out_of_range} frames outside the bin range");
    }
    PitchDistribution {
        bins: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        out_of_range,
        n_frames: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HOP: f64 = 128.0 / 22_050.0;

    #[test]
    fn constant_contour_single_bin() {
        let c = CentContour::from_frames(&vec![Some(1200.0); 100], HOP);
        let h = pitch_histogram(&c, None);
        assert_eq!(h.bins[136], 1.0);
        assert_eq!(h.bins.iter().filter(|&&b| b > 0.0).count(), 1);
        assert_eq!(h.argmax(), Some(136));
    }

    #[test]
    fn two_equal_notes() {
        let mut v = vec![Some(1200.0); 50];
        v.extend(vec![Some(1210.0); 50]);
        let h = pitch_histogram(&CentContour::from_frames(&v, HOP), None);
        assert_eq!(h.bins[136], 0.5);
        assert_eq!(h.bins[137], 0.5);
    }

    #[test]
    fn empty_and_edges() {
        let c = CentContour::from_frames(&vec![None; 10], HOP);
        let h = pitch_histogram(&c, None);
        assert!(h.is_empty());
        assert_eq!(h.argmax(), None);
        let c = CentContour::from_frames(&[Some(-500.0), Some(6000.0)], HOP);
        let h = pitch_histogram(&c, None);
        assert_eq!(h.out_of_range, 2);
        assert_eq!(h.bins[0], 0.5);
        assert_eq!(h.bins[511], 0.5);
        let (_, lost) = h.shifted(1);
        assert_eq!(lost, 0.5);
    }
}
