//! Classifier inputs: 10-cent pitch distributions in six variants and three
//! time-averaged spectral baselines.

mod cache;
mod extract;
mod histogram;
mod spectral;
mod variants;

use serde::{Deserialize, Serialize};

pub use cache::{read_feature_file, write_feature_csv, write_feature_file, FeatureRecord};
pub use extract::{analyze_recording, segment_features, split_segments, ExtractParams};
pub use histogram::{bin_center, pitch_histogram, pitch_histogram_frames, PitchDistribution, BIN_WIDTH_CENTS, N_BINS, ORIGIN_CENTS};
pub use spectral::{mel_filterbank, spectral_baselines, time_avg_chroma, time_avg_mel, time_avg_mfcc, SpectralParams, LOG_FLOOR_DB};
pub use variants::{PitchVariants, RecordingAnalysis};

use crate::contour::StabilityMethod;

/// Which representation a feature vector holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    PitchHist {
        stabilization: StabilityMethod,
        calibrated: bool,
    },
    Chroma12,
    Mel128,
    Mfcc40,
}

impl FeatureKind {
    /// The nine settings of the results grid, in row order.
    pub const GRID: [FeatureKind; 9] = [
        FeatureKind::pitch(StabilityMethod::None, false),
        FeatureKind::pitch(StabilityMethod::Morphetic, false),
        FeatureKind::pitch(StabilityMethod::Masking, false),
        FeatureKind::pitch(StabilityMethod::None, true),
        FeatureKind::pitch(StabilityMethod::Morphetic, true),
        FeatureKind::pitch(StabilityMethod::Masking, true),
        FeatureKind::Chroma12,
        FeatureKind::Mel128,
        FeatureKind::Mfcc40,
    ];

    pub const fn pitch(stabilization: StabilityMethod, calibrated: bool) -> FeatureKind {
        FeatureKind::PitchHist {
            stabilization,
            calibrated,
        }
    }

    pub fn len(self) -> usize {
        match self {
            FeatureKind::PitchHist { .. } => N_BINS,
            FeatureKind::Chroma12 => 12,
            FeatureKind::Mel128 => 128,
            FeatureKind::Mfcc40 => 40,
        }
    }

    /// One-byte tag used by the binary feature cache.
    pub fn tag(self) -> u8 {
        match self {
            FeatureKind::PitchHist {
                stabilization,
                calibrated,
            } => stabilization as u8 + if calibrated { 3 } else { 0 },
            FeatureKind::Chroma12 => 6,
            FeatureKind::Mel128 => 7,
            FeatureKind::Mfcc40 => 8,
        }
    }

    pub fn from_tag(tag: u8) -> Option<FeatureKind> {
        FeatureKind::GRID.iter().copied().find(|k| k.tag() == tag)
    }

    /// Short identifier such as `pitch_masking_cal` or `mfcc40`.
    pub fn id(self) -> String {
        match self {
            FeatureKind::PitchHist {
                stabilization,
                calibrated,
            } => format!("pitch_{}_{}", stabilization.name(), if calibrated { "cal" } else { "uncal" }),
            FeatureKind::Chroma12 => "chroma12".into(),
            FeatureKind::Mel128 => "mel128".into(),
            FeatureKind::Mfcc40 => "mfcc40".into(),
        }
    }

    pub fn from_id(s: &str) -> Option<FeatureKind> {
        FeatureKind::GRID.iter().copied().find(|k| k.id() == s)
    }

    pub fn is_pitch(self) -> bool {
        matches!(self, FeatureKind::PitchHist { .. })
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.id())
    }
}

/// A feature vector for one recording segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub kind: FeatureKind,
    pub values: Vec<f64>,
    pub recording_id: String,
    pub segment: usize,
}
