use serde::{Deserialize, Serialize};

use super::cache::FeatureRecord;
use super::spectral::{spectral_baselines, SpectralParams};
use super::variants::RecordingAnalysis;
use super::FeatureKind;
use crate::contour::{DriftParams, MaskingParams, MorpheticParams};
use crate::error::{Error, Result};
use crate::ingest::{AudioBuffer, InputDuration};
use crate::pitch::{extract_contour, TrackerParams};

/// Parameters of every per-recording analysis step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractParams {
    pub tracker: TrackerParams,
    pub masking: MaskingParams,
    pub morphetic: MorpheticParams,
    pub drift: DriftParams,
    pub spectral: SpectralParams,
}

/// Track, stabilize and calibrate one recording at the analysis rate.
pub fn analyze_recording(audio: &AudioBuffer, p: &ExtractParams) -> Result<RecordingAnalysis> {
    let contour = extract_contour(audio, &p.tracker)?;
    RecordingAnalysis::new(contour, &p.masking, &p.morphetic, &p.drift)
}

/// The nine feature vectors of every segment of one recording at one input
/// duration. Pitch features slice the whole-recording analysis by time; the
/// spectral baselines are computed on the segment audio.
pub fn segment_features(
    audio: &AudioBuffer,
    analysis: &RecordingAnalysis,
    duration: InputDuration,
    spectral: &SpectralParams,
) -> Result<Vec<Vec<FeatureRecord>>> {
    let rate = audio.sample_rate as f64;
    let windows = duration.windows(audio.len(), audio.sample_rate);
    if windows.is_empty() {
        return Err(Error::TooShort {
            needed: match duration {
                InputDuration::Seconds(s) => (s * rate / 2.0).ceil() as usize,
                InputDuration::Full => 1,
            },
            got: audio.len(),
        });
    }
    let mut out = Vec::with_capacity(windows.len());
    for (i, &(a, b)) in windows.iter().enumerate() {
        let v = analysis.variants(a as f64 / rate, b as f64 / rate);
        let seg = AudioBuffer::new(audio.samples[a..b].to_vec(), audio.sample_rate, format!("{}#{i}", audio.source_id));
        let spectral = spectral_baselines(&seg, spectral)?;
        let mut records: Vec<FeatureRecord> = FeatureKind::GRID[..6]
            .iter()
            .zip(v.0.iter())
            .map(|(&kind, d)| FeatureRecord {
                kind,
                values: d.bins.clone(),
            })
            .collect();
        records.extend(spectral.into_iter().map(|f| FeatureRecord {
            kind: f.kind,
            values: f.values,
        }));
        out.push(records);
    }
    Ok(out)
}

/// Inverse of concatenating the segments of [`segment_features`]: a new
/// segment starts whenever a kind repeats.
pub fn split_segments(records: Vec<FeatureRecord>) -> Vec<Vec<FeatureRecord>> {
    let mut out: Vec<Vec<FeatureRecord>> = Vec::new();
    for r in records {
        match out.last_mut() {
            Some(seg) if !seg.iter().any(|s| s.kind == r.kind) => seg.push(r),
            _ => out.push(vec![r]),
        }
    }
    out
}
