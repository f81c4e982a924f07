//! Per-mode pitch-set analysis: align recordings' pitch distributions, average
//! them, fit a Gaussian mixture and name the representative pitches.

mod align;
mod gmm;
mod report;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use align::{aligned_average, align, optimal_shift, optimal_shift_bins, select_anchor, AlignmentResult, DEFAULT_MAX_SHIFT};
pub use gmm::{fit_gmm, peak_init, GmmComponent, GmmFit, GmmParams, PeakParams};
pub use report::{pitch_set_report, NamedPitch, PitchSetReport, ReportParams};

use crate::features::{bin_center, PitchDistribution};
use crate::par::ExecMode;
use crate::{Error, Mode, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisParams {
    pub max_shift: usize,
    pub gmm: GmmParams,
    pub peaks: PeakParams,
    pub report: ReportParams,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            max_shift: DEFAULT_MAX_SHIFT,
            gmm: GmmParams::default(),
            peaks: PeakParams::default(),
            report: ReportParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAnalysis {
    pub mode: Mode,
    pub recording_ids: Vec<String>,
    pub alignment: AlignmentResult,
    pub average: PitchDistribution,
    pub lost_mass: f64,
    pub init_means: Vec<f64>,
    pub fit: GmmFit,
    pub report: PitchSetReport,
}

/// Full chain for one mode. `init_means` of `None` picks peaks of the average.
pub fn analyze_mode(
    mode: Mode,
    recordings: &[(String, PitchDistribution)],
    init_means: Option<&[f64]>,
    p: &AnalysisParams,
    exec: ExecMode,
) -> Result<ModeAnalysis> {
    let dists: Vec<PitchDistribution> = recordings.iter().map(|(_, d)| d.clone()).collect();
    let alignment = align(&dists, p.max_shift, exec)?;
    let (average, lost_mass) = aligned_average(&dists, &alignment.shifts);
    if lost_mass > 0.0 {
        log::warn!("{mode}: alignment pushed {:.4} of the mass out of range", lost_mass);
    }
    let init = match init_means {
        Some(m) => m.to_vec(),
        None => peak_init(&average, &p.peaks),
    };
    if init.is_empty() {
        return Err(Error::InvalidParam(format!("{mode}: no peaks found to initialize the mixture")));
    }
    let fit = fit_gmm(&average, &init, &p.gmm)?;
    let report = pitch_set_report(&fit.components, mode, &p.report)?;
    Ok(ModeAnalysis {
        mode,
        recording_ids: recordings.iter().map(|(id, _)| id.clone()).collect(),
        alignment,
        average,
        lost_mass,
        init_means: init,
        fit,
        report,
    })
}

#[derive(Serialize)]
struct ReportRow<'a> {
    name: &'a str,
    mu_cents: f64,
    var: f64,
    weight: f64,
    in_octave: bool,
    delta_mu: Option<f64>,
}

#[derive(Serialize)]
struct ModeJson<'a> {
    mode: Mode,
    anchor: &'a str,
    n_recordings: usize,
    lost_mass: f64,
    pitches: Vec<ReportRow<'a>>,
}

/// Analysis report: per mode, the ordered representative pitches.
pub fn report_json(analyses: &[ModeAnalysis]) -> Result<String> {
    let modes: Vec<ModeJson> = analyses
        .iter()
        .map(|a| ModeJson {
            mode: a.mode,
            anchor: &a.recording_ids[a.alignment.anchor],
            n_recordings: a.recording_ids.len(),
            lost_mass: a.lost_mass,
            pitches: a
                .report
                .pitches
                .iter()
                .map(|p| ReportRow {
                    name: &p.name,
                    mu_cents: p.mu_cents,
                    var: p.var,
                    weight: p.weight,
                    in_octave: p.in_octave,
                    delta_mu: p.delta_mu,
                })
                .collect(),
        })
        .collect();
    Ok(serde_json::to_string_pretty(&modes)?)
}

/// `bin_center_cents,mass` rows of an aligned average.
pub fn write_distribution_csv(path: impl AsRef<Path>, dist: &PitchDistribution) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["bin_center_cents", "mass"])?;
    for (i, m) in dist.bins.iter().enumerate() {
        w.write_record([bin_center(i).to_string(), m.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}
