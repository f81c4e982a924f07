use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use yezema::features::{ExtractParams, FeatureKind};
use yezema::ingest::InputDuration;
use yezema::model::{NetworkConfig, TrainConfig};
use yezema::modescale::{AnalysisParams, GmmParams, PeakParams, ReportParams, DEFAULT_MAX_SHIFT};
use yezema::{Error, Result};

pub const CACHE_ENV: &str = "YEZEMA_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub manifests: Vec<PathBuf>,
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            manifests: vec![PathBuf::from("manifest.csv")],
            cache_dir: PathBuf::from("cache"),
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSelection {
    /// Feature ids such as `pitch_masking_cal` or `mfcc40`.
    pub kinds: Vec<String>,
    pub durations: Vec<InputDuration>,
}

impl Default for FeatureSelection {
    fn default() -> Self {
        FeatureSelection {
            kinds: FeatureKind::GRID.iter().map(|k| k.id()).collect(),
            durations: InputDuration::GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    /// Dataset used for cross-validation and for training the saved models.
    /// Defaults to the first dataset tag in sorted order.
    pub dataset: Option<String>,
    /// Held-out dataset of the cross-dataset protocol. Defaults to the other
    /// tag when exactly two datasets are present.
    pub cross_test: Option<String>,
    pub folds: usize,
    pub fold_seed: u64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            dataset: None,
            cross_test: None,
            folds: 5,
            fold_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    /// Start EM from the published pitch-set means of each mode.
    #[default]
    Preset,
    /// Start EM from peaks of the smoothed aligned distribution.
    Peaks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSettings {
    /// Datasets pooled for the pitch-set analysis; empty means all.
    pub datasets: Vec<String>,
    pub init: InitMethod,
    pub max_shift: usize,
    pub gmm: GmmParams,
    pub peaks: PeakParams,
    pub report: ReportParams,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        AnalysisSettings {
            datasets: Vec::new(),
            init: InitMethod::Preset,
            max_shift: DEFAULT_MAX_SHIFT,
            gmm: GmmParams::default(),
            peaks: PeakParams::default(),
            report: ReportParams::default(),
        }
    }
}

impl AnalysisSettings {
    pub fn params(&self) -> AnalysisParams {
        AnalysisParams {
            max_shift: self.max_shift,
            gmm: self.gmm.clone(),
            peaks: self.peaks.clone(),
            report: self.report.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub extract: ExtractParams,
    pub features: FeatureSelection,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub eval: EvalSettings,
    pub analysis: AnalysisSettings,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub cache_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub init: Option<InitMethod>,
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<PipelineConfig> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Load a config file; without one, defaults relative to the working
    /// directory are used.
    pub fn load(path: Option<&Path>) -> Result<(PipelineConfig, PathBuf)> {
        match path {
            Some(p) => {
                let s = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                let base = p.parent().map(Path::to_path_buf).unwrap_or_default();
                Ok((Self::from_toml_str(&s)?, base))
            }
            None => Ok((PipelineConfig::default(), PathBuf::new())),
        }
    }

    /// Apply overrides, make paths absolute against `base`, and validate.
    /// `cache_env` is the value of the cache-directory variable, if set; a
    /// flag takes precedence over it.
    pub fn resolve(mut self, base: &Path, ov: &Overrides, cache_env: Option<PathBuf>) -> Result<PipelineConfig> {
        let abs = |p: &Path| {
            let p = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
            std::path::absolute(&p).unwrap_or(p)
        };
        if let Some(c) = ov.cache_dir.clone().or(cache_env) {
            self.paths.cache_dir = c;
        }
        if let Some(o) = &ov.output_dir {
            self.paths.output_dir = o.clone();
        }
        if let Some(i) = ov.init {
            self.analysis.init = i;
        }
        self.paths.cache_dir = abs(&self.paths.cache_dir);
        self.paths.output_dir = abs(&self.paths.output_dir);
        self.paths.manifests = self.paths.manifests.iter().map(|m| abs(m)).collect();
        self.kinds()?;
        if self.features.durations.is_empty() {
            return Err(Error::Config("features.durations is empty".into()));
        }
        self.extract.tracker.validate()?;
        self.network.validate()?;
        self.train.validate()?;
        if self.eval.folds < 2 {
            return Err(Error::Config("eval.folds must be at least 2".into()));
        }
        Ok(self)
    }

    pub fn kinds(&self) -> Result<Vec<FeatureKind>> {
        if self.features.kinds.is_empty() {
            return Err(Error::Config("features.kinds is empty".into()));
        }
        self.features
            .kinds
            .iter()
            .map(|id| FeatureKind::from_id(id).ok_or_else(|| Error::Config(format!("unknown feature kind {id:?}"))))
            .collect()
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Write the resolved config as `<dir>/<command>.resolved.toml`.
    pub fn snapshot(&self, dir: &Path, command: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?;
        let path = dir.join(format!("{command}.resolved.toml"));
        std::fs::write(&path, self.to_toml()?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(PipelineConfig::from_toml_str("[paths]\ncache = \"x\"\n").is_err());
        assert!(PipelineConfig::from_toml_str("[train]\nepochs = 3\nlr = 0.1\n").is_err());
        assert!(PipelineConfig::from_toml_str("bogus = 1\n").is_err());
    }

    #[test]
    fn defaults_round_trip_through_snapshot() {
        let cfg = PipelineConfig::default().resolve(Path::new("/tmp/p"), &Overrides::default(), None).unwrap();
        let back = PipelineConfig::from_toml_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.paths.cache_dir, PathBuf::from("/tmp/p/cache"));
    }

    #[test]
    fn flag_beats_environment() {
        let ov = Overrides {
            cache_dir: Some("/a".into()),
            ..Default::default()
        };
        let cfg = PipelineConfig::default().resolve(Path::new("/x"), &ov, Some("/b".into())).unwrap();
        assert_eq!(cfg.paths.cache_dir, PathBuf::from("/a"));
        let cfg = PipelineConfig::default().resolve(Path::new("/x"), &Overrides::default(), Some("/b".into())).unwrap();
        assert_eq!(cfg.paths.cache_dir, PathBuf::from("/b"));
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = PipelineConfig::from_toml_str("[train]\nepochs = 3\n[features]\nkinds = [\"mfcc40\"]\ndurations = [\"full\", \"5s\"]\n").unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.train.batch_size, TrainConfig::default().batch_size);
        assert_eq!(cfg.features.durations, vec![InputDuration::Full, InputDuration::Seconds(5.0)]);
        let bad = PipelineConfig::from_toml_str("[features]\nkinds = [\"pitch\"]\n").unwrap();
        assert!(bad.resolve(Path::new("/"), &Overrides::default(), None).is_err());
    }
}
