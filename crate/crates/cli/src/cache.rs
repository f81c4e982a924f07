//! On-disk layout of the feature cache:
//!
//! ```text
//! <cache>/params.json                      extraction parameters of the entries
//! <cache>/features/<id>.<duration>.feat    concatenated segment feature records
//! <cache>/contours/<id>.csv                tracked contour
//! <cache>/contours/<id>.<method>.csv       contour with stable,cents_calibrated
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use yezema::features::{read_feature_file, split_segments, ExtractParams, FeatureKind, FeatureRecord};
use yezema::ingest::{InputDuration, ManifestEntry};
use yezema::model::{Example, LabeledSet};
use yezema::{Error, Result};

pub struct Cache {
    pub root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Cache {
        Cache { root: root.into() }
    }

    pub fn features(&self, id: &str, d: InputDuration) -> PathBuf {
        self.root.join("features").join(format!("{id}.{}.feat", d.label()))
    }

    pub fn contour(&self, id: &str, method: Option<&str>) -> PathBuf {
        let name = match method {
            Some(m) => format!("{id}.{m}.csv"),
            None => format!("{id}.csv"),
        };
        self.root.join("contours").join(name)
    }

    pub fn create_dirs(&self) -> Result<()> {
        for d in ["features", "contours"] {
            let p = self.root.join(d);
            std::fs::create_dir_all(&p).map_err(|e| Error::Cache(format!("{}: {e}", p.display())))?;
        }
        Ok(())
    }

    fn params_path(&self) -> PathBuf {
        self.root.join("params.json")
    }

    /// `true` when the cache was written with exactly these parameters.
    pub fn params_match(&self, p: &ExtractParams) -> bool {
        std::fs::read_to_string(self.params_path())
            .ok()
            .and_then(|s| serde_json::from_str::<ExtractParams>(&s).ok())
            .is_some_and(|old| old == *p)
    }

    pub fn write_params(&self, p: &ExtractParams) -> Result<()> {
        let path = self.params_path();
        std::fs::write(&path, serde_json::to_string_pretty(p)?).map_err(|e| Error::Cache(format!("{}: {e}", path.display())))
    }

    pub fn is_complete(&self, id: &str, durations: &[InputDuration]) -> bool {
        durations.iter().all(|&d| self.features(id, d).is_file())
    }

    /// Segments of one recording at one duration.
    pub fn segments(&self, id: &str, d: InputDuration) -> Result<Vec<Vec<FeatureRecord>>> {
        Ok(split_segments(read_feature_file(self.features(id, d))?))
    }

    /// Labeled sets of `kinds` at duration `d` for `entries`. Every missing
    /// cache file is named in the error.
    pub fn labeled_sets(&self, entries: &[&ManifestEntry], kinds: &[FeatureKind], d: InputDuration) -> Result<Vec<LabeledSet>> {
        let missing: Vec<String> = entries
            .iter()
            .map(|e| self.features(&e.recording_id(), d))
            .filter(|p| !p.is_file())
            .map(|p| p.display().to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Cache(format!("{} cache entries missing (run extract): {}", missing.len(), missing.join(", "))));
        }
        let mut by_kind: BTreeMap<FeatureKind, Vec<Example>> = kinds.iter().map(|&k| (k, Vec::new())).collect();
        for e in entries {
            let id = e.recording_id();
            for (segment, seg) in self.segments(&id, d)?.into_iter().enumerate() {
                for r in seg {
                    if let Some(v) = by_kind.get_mut(&r.kind) {
                        v.push(Example {
                            recording_id: id.clone(),
                            dataset: e.dataset.clone(),
                            label: e.mode,
                            segment,
                            values: r.values,
                        });
                    }
                }
            }
        }
        Ok(kinds
            .iter()
            .map(|&kind| LabeledSet {
                kind,
                duration: d,
                examples: by_kind.remove(&kind).unwrap_or_default(),
            })
            .collect())
    }
}

pub fn ensure_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| Error::Config(format!("cannot create {}: {e}", p.display())))
}
