use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mode::Mode;

/// One recording of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path as written in the manifest.
    pub path: String,
    pub mode: Mode,
    pub dataset: String,
    pub duration_s: f64,
    /// `false` if the audio file did not exist when the manifest was loaded.
    #[serde(skip)]
    pub present: bool,
}

impl ManifestEntry {
    /// Stable identifier derived from the path: file stem plus a short hash of
    /// the full path, safe for use as a cache file name.
    pub fn recording_id(&self) -> String {
        let stem = Path::new(&self.path)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "rec".into());
        let clean: String = stem
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        // FNV-1a
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.path.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{clean}-{:08x}", h as u32)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
struct Row {
    path: String,
    mode: String,
    dataset: String,
    duration_s: f64,
}

impl DatasetManifest {
    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn class_counts(&self) -> BTreeMap<Mode, usize> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry(e.mode).or_insert(0) += 1;
        }
        m
    }

    pub fn datasets(&self) -> Vec<String> {
        let mut tags: Vec<String> = self.entries.iter().map(|e| e.dataset.clone()).collect();
        tags.sort();
        tags.dedup();
        tags
    }

    /// Entries whose dataset tag equals `tag`.
    pub fn filter_dataset(&self, tag: &str) -> DatasetManifest {
        DatasetManifest {
            entries: self.entries.iter().filter(|e| e.dataset == tag).cloned().collect(),
            base_dir: self.base_dir.clone(),
        }
    }

    pub fn missing(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| !e.present)
    }

    /// Write as `path,mode,dataset,duration_s` CSV.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["path", "mode", "dataset", "duration_s"])?;
        for e in &self.entries {
            w.write_record([
                e.path.as_str(),
                e.mode.name(),
                e.dataset.as_str(),
                &format!("{:.3}", e.duration_s),
            ])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Load and validate a manifest CSV with header `path,mode,dataset,duration_s`.
///
/// Rows pointing at missing files are kept but flagged (`present == false`)
/// and logged; unknown modes, duplicate paths and non-positive durations are
/// errors naming the offending row (1-based, header excluded).
pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    let expected = ["path", "mode", "dataset", "duration_s"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Manifest {
            row: 0,
            reason: format!("header must be `{}`, found `{}`", expected.join(","), headers.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut manifest = DatasetManifest {
        entries: Vec::new(),
        base_dir,
    };
    let mut seen = HashSet::new();
    for (i, rec) in reader.deserialize::<Row>().enumerate() {
        let row_no = i + 1;
        let row = rec.map_err(|e| Error::Manifest {
            row: row_no,
            reason: e.to_string(),
        })?;
        let mode: Mode = row.mode.parse().map_err(|e: crate::mode::UnknownMode| Error::Manifest {
            row: row_no,
            reason: e.to_string(),
        })?;
        if !(row.duration_s > 0.0 && row.duration_s.is_finite()) {
            return Err(Error::Manifest {
                row: row_no,
                reason: format!("duration_s must be positive, got {}", row.duration_s),
            });
        }
        if !seen.insert(row.path.clone()) {
            return Err(Error::Manifest {
                row: row_no,
                reason: format!("duplicate path {}", row.path),
            });
        }
        let mut entry = ManifestEntry {
            path: row.path,
            mode,
            dataset: row.dataset,
            duration_s: row.duration_s,
            present: true,
        };
        entry.present = manifest.resolve(&entry).is_file();
        if !entry.present {
            log::warn!("manifest row {row_no}: file {} not found", entry.path);
        }
        manifest.entries.push(entry);
    }
    Ok(manifest)
}
