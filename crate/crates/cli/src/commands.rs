use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use yezema::contour::StabilityMethod;
use yezema::features::{analyze_recording, segment_features, write_feature_file, ExtractParams, FeatureKind, RecordingAnalysis};
use yezema::ingest::{load_audio, load_manifest, synthesize, write_wav, CorpusSpec, DatasetManifest, InputDuration, ManifestEntry};
use yezema::model::{
    evaluate_cross, fit_classifier, kfold_cv, load_checkpoint, save_checkpoint, EvalOptions, EvalReport, Example, Protocol, ResultsGrid,
};
use yezema::modescale::{analyze_mode, report_json, write_distribution_csv};
use yezema::par::{self, ExecMode};
use yezema::pitch::{write_contour_csv, ContourCsvRow};
use yezema::{presets, Error, Mode, Result};

use crate::cache::{ensure_dir, Cache};
use crate::config::{InitMethod, PipelineConfig};

/// How a command ended when it did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Some inputs failed; the rest were processed.
    Partial,
}

fn io_err(p: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("{}: {e}", p.display()))
}

pub fn synth(specs: &[CorpusSpec], out: &Path, exec: ExecMode) -> Result<Status> {
    let wav_dir = out.join("wav");
    let truth_dir = out.join("truth");
    ensure_dir(&wav_dir)?;
    ensure_dir(&truth_dir)?;
    let mut jobs = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        std::fs::write(out.join(format!("corpus.{i}.resolved.toml")), toml::to_string_pretty(spec).map_err(|e| Error::Config(e.to_string()))?)
            .map_err(|e| io_err(out, e))?;
        for (mode, name, s) in spec.recordings()? {
            jobs.push((mode, name, spec.dataset.clone(), s));
        }
    }
    let mut seen = BTreeSet::new();
    if let Some((_, name, ..)) = jobs.iter().find(|j| !seen.insert(j.1.clone())) {
        return Err(Error::Config(format!("recording name {name} generated twice; give each corpus its own dataset tag")));
    }
    let rows = par::map(exec, &jobs, |(mode, name, dataset, s)| -> Result<ManifestEntry> {
        let (audio, truth) = synthesize(s)?;
        let rel = format!("wav/{name}.wav");
        write_wav(out.join(&rel), &audio)?;
        write_contour_csv(truth_dir.join(format!("{name}.csv")), &truth, None)?;
        Ok(ManifestEntry {
            path: rel,
            mode: *mode,
            dataset: dataset.clone(),
            duration_s: audio.duration_s(),
            present: true,
        })
    });
    let manifest = DatasetManifest {
        entries: rows.into_iter().collect::<Result<Vec<_>>>()?,
        base_dir: out.to_path_buf(),
    };
    manifest.write_csv(out.join("manifest.csv"))?;
    println!("synth: {} recordings written to {}", manifest.entries.len(), out.display());
    Ok(Status::Ok)
}

/// Every manifest entry, with the manifest it came from.
pub fn load_entries(cfg: &PipelineConfig) -> Result<Vec<(ManifestEntry, PathBuf)>> {
    let mut out: Vec<(ManifestEntry, PathBuf)> = Vec::new();
    let mut ids = BTreeSet::new();
    for m in &cfg.paths.manifests {
        let manifest = load_manifest(m)?;
        for e in &manifest.entries {
            let id = e.recording_id();
            if !ids.insert(id.clone()) {
                return Err(Error::Dataset(format!("recording {id} listed twice across manifests")));
            }
            out.push((e.clone(), manifest.resolve(e)));
        }
    }
    Ok(out)
}

enum Outcome {
    Cached,
    Extracted,
    Failed,
}

fn extract_one(entry: &ManifestEntry, path: &Path, cache: &Cache, p: &ExtractParams, durations: &[InputDuration]) -> Result<()> {
    let audio = load_audio(path)?;
    let analysis = analyze_recording(&audio, p)?;
    let id = entry.recording_id();
    write_contours(cache, &id, &analysis)?;
    for &d in durations {
        let records = match segment_features(&audio, &analysis, d, &p.spectral) {
            Ok(segs) => segs.into_iter().flatten().collect(),
            Err(Error::TooShort { .. }) => {
                log::warn!("{id}: shorter than half a {} window, no segments", d.label());
                Vec::new()
            }
            Err(e) => return Err(e),
        };
        write_feature_file(cache.features(&id, d), &records)?;
    }
    Ok(())
}

fn write_contours(cache: &Cache, id: &str, a: &RecordingAnalysis) -> Result<()> {
    write_contour_csv(cache.contour(id, None), &a.contour, None)?;
    for m in [StabilityMethod::Masking, StabilityMethod::Morphetic] {
        let mask = a.mask(m).expect("stabilized method");
        let rows: Vec<ContourCsvRow> = (0..a.contour.len())
            .map(|i| ContourCsvRow {
                stable: mask.stable[i],
                cents_calibrated: a.calibrated.voiced[i].then(|| a.calibrated.cents[i]),
            })
            .collect();
        write_contour_csv(cache.contour(id, Some(m.name())), &a.contour, Some(&rows))?;
    }
    Ok(())
}

pub fn extract(cfg: &PipelineConfig, force: bool, exec: ExecMode) -> Result<Status> {
    let entries = load_entries(cfg)?;
    let cache = Cache::new(&cfg.paths.cache_dir);
    cache.create_dirs()?;
    let mut durations = cfg.features.durations.clone();
    if !durations.contains(&InputDuration::Full) {
        durations.push(InputDuration::Full);
    }
    let fresh = force || !cache.params_match(&cfg.extract);
    if fresh && !force && cache.root.join("params.json").exists() {
        log::info!("extraction parameters changed; recomputing every cache entry");
    }
    cache.write_params(&cfg.extract)?;
    let outcomes = par::map(exec, &entries, |(entry, path)| {
        let id = entry.recording_id();
        if !fresh && cache.is_complete(&id, &durations) {
            return Outcome::Cached;
        }
        match extract_one(entry, path, &cache, &cfg.extract, &durations) {
            Ok(()) => {
                log::info!("extracted {id}");
                Outcome::Extracted
            }
            Err(e) => {
                log::error!("{}: {e}", path.display());
                for &d in &durations {
                    let _ = std::fs::remove_file(cache.features(&id, d));
                }
                Outcome::Failed
            }
        }
    });
    let count = |f: fn(&Outcome) -> bool| outcomes.iter().filter(|o| f(o)).count();
    let (done, cached, failed) = (
        count(|o| matches!(o, Outcome::Extracted)),
        count(|o| matches!(o, Outcome::Cached)),
        count(|o| matches!(o, Outcome::Failed)),
    );
    cfg.snapshot(&cache.root, "extract")?;
    println!("extract: {done} extracted, {cached} cached, {failed} failed");
    Ok(if failed > 0 { Status::Partial } else { Status::Ok })
}

struct Datasets {
    within: String,
    cross: Option<String>,
}

fn datasets(cfg: &PipelineConfig, entries: &[(ManifestEntry, PathBuf)]) -> Result<Datasets> {
    let tags: BTreeSet<&str> = entries.iter().map(|(e, _)| e.dataset.as_str()).collect();
    let within = match &cfg.eval.dataset {
        Some(d) if tags.contains(d.as_str()) => d.clone(),
        Some(d) => return Err(Error::Config(format!("eval.dataset {d:?} not in the manifests ({tags:?})"))),
        None => tags.iter().next().ok_or_else(|| Error::Dataset("manifests list no recordings".into()))?.to_string(),
    };
    let cross = match &cfg.eval.cross_test {
        Some(d) if *d == within => return Err(Error::Config("eval.cross_test must differ from eval.dataset".into())),
        Some(d) if tags.contains(d.as_str()) => Some(d.clone()),
        Some(d) => return Err(Error::Config(format!("eval.cross_test {d:?} not in the manifests ({tags:?})"))),
        None if tags.len() == 2 => tags.iter().find(|t| **t != within).map(|t| t.to_string()),
        None => None,
    };
    Ok(Datasets { within, cross })
}

fn of_dataset<'a>(entries: &'a [(ManifestEntry, PathBuf)], tag: &str) -> Vec<&'a ManifestEntry> {
    entries.iter().map(|(e, _)| e).filter(|e| e.dataset == tag).collect()
}

fn setting_name(kind: FeatureKind, d: InputDuration) -> String {
    format!("{}.{}", kind.id(), d.label())
}

fn model_path(cfg: &PipelineConfig, kind: FeatureKind, d: InputDuration) -> PathBuf {
    cfg.paths.output_dir.join("models").join(format!("{}.yzm", setting_name(kind, d)))
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelMeta {
    dataset: String,
    n_train: usize,
    final_train_loss: f64,
}

fn meta_path(cfg: &PipelineConfig, kind: FeatureKind, d: InputDuration) -> PathBuf {
    model_path(cfg, kind, d).with_extension("meta.json")
}

fn write_loss_curve(path: &Path, curve: &[f64]) -> Result<()> {
    let mut s = String::from("epoch,loss\n");
    for (i, l) in curve.iter().enumerate() {
        s.push_str(&format!("{},{l}\n", i + 1));
    }
    std::fs::write(path, s).map_err(|e| io_err(path, e))
}

fn settings(cfg: &PipelineConfig) -> Result<Vec<(FeatureKind, InputDuration)>> {
    let kinds = cfg.kinds()?;
    Ok(cfg.features.durations.iter().flat_map(|&d| kinds.iter().map(move |&k| (k, d))).collect())
}

pub fn train_models(cfg: &PipelineConfig, exec: ExecMode) -> Result<Status> {
    let entries = load_entries(cfg)?;
    let ds = datasets(cfg, &entries)?;
    let cache = Cache::new(&cfg.paths.cache_dir);
    let recs = of_dataset(&entries, &ds.within);
    ensure_dir(&cfg.paths.output_dir.join("models"))?;
    cfg.train.warn_overrides();
    let kinds = cfg.kinds()?;
    for &d in &cfg.features.durations {
        let sets = cache.labeled_sets(&recs, &kinds, d)?;
        let results = par::map(exec, &sets, |set| -> Result<()> {
            let examples: Vec<&Example> = set.examples.iter().collect();
            let (clf, curve) = fit_classifier(set.kind, &examples, &cfg.network, &cfg.train)?;
            save_checkpoint(model_path(cfg, set.kind, d), &clf)?;
            write_loss_curve(&model_path(cfg, set.kind, d).with_extension("loss.csv"), &curve)?;
            let meta = ModelMeta {
                dataset: ds.within.clone(),
                n_train: examples.len(),
                final_train_loss: curve.last().copied().unwrap_or(f64::NAN),
            };
            let mp = meta_path(cfg, set.kind, d);
            std::fs::write(&mp, serde_json::to_string_pretty(&meta)?).map_err(|e| io_err(&mp, e))?;
            println!("train: {} on {} ({} segments), final loss {:.4}", setting_name(set.kind, d), ds.within, examples.len(), meta.final_train_loss);
            Ok(())
        });
        results.into_iter().collect::<Result<Vec<()>>>()?;
    }
    cfg.snapshot(&cfg.paths.output_dir, "train")?;
    Ok(Status::Ok)
}

fn report_path(cfg: &PipelineConfig, protocol: Protocol, kind: FeatureKind, d: InputDuration) -> PathBuf {
    let p = match protocol {
        Protocol::Within => "within",
        Protocol::Cross => "cross",
    };
    cfg.paths.output_dir.join("eval").join(format!("{p}.{}.json", setting_name(kind, d)))
}

pub fn eval(cfg: &PipelineConfig, exec: ExecMode) -> Result<Status> {
    let entries = load_entries(cfg)?;
    let ds = datasets(cfg, &entries)?;
    let cache = Cache::new(&cfg.paths.cache_dir);
    let all = settings(cfg)?;
    if ds.cross.is_some() {
        let missing: Vec<String> = all
            .iter()
            .map(|&(k, d)| model_path(cfg, k, d))
            .filter(|p| !p.is_file())
            .map(|p| p.display().to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Checkpoint(format!("no trained model at {} (run train first)", missing.join(", "))));
        }
    }
    ensure_dir(&cfg.paths.output_dir.join("eval"))?;
    let opts = EvalOptions {
        network: cfg.network.clone(),
        train: cfg.train.clone(),
        folds: cfg.eval.folds,
        fold_seed: cfg.eval.fold_seed,
        exec,
    };
    cfg.train.warn_overrides();
    let kinds = cfg.kinds()?;
    let within = of_dataset(&entries, &ds.within);
    for &d in &cfg.features.durations {
        for set in cache.labeled_sets(&within, &kinds, d)? {
            let r = kfold_cv(&set, &opts)?;
            write_report(&report_path(cfg, Protocol::Within, set.kind, d), &r)?;
            println!("eval: within {} {:.2}%", setting_name(set.kind, d), r.accuracy);
        }
        if let Some(test) = &ds.cross {
            for set in cache.labeled_sets(&of_dataset(&entries, test), &kinds, d)? {
                let clf = load_checkpoint(model_path(cfg, set.kind, d))?;
                let meta: Option<ModelMeta> = std::fs::read_to_string(meta_path(cfg, set.kind, d)).ok().and_then(|s| serde_json::from_str(&s).ok());
                if let Some(m) = &meta {
                    if m.dataset == *test {
                        return Err(Error::Dataset(format!("model {} was trained on the test dataset {test}", setting_name(set.kind, d))));
                    }
                }
                let (n, loss) = meta.map_or((0, f64::NAN), |m| (m.n_train, m.final_train_loss));
                let r = evaluate_cross(&clf, &set, n, loss)?;
                write_report(&report_path(cfg, Protocol::Cross, set.kind, d), &r)?;
                println!("eval: cross {} {:.2}%", setting_name(set.kind, d), r.accuracy);
            }
        }
    }
    cfg.snapshot(&cfg.paths.output_dir, "eval")?;
    write_grid(cfg)?;
    Ok(Status::Ok)
}

fn write_report(path: &Path, r: &EvalReport) -> Result<()> {
    std::fs::write(path, r.to_json()?).map_err(|e| io_err(path, e))
}

fn read_reports(cfg: &PipelineConfig) -> Result<Vec<EvalReport>> {
    let dir = cfg.paths.output_dir.join("eval");
    let mut paths: Vec<PathBuf> = match std::fs::read_dir(&dir) {
        Ok(rd) => rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "json")).collect(),
        Err(_) => Vec::new(),
    };
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let s = std::fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            serde_json::from_str(&s).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        })
        .collect()
}

/// Rebuild `results.csv` from the saved evaluation reports.
fn write_grid(cfg: &PipelineConfig) -> Result<ResultsGrid> {
    let mut grid = ResultsGrid::default();
    for r in read_reports(cfg)? {
        if InputDuration::GRID.contains(&r.setting.duration) {
            grid.insert(&r)?;
        }
    }
    grid.write_csv(cfg.paths.output_dir.join("results.csv"))?;
    Ok(grid)
}

pub fn analyze(cfg: &PipelineConfig, exec: ExecMode) -> Result<Status> {
    let entries = load_entries(cfg)?;
    let cache = Cache::new(&cfg.paths.cache_dir);
    let pooled: Vec<&ManifestEntry> = entries
        .iter()
        .map(|(e, _)| e)
        .filter(|e| cfg.analysis.datasets.is_empty() || cfg.analysis.datasets.contains(&e.dataset))
        .collect();
    if pooled.is_empty() {
        return Err(Error::Dataset(format!("no recordings in datasets {:?}", cfg.analysis.datasets)));
    }
    let kind = FeatureKind::pitch(StabilityMethod::Masking, true);
    let set = cache.labeled_sets(&pooled, &[kind], InputDuration::Full)?.remove(0);
    let out = cfg.paths.output_dir.join("analysis");
    ensure_dir(&out)?;
    let params = cfg.analysis.params();
    let mut analyses = Vec::new();
    for mode in Mode::ALL {
        let dists: Vec<(String, yezema::features::PitchDistribution)> = set
            .examples
            .iter()
            .filter(|e| e.label == mode)
            .map(|e| (e.recording_id.clone(), yezema::features::PitchDistribution::from_bins(e.values.clone())))
            .collect();
        if dists.is_empty() {
            log::warn!("no {mode} recordings; skipping");
            continue;
        }
        let init: Option<Vec<f64>> = match cfg.analysis.init {
            InitMethod::Preset => Some(presets::pitch_set(mode).iter().map(|p| p.mu).collect()),
            InitMethod::Peaks => None,
        };
        let a = analyze_mode(mode, &dists, init.as_deref(), &params, exec)?;
        let stem = mode.name().to_lowercase();
        write_distribution_csv(out.join(format!("{stem}.aligned.csv")), &a.average)?;
        let mut shifts = String::from("recording_id,shift_bins\n");
        for (id, s) in a.recording_ids.iter().zip(&a.alignment.shifts) {
            shifts.push_str(&format!("{id},{s}\n"));
        }
        let sp = out.join(format!("{stem}.shifts.csv"));
        std::fs::write(&sp, shifts).map_err(|e| io_err(&sp, e))?;
        let names: Vec<String> = a.report.in_octave().map(|p| format!("{} {:.0}", p.name, p.mu_cents)).collect();
        println!("analyze: {mode} {} recordings, in-octave pitches: {}", a.recording_ids.len(), names.join(", "));
        analyses.push(a);
    }
    let jp = out.join("pitch_sets.json");
    std::fs::write(&jp, report_json(&analyses)?).map_err(|e| io_err(&jp, e))?;
    cfg.snapshot(&cfg.paths.output_dir, "analyze")?;
    Ok(Status::Ok)
}

#[derive(Deserialize)]
struct PitchRow {
    name: String,
    mu_cents: f64,
    var: f64,
    weight: f64,
    in_octave: bool,
    delta_mu: Option<f64>,
}

#[derive(Deserialize)]
struct ModeRows {
    mode: Mode,
    pitches: Vec<PitchRow>,
}

/// Regenerate the plot-ready tables from saved evaluation and analysis
/// outputs, without recomputing anything.
pub fn report(cfg: &PipelineConfig) -> Result<Status> {
    let grid = write_grid(cfg)?;
    print!("{}", grid.to_csv());
    let jp = cfg.paths.output_dir.join("analysis").join("pitch_sets.json");
    if let Ok(s) = std::fs::read_to_string(&jp) {
        let modes: Vec<ModeRows> = serde_json::from_str(&s).map_err(|e| Error::Config(format!("{}: {e}", jp.display())))?;
        let mut csv = String::from("mode,name,mu_cents,var,weight,in_octave,delta_mu\n");
        for m in &modes {
            for p in &m.pitches {
                csv.push_str(&format!(
                    "{},{},{:.2},{:.2},{:.4},{},{}\n",
                    m.mode.name(),
                    p.name,
                    p.mu_cents,
                    p.var,
                    p.weight,
                    p.in_octave,
                    p.delta_mu.map(|d| format!("{d:.2}")).unwrap_or_default()
                ));
            }
        }
        let cp = cfg.paths.output_dir.join("pitch_sets.csv");
        std::fs::write(&cp, csv).map_err(|e| io_err(&cp, e))?;
    }
    cfg.snapshot(&cfg.paths.output_dir, "report")?;
    Ok(Status::Ok)
}
