use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{Network, NetworkConfig};
use super::train::{predict, train, TrainConfig};
use crate::features::FeatureKind;
use crate::ingest::InputDuration;
use crate::par::{self, ExecMode};
use crate::{Error, Mode, Result};

/// One classifier input: a feature vector of a recording segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub recording_id: String,
    pub dataset: String,
    pub label: Mode,
    pub segment: usize,
    pub values: Vec<f64>,
}

/// Examples of a single feature kind at a single input duration.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub kind: FeatureKind,
    pub duration: InputDuration,
    pub examples: Vec<Example>,
}

impl LabeledSet {
    /// Recording ids in order of first appearance, with their labels.
    pub fn recordings(&self) -> Result<Vec<(String, Mode)>> {
        let mut seen: BTreeMap<&str, Mode> = BTreeMap::new();
        let mut out = Vec::new();
        for e in &self.examples {
            match seen.get(e.recording_id.as_str()) {
                Some(&m) if m != e.label => {
                    return Err(Error::Dataset(format!("recording {} has segments labelled {m} and {}", e.recording_id, e.label)))
                }
                Some(_) => {}
                None => {
                    seen.insert(&e.recording_id, e.label);
                    out.push((e.recording_id.clone(), e.label));
                }
            }
        }
        Ok(out)
    }

    pub fn labels(&self) -> BTreeSet<Mode> {
        self.examples.iter().map(|e| e.label).collect()
    }

    /// Accuracy (%) of always predicting the most frequent class.
    pub fn majority_baseline(&self) -> f64 {
        let mut counts = [0usize; Mode::COUNT];
        for e in &self.examples {
            counts[e.label.index()] += 1;
        }
        100.0 * *counts.iter().max().unwrap_or(&0) as f64 / self.examples.len().max(1) as f64
    }
}

/// Input normalization fitted on a training split: `(x - offset) * scale`,
/// then zero padding up to the network input length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
    pub input_len: usize,
}

impl Preprocess {
    /// Pitch distributions are rescaled to unit mean bin mass; the spectral
    /// baselines are standardized per dimension.
    pub fn fit(kind: FeatureKind, rows: &[&[f64]], pool_product: usize) -> Preprocess {
        let dim = kind.len();
        let input_len = dim.div_ceil(pool_product) * pool_product;
        if kind.is_pitch() {
            return Preprocess {
                offset: vec![0.0; dim],
                scale: vec![dim as f64; dim],
                input_len,
            };
        }
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var.iter().map(|v| if *v > 1e-20 { 1.0 / v.sqrt() } else { 1.0 }).collect();
        Preprocess {
            offset: mean,
            scale,
            input_len,
        }
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f32> {
        let mut x = vec![0.0f32; self.input_len];
        for (i, v) in values.iter().enumerate().take(self.offset.len()) {
            x[i] = ((v - self.offset[i]) * self.scale[i]) as f32;
        }
        x
    }
}

/// A trained network together with its input normalization.
#[derive(Debug, Clone)]
pub struct Classifier {
    pub kind: FeatureKind,
    pub preprocess: Preprocess,
    pub network: Network<f32>,
}

impl Classifier {
    pub fn predict(&self, rows: &[&[f64]]) -> Vec<Mode> {
        let inputs: Vec<Vec<f32>> = rows.iter().map(|r| self.preprocess.apply(r)).collect();
        predict(&self.network, &inputs)
            .into_iter()
            .map(|i| Mode::from_index(i).expect("three-class network"))
            .collect()
    }
}

/// Settings shared by the evaluation protocols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub folds: usize,
    pub fold_seed: u64,
    #[serde(skip)]
    pub exec: ExecMode,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            network: NetworkConfig::default(),
            train: TrainConfig::default(),
            folds: 5,
            fold_seed: 0,
            exec: ExecMode::default(),
        }
    }
}

/// Train a classifier on `examples` and return it with the loss curve.
pub fn fit_classifier(kind: FeatureKind, examples: &[&Example], net: &NetworkConfig, cfg: &TrainConfig) -> Result<(Classifier, Vec<f64>)> {
    if let Some(e) = examples.iter().find(|e| e.values.len() != kind.len()) {
        return Err(Error::Dataset(format!("{} segment {} has {} values, expected {} for {kind}", e.recording_id, e.segment, e.values.len(), kind.len())));
    }
    let rows: Vec<&[f64]> = examples.iter().map(|e| e.values.as_slice()).collect();
    let preprocess = Preprocess::fit(kind, &rows, net.pool_product());
    let net_cfg = NetworkConfig {
        input_len: preprocess.input_len,
        ..net.clone()
    };
    let data: Vec<(Vec<f32>, usize)> = examples.iter().map(|e| (preprocess.apply(&e.values), e.label.index())).collect();
    let trained = train(&net_cfg, cfg, &data)?;
    Ok((
        Classifier {
            kind,
            preprocess,
            network: trained.network,
        },
        trained.loss_curve,
    ))
}

/// Raw counts, rows = true class, columns = predicted class, in G/E/A order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion(pub [[u64; Mode::COUNT]; Mode::COUNT]);

impl Confusion {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Mode, Mode)>) -> Confusion {
        let mut c = Confusion::default();
        for (truth, pred) in pairs {
            c.0[truth.index()][pred.index()] += 1;
        }
        c
    }

    pub fn add(&mut self, other: &Confusion) {
        for i in 0..Mode::COUNT {
            for j in 0..Mode::COUNT {
                self.0[i][j] += other.0[i][j];
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.0[class].iter().sum()
    }

    /// Overall accuracy in %.
    pub fn accuracy(&self) -> f64 {
        let correct: u64 = (0..Mode::COUNT).map(|i| self.0[i][i]).sum();
        100.0 * correct as f64 / self.total().max(1) as f64
    }

    /// Rows scaled to 100 %; rows without examples stay zero.
    pub fn row_normalized(&self) -> [[f64; Mode::COUNT]; Mode::COUNT] {
        let mut out = [[0.0; Mode::COUNT]; Mode::COUNT];
        for i in 0..Mode::COUNT {
            let s = self.support(i);
            if s > 0 {
                for j in 0..Mode::COUNT {
                    out[i][j] = 100.0 * self.0[i][j] as f64 / s as f64;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Within,
    Cross,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub feature: FeatureKind,
    pub duration: InputDuration,
    pub protocol: Protocol,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub class: Mode,
    pub accuracy: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: f64,
    pub counts: Confusion,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub setting: Setting,
    /// Pooled accuracy over every scored segment, in %.
    pub accuracy: f64,
    /// Unweighted mean of the per-fold accuracies, in %.
    pub mean_fold_accuracy: f64,
    pub per_class: Vec<ClassAccuracy>,
    /// Row-normalized confusion matrix in %.
    pub confusion: [[f64; Mode::COUNT]; Mode::COUNT],
    pub counts: Confusion,
    pub folds: Vec<FoldReport>,
}

impl EvalReport {
    fn new(setting: Setting, folds: Vec<FoldReport>) -> EvalReport {
        let mut counts = Confusion::default();
        for f in &folds {
            counts.add(&f.counts);
        }
        let norm = counts.row_normalized();
        let per_class = Mode::ALL
            .iter()
            .map(|&m| ClassAccuracy {
                class: m,
                accuracy: norm[m.index()][m.index()],
                support: counts.support(m.index()),
            })
            .collect();
        let mean_fold_accuracy = folds.iter().map(|f| f.accuracy).sum::<f64>() / folds.len().max(1) as f64;
        EvalReport {
            setting,
            accuracy: counts.accuracy(),
            mean_fold_accuracy,
            per_class,
            confusion: norm,
            counts,
            folds,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Fold index of every recording: recordings of each class are shuffled and
/// dealt round-robin, the dealing position carrying over between classes.
///
/// Every class needs at least `k` recordings, except for leave-one-out
/// (`k` equal to the number of recordings), which needs two per class.
pub fn assign_folds(set: &LabeledSet, k: usize, seed: u64) -> Result<BTreeMap<String, usize>> {
    let recs = set.recordings()?;
    if k < 2 || k > recs.len() {
        return Err(Error::InvalidParam(format!("k = {k} folds for {} recordings", recs.len())));
    }
    let loo = k == recs.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = BTreeMap::new();
    let mut next = 0;
    for m in Mode::ALL {
        let mut ids: Vec<&String> = recs.iter().filter(|(_, l)| *l == m).map(|(id, _)| id).collect();
        let need = if loo { 2 } else { k };
        if ids.len() < need {
            return Err(Error::TooFewPerClass {
                class: m.name(),
                count: ids.len(),
                k,
            });
        }
        ids.shuffle(&mut rng);
        for id in ids {
            folds.insert(id.clone(), next % k);
            next += 1;
        }
    }
    Ok(folds)
}

fn score(clf: &Classifier, test: &[&Example]) -> Confusion {
    let rows: Vec<&[f64]> = test.iter().map(|e| e.values.as_slice()).collect();
    let preds = clf.predict(&rows);
    Confusion::from_pairs(test.iter().map(|e| e.label).zip(preds))
}

/// Stratified k-fold cross-validation over recordings; every segment is
/// scored independently.
pub fn kfold_cv(set: &LabeledSet, opts: &EvalOptions) -> Result<EvalReport> {
    let k = opts.folds;
    let folds = assign_folds(set, k, opts.fold_seed)?;
    let outcomes = par::map_range(opts.exec, k, |f| -> Result<FoldReport> {
        let (test, tr): (Vec<&Example>, Vec<&Example>) = set.examples.iter().partition(|e| folds[&e.recording_id] == f);
        let net = NetworkConfig {
            seed: opts.network.seed.wrapping_add(f as u64),
            ..opts.network.clone()
        };
        let cfg = TrainConfig {
            seed: opts.train.seed.wrapping_add(f as u64),
            ..opts.train.clone()
        };
        let (clf, curve) = fit_classifier(set.kind, &tr, &net, &cfg)?;
        let counts = score(&clf, &test);
        log::info!("{} {} fold {f}: {:.2}%", set.kind, set.duration.label(), counts.accuracy());
        Ok(FoldReport {
            fold: f,
            n_train: tr.len(),
            n_test: test.len(),
            accuracy: counts.accuracy(),
            counts,
            final_train_loss: curve.last().copied().unwrap_or(f64::NAN),
        })
    });
    let folds = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::new(
        Setting {
            feature: set.kind,
            duration: set.duration,
            protocol: Protocol::Within,
        },
        folds,
    ))
}

/// Train on one dataset, test on another.
pub fn cross_dataset_eval(train_set: &LabeledSet, test_set: &LabeledSet, opts: &EvalOptions) -> Result<EvalReport> {
    check_cross(train_set, test_set)?;
    let tr: Vec<&Example> = train_set.examples.iter().collect();
    let (clf, curve) = fit_classifier(train_set.kind, &tr, &opts.network, &opts.train)?;
    evaluate_cross(&clf, test_set, tr.len(), curve.last().copied().unwrap_or(f64::NAN))
}

/// Score an already trained classifier on a held-out dataset.
pub fn evaluate_cross(clf: &Classifier, test_set: &LabeledSet, n_train: usize, final_train_loss: f64) -> Result<EvalReport> {
    if test_set.examples.is_empty() {
        return Err(Error::Dataset("test set is empty".into()));
    }
    if clf.kind != test_set.kind {
        return Err(Error::Dataset(format!("classifier uses {} but test features are {}", clf.kind, test_set.kind)));
    }
    let test: Vec<&Example> = test_set.examples.iter().collect();
    let counts = score(clf, &test);
    Ok(EvalReport::new(
        Setting {
            feature: test_set.kind,
            duration: test_set.duration,
            protocol: Protocol::Cross,
        },
        vec![FoldReport {
            fold: 0,
            n_train,
            n_test: test.len(),
            accuracy: counts.accuracy(),
            counts,
            final_train_loss,
        }],
    ))
}

pub(crate) fn check_cross(train_set: &LabeledSet, test_set: &LabeledSet) -> Result<()> {
    if test_set.examples.is_empty() {
        return Err(Error::Dataset("test set is empty".into()));
    }
    if train_set.kind != test_set.kind {
        return Err(Error::Dataset(format!("train features {} but test features {}", train_set.kind, test_set.kind)));
    }
    if train_set.labels() != test_set.labels() {
        return Err(Error::Dataset(format!(
            "label sets differ: train {:?}, test {:?}",
            train_set.labels(),
            test_set.labels()
        )));
    }
    let a: BTreeSet<&str> = train_set.examples.iter().map(|e| e.dataset.as_str()).collect();
    let shared: Vec<&str> = test_set.examples.iter().map(|e| e.dataset.as_str()).filter(|d| a.contains(d)).collect();
    if let Some(d) = shared.first() {
        return Err(Error::Dataset(format!("dataset {d} appears in both train and test sets")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n_per_class: usize, segments: usize) -> LabeledSet {
        let mut examples = Vec::new();
        for m in Mode::ALL {
            for r in 0..n_per_class {
                for s in 0..segments {
                    examples.push(Example {
                        recording_id: format!("{}{r}", m.letter()),
                        dataset: "a".into(),
                        label: m,
                        segment: s,
                        values: vec![0.0; 12],
                    });
                }
            }
        }
        LabeledSet {
            kind: FeatureKind::Chroma12,
            duration: InputDuration::Full,
            examples,
        }
    }

    #[test]
    fn folds_are_stratified_and_balanced() {
        let s = set(10, 3);
        let folds = assign_folds(&s, 5, 7).unwrap();
        assert_eq!(folds.len(), 30);
        for m in Mode::ALL {
            let mut per = [0; 5];
            for (id, f) in &folds {
                if id.starts_with(m.letter()) {
                    per[*f] += 1;
                }
            }
            assert_eq!(per, [2; 5]);
        }
        assert_eq!(assign_folds(&s, 5, 7).unwrap(), folds);
    }

    #[test]
    fn fold_errors() {
        assert!(matches!(assign_folds(&set(4, 1), 5, 0), Err(Error::TooFewPerClass { count: 4, k: 5, .. })));
        assert_eq!(assign_folds(&set(2, 1), 6, 0).unwrap().values().collect::<BTreeSet<_>>().len(), 6);
        assert!(assign_folds(&set(1, 1), 3, 0).is_err());
    }

    #[test]
    fn confusion_accuracy_matches_direct_count() {
        let pairs = [
            (Mode::Geez, Mode::Geez),
            (Mode::Geez, Mode::Geez),
            (Mode::Ezil, Mode::Araray),
            (Mode::Ezil, Mode::Ezil),
            (Mode::Araray, Mode::Araray),
        ];
        let c = Confusion::from_pairs(pairs);
        let direct = 100.0 * pairs.iter().filter(|(a, b)| a == b).count() as f64 / pairs.len() as f64;
        assert!((c.accuracy() - direct).abs() < 1e-9);
        let weighted: f64 = (0..3).map(|i| c.row_normalized()[i][i] * c.support(i) as f64).sum::<f64>() / c.total() as f64;
        assert!((weighted - direct).abs() < 1e-9);
        for row in c.row_normalized() {
            assert!((row.iter().sum::<f64>() - 100.0).abs() < 0.01);
        }
    }

    #[test]
    fn preprocess_pads_and_standardizes() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| (0..12).map(|j| (i * j) as f64).collect()).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let p = Preprocess::fit(FeatureKind::Chroma12, &refs, 128);
        assert_eq!(p.input_len, 128);
        let x = p.apply(&rows[0]);
        assert_eq!(x.len(), 128);
        assert!(x[12..].iter().all(|&v| v == 0.0));
        let col5: Vec<f32> = rows.iter().map(|r| p.apply(r)[5]).collect();
        assert!(col5.iter().sum::<f32>().abs() < 1e-5);
    }

    #[test]
    fn cross_checks() {
        let a = set(2, 1);
        let mut b = set(2, 1);
        assert!(check_cross(&a, &b).is_err());
        b.examples.iter_mut().for_each(|e| e.dataset = "b".into());
        assert!(check_cross(&a, &b).is_ok());
        b.examples.retain(|e| e.label != Mode::Araray);
        assert!(check_cross(&a, &b).is_err());
        b.examples.clear();
        assert!(check_cross(&a, &b).is_err());
    }
}
