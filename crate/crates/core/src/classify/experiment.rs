//! Cross-validated prediction of household characteristics from per-home
//! feature vectors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disagg::DisaggConfig;
use crate::error::{Error, Result};
use crate::features::{chi2_select, extract_home_features, FeatureSet, FeatureVector, NovelConfig};
use crate::manifest::{DatasetManifest, HomeData};

use super::{
    accuracy_pct, knn_classify, label_characteristics, majority_baseline, rf_classify, stratified_folds,
    Characteristic, ForestConfig, HouseholdRecord,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classifier {
    #[serde(rename = "knn")]
    Knn,
    #[serde(rename = "rf")]
    Rf,
    #[serde(rename = "majority")]
    Majority,
}

impl Classifier {
    pub fn name(self) -> &'static str {
        match self {
            Classifier::Knn => "knn",
            Classifier::Rf => "rf",
            Classifier::Majority => "majority",
        }
    }
}

impl std::str::FromStr for Classifier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(Classifier::Knn),
            "rf" => Ok(Classifier::Rf),
            "majority" => Ok(Classifier::Majority),
            other => Err(Error::Config(format!("unknown classifier {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub folds: usize,
    pub seed: u64,
    pub knn_k: usize,
    pub forest: ForestConfig,
    /// Candidate feature counts for the inner scan; the full set is always
    /// tried as well.
    pub k_grid: Vec<usize>,
    pub novel: NovelConfig,
    pub disagg: DisaggConfig,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            folds: 2,
            seed: 7,
            knn_k: 5,
            forest: ForestConfig::default(),
            k_grid: vec![2, 4, 6, 8],
            novel: NovelConfig::default(),
            disagg: DisaggConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub characteristic: Characteristic,
    pub source: FeatureSet,
    pub classifier: Classifier,
    pub homes: usize,
    pub accuracy_pct: f64,
    /// Accuracy of predicting the modal training class, same folds.
    pub baseline_pct: f64,
    /// Features chosen on each training fold.
    pub selected_features: Vec<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedCharacteristic {
    pub characteristic: Characteristic,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassifyResults {
    pub rows: Vec<AccuracyRow>,
    pub skipped: Vec<SkippedCharacteristic>,
}

impl ClassifyResults {
    pub fn row(&self, c: Characteristic, source: FeatureSet) -> Option<&AccuracyRow> {
        self.rows.iter().find(|r| r.characteristic == c && r.source == source)
    }
}

/// Per-fold min-max scaling fitted on training rows. Test values are
/// clipped into `[0, 1]`, keeping everything valid for chi-squared scoring.
struct MinMax {
    lo: Vec<f64>,
    span: Vec<f64>,
}

impl MinMax {
    fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows[0].len();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for r in rows {
            for j in 0..d {
                lo[j] = lo[j].min(r[j]);
                hi[j] = hi[j].max(r[j]);
            }
        }
        let span = lo.iter().zip(&hi).map(|(l, h)| h - l).collect();
        Self { lo, span }
    }

    fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| {
                if self.span[j] > 0.0 {
                    ((v - self.lo[j]) / self.span[j]).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

fn project(rows: &[Vec<f64>], cols: &[usize]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect()
}

fn predict(
    classifier: Classifier,
    train_x: &[Vec<f64>],
    train_y: &[String],
    test_x: &[Vec<f64>],
    cfg: &ClassifyConfig,
) -> Result<Vec<String>> {
    match classifier {
        Classifier::Knn => knn_classify(train_x, train_y, test_x, cfg.knn_k.min(train_x.len())),
        Classifier::Rf => rf_classify(train_x, train_y, test_x, &cfg.forest),
        Classifier::Majority => majority_baseline(train_y, test_x.len()),
    }
}

/// Picks a feature count by leave-one-out accuracy on the training fold;
/// ties go to the smaller count.
fn scan_k(
    classifier: Classifier,
    x: &[Vec<f64>],
    y: &[String],
    ranked: &[usize],
    cfg: &ClassifyConfig,
) -> Result<usize> {
    let d = ranked.len();
    let mut grid: Vec<usize> = cfg.k_grid.iter().copied().filter(|&k| k >= 1 && k < d).collect();
    grid.push(d);
    grid.sort_unstable();
    grid.dedup();
    if grid.len() == 1 || x.len() < 3 {
        return Ok(grid[0]);
    }
    let mut best = (f64::NEG_INFINITY, grid[0]);
    for &k in &grid {
        let cols = &ranked[..k];
        let mut hits = 0usize;
        for held in 0..x.len() {
            let tx: Vec<Vec<f64>> = (0..x.len())
                .filter(|&i| i != held)
                .map(|i| cols.iter().map(|&j| x[i][j]).collect())
                .collect();
            let ty: Vec<String> = (0..y.len()).filter(|&i| i != held).map(|i| y[i].clone()).collect();
            let q = vec![cols.iter().map(|&j| x[held][j]).collect::<Vec<f64>>()];
            if predict(classifier, &tx, &ty, &q, cfg)?[0] == y[held] {
                hits += 1;
            }
        }
        let acc = hits as f64 / x.len() as f64;
        if acc > best.0 {
            best = (acc, k);
        }
    }
    Ok(best.1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvOutcome {
    pub accuracy_pct: f64,
    pub baseline_pct: f64,
    /// Column indices chosen on each training fold, best first.
    pub selected: Vec<Vec<usize>>,
}

/// Stratified cross-validation. Within each training fold features are
/// min-max scaled, ranked by chi-squared score, cut to the best count found
/// by an inner leave-one-out scan, and fed to the classifier. Accuracy is
/// pooled over all held-out homes.
pub fn cross_validate(x: &[Vec<f64>], y: &[String], classifier: Classifier, cfg: &ClassifyConfig) -> Result<CvOutcome> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::Argument("cross-validation needs one label per row".into()));
    }
    let folds = stratified_folds(y, cfg.folds, cfg.seed)?;
    let per_fold: Vec<(Vec<String>, Vec<String>, Vec<String>, Vec<usize>)> = (0..cfg.folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..x.len()).filter(|&i| folds[i] != f).collect();
            let test: Vec<usize> = (0..x.len()).filter(|&i| folds[i] == f).collect();
            let train_y: Vec<String> = train.iter().map(|&i| y[i].clone()).collect();
            let test_y: Vec<String> = test.iter().map(|&i| y[i].clone()).collect();
            let baseline = majority_baseline(&train_y, test.len())?;
            if test.is_empty() {
                return Ok((vec![], vec![], vec![], vec![]));
            }
            let raw_train: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
            let scaler = MinMax::fit(&raw_train);
            let train_x: Vec<Vec<f64>> = raw_train.iter().map(|r| scaler.apply(r)).collect();
            let test_x: Vec<Vec<f64>> = test.iter().map(|&i| scaler.apply(&x[i])).collect();

            let (pred, cols) = if classifier == Classifier::Majority || train_x[0].is_empty() {
                (baseline.clone(), vec![])
            } else {
                let ranked = chi2_select(&train_x, &train_y, train_x[0].len())?.indices;
                let k = scan_k(classifier, &train_x, &train_y, &ranked, cfg)?;
                let cols = ranked[..k].to_vec();
                let pred = predict(classifier, &project(&train_x, &cols), &train_y, &project(&test_x, &cols), cfg)?;
                (pred, cols)
            };
            Ok((pred, baseline, test_y, cols))
        })
        .collect::<Result<Vec<_>>>()?;

    let (mut pred, mut base, mut truth, mut selected) = (vec![], vec![], vec![], vec![]);
    for (p, b, t, c) in per_fold {
        pred.extend(p);
        base.extend(b);
        truth.extend(t);
        selected.push(c);
    }
    Ok(CvOutcome {
        accuracy_pct: accuracy_pct(&pred, &truth),
        baseline_pct: accuracy_pct(&base, &truth),
        selected,
    })
}

/// Why a characteristic cannot be cross-validated on these labels, if it
/// cannot.
fn unusable(labels: &[String], folds: usize) -> Option<String> {
    let mut counts = std::collections::BTreeMap::new();
    for l in labels {
        *counts.entry(l.as_str()).or_insert(0usize) += 1;
    }
    if counts.len() < 2 {
        return Some(format!("only {} class present", counts.len()));
    }
    counts
        .iter()
        .find(|(_, &n)| n < folds)
        .map(|(c, n)| format!("class {c} has {n} home(s), fewer than the {folds} folds"))
}

/// Accuracy table for every characteristic and feature source, from
/// precomputed labels and per-source feature vectors (`features[s][h]` for
/// source `sources[s]` and home `h`).
pub fn run_characteristics(
    records: &[HouseholdRecord],
    sources: &[FeatureSet],
    features: &[Vec<FeatureVector>],
    classifier: Classifier,
    cfg: &ClassifyConfig,
) -> Result<ClassifyResults> {
    let mut out = ClassifyResults::default();
    for c in Characteristic::ALL {
        let homes: Vec<usize> = (0..records.len()).filter(|&h| records[h].label(c).is_some()).collect();
        let y: Vec<String> = homes.iter().map(|&h| records[h].label(c).unwrap().to_string()).collect();
        if let Some(reason) = unusable(&y, cfg.folds) {
            log::warn!("skipping {}: {reason}", c.name());
            out.skipped.push(SkippedCharacteristic {
                characteristic: c,
                reason,
            });
            continue;
        }
        for (s, &source) in sources.iter().enumerate() {
            let x: Vec<Vec<f64>> = homes.iter().map(|&h| features[s][h].values()).collect();
            let cv = cross_validate(&x, &y, classifier, cfg)?;
            let ids = features[s].first().map(FeatureVector::ids).unwrap_or_default();
            out.rows.push(AccuracyRow {
                characteristic: c,
                source,
                classifier,
                homes: homes.len(),
                accuracy_pct: cv.accuracy_pct,
                baseline_pct: cv.baseline_pct,
                selected_features: cv
                    .selected
                    .iter()
                    .map(|fold| fold.iter().map(|&j| ids[j].to_string()).collect())
                    .collect(),
            });
        }
    }
    Ok(out)
}

/// Labels and features for loaded homes, then [`run_characteristics`].
pub fn characteristics_from_homes(
    homes: &[HomeData],
    sources: &[FeatureSet],
    classifier: Classifier,
    cfg: &ClassifyConfig,
) -> Result<ClassifyResults> {
    let mut order: Vec<&HomeData> = homes.iter().collect();
    order.sort_by(|a, b| a.entry.home_id.cmp(&b.entry.home_id));
    let records = order
        .iter()
        .map(|h| label_characteristics(&h.entry.home_id, &h.entry.characteristics))
        .collect::<Result<Vec<_>>>()?;
    let features = sources
        .iter()
        .map(|&s| {
            order
                .par_iter()
                .map(|h| extract_home_features(h, s, &cfg.novel, &cfg.disagg))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    run_characteristics(&records, sources, &features, classifier, cfg)
}

/// Loads every home of the manifest and runs [`characteristics_from_homes`].
pub fn characteristics_experiment(
    manifest: &DatasetManifest,
    sources: &[FeatureSet],
    classifier: Classifier,
    cfg: &ClassifyConfig,
) -> Result<ClassifyResults> {
    let homes = manifest
        .homes
        .par_iter()
        .map(|h| HomeData::load(manifest, h, 900))
        .collect::<Result<Vec<_>>>()?;
    characteristics_from_homes(&homes, sources, classifier, cfg)
}
