use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::ForestConfig;
use crate::error::{Error, Result};
use crate::events::EventPipelineConfig;
use crate::manifest::{DatasetManifest, HomeData};
use crate::series::{OccupancySeries, PowerSeries};

use super::{
    evaluate_occupancy, predict_chen, predict_ours, predict_supervised, ChenStat, OccupancyConfig,
    OccupancyMetrics, SupervisedModel,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    /// Train on the first half of each home, test on the second.
    #[serde(rename = "split-half")]
    SplitHalf,
    /// Each home is tested once with every other home as training data.
    #[serde(rename = "loho")]
    LeaveOneHomeOut,
}

impl std::str::FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "split-half" | "split" => Ok(Protocol::SplitHalf),
            "loho" | "leave-one-home-out" => Ok(Protocol::LeaveOneHomeOut),
            other => Err(Error::Config(format!("unknown protocol {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "ours")]
    Ours,
    /// Event-pair pipeline without the start-of-day rule.
    #[serde(rename = "ours-opt")]
    OursOptimised,
    #[serde(rename = "chen")]
    Chen,
    #[serde(rename = "chen-median")]
    ChenMedian,
    #[serde(rename = "knn")]
    Knn,
    #[serde(rename = "rf")]
    Rf,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Ours => "ours",
            Algorithm::OursOptimised => "ours-opt",
            Algorithm::Chen => "chen",
            Algorithm::ChenMedian => "chen-median",
            Algorithm::Knn => "knn",
            Algorithm::Rf => "rf",
        }
    }

    pub fn is_supervised(self) -> bool {
        matches!(self, Algorithm::Knn | Algorithm::Rf)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ours" => Algorithm::Ours,
            "ours-opt" | "ours-optimised" => Algorithm::OursOptimised,
            "chen" => Algorithm::Chen,
            "chen-median" => Algorithm::ChenMedian,
            "knn" => Algorithm::Knn,
            "rf" => Algorithm::Rf,
            other => return Err(Error::Config(format!("unknown occupancy algorithm {other:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub occupancy: OccupancyConfig,
    pub pipeline: EventPipelineConfig,
    pub knn_k: usize,
    pub forest: ForestConfig,
    pub split_fraction: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            occupancy: OccupancyConfig::default(),
            pipeline: EventPipelineConfig::default(),
            knn_k: 5,
            forest: ForestConfig::default(),
            split_fraction: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyRow {
    pub home_id: String,
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub season: Option<String>,
    #[serde(flatten)]
    pub metrics: OccupancyMetrics,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped_days: Vec<NaiveDate>,
}

/// Mean of per-home metrics for one algorithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub homes: usize,
    pub accuracy_pct: f64,
    pub tp: f64,
    pub tn: f64,
    pub fp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub energy_proxy: f64,
    pub miss_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyResults {
    pub protocol: Protocol,
    pub rows: Vec<OccupancyRow>,
    pub summary: Vec<AlgorithmSummary>,
}

impl OccupancyResults {
    pub fn rows_for(&self, algorithm: Algorithm) -> impl Iterator<Item = &OccupancyRow> {
        self.rows.iter().filter(move |r| r.algorithm == algorithm)
    }

    pub fn summary_for(&self, algorithm: Algorithm) -> Option<&AlgorithmSummary> {
        self.summary.iter().find(|s| s.algorithm == algorithm)
    }
}

/// Loads every home in the manifest and runs [`run_occupancy`].
pub fn occupancy_experiment(
    manifest: &DatasetManifest,
    protocol: Protocol,
    algorithms: &[Algorithm],
    cfg: &ExperimentConfig,
) -> Result<OccupancyResults> {
    let homes = manifest
        .homes
        .par_iter()
        .map(|h| HomeData::load(manifest, h, cfg.occupancy.window_s))
        .collect::<Result<Vec<_>>>()?;
    run_occupancy(&homes, protocol, algorithms, cfg)
}

fn predict_one(
    algorithm: Algorithm,
    test: &PowerSeries,
    train: &[(&PowerSeries, &OccupancySeries)],
    cfg: &ExperimentConfig,
) -> Result<(OccupancySeries, Vec<NaiveDate>)> {
    Ok(match algorithm {
        Algorithm::Ours => (predict_ours(test, &cfg.occupancy, &cfg.pipeline)?.occupancy, vec![]),
        Algorithm::OursOptimised => {
            let occ = OccupancyConfig {
                mark_start_of_day: false,
                ..cfg.occupancy
            };
            (predict_ours(test, &occ, &cfg.pipeline)?.occupancy, vec![])
        }
        Algorithm::Chen | Algorithm::ChenMedian => {
            let stat = if algorithm == Algorithm::Chen {
                ChenStat::Max
            } else {
                ChenStat::Median
            };
            let p = predict_chen(test, &cfg.occupancy, stat)?;
            (p.occupancy, p.skipped_days)
        }
        Algorithm::Knn | Algorithm::Rf => {
            let model = if algorithm == Algorithm::Knn {
                SupervisedModel::Knn { k: cfg.knn_k }
            } else {
                SupervisedModel::RandomForest(cfg.forest)
            };
            (predict_supervised(train, test, &cfg.occupancy, &model)?, vec![])
        }
    })
}

/// Scores each algorithm on each home under `protocol`. Unsupervised
/// algorithms never see training data. Rows are ordered by home id, then by
/// the order of `algorithms`.
pub fn run_occupancy(
    homes: &[HomeData],
    protocol: Protocol,
    algorithms: &[Algorithm],
    cfg: &ExperimentConfig,
) -> Result<OccupancyResults> {
    cfg.occupancy.validate()?;
    for h in homes {
        if h.occupancy.is_none() {
            return Err(Error::Config(format!(
                "home {:?} has no occupancy ground truth",
                h.entry.home_id
            )));
        }
    }
    let supervised = algorithms.iter().any(|a| a.is_supervised());
    if supervised && protocol == Protocol::LeaveOneHomeOut && homes.len() < 2 {
        return Err(Error::Config("leave-one-home-out needs at least 2 homes".into()));
    }

    let mut order: Vec<usize> = (0..homes.len()).collect();
    order.sort_by(|&a, &b| homes[a].entry.home_id.cmp(&homes[b].entry.home_id));

    let per_home: Vec<Vec<OccupancyRow>> = order
        .par_iter()
        .map(|&hi| {
            let home = &homes[hi];
            let truth = home.occupancy.as_ref().expect("checked above");
            let split;
            let (test, train): (&PowerSeries, Vec<(&PowerSeries, &OccupancySeries)>) = match protocol {
                Protocol::SplitHalf => {
                    split = home.aggregate.split_at_fraction(cfg.split_fraction)?;
                    (&split.1, vec![(&split.0, truth)])
                }
                Protocol::LeaveOneHomeOut => {
                    let others = homes
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != hi)
                        .map(|(_, h)| (&h.aggregate, h.occupancy.as_ref().expect("checked above")))
                        .collect();
                    (&home.aggregate, others)
                }
            };
            algorithms
                .iter()
                .map(|&algorithm| {
                    let (pred, skipped_days) = predict_one(algorithm, test, &train, cfg)?;
                    let metrics = evaluate_occupancy(&pred, truth, &cfg.occupancy, home.aggregate.timezone())?;
                    Ok(OccupancyRow {
                        home_id: home.entry.home_id.clone(),
                        algorithm,
                        season: home.entry.season.clone(),
                        metrics,
                        skipped_days,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<OccupancyRow> = per_home.into_iter().flatten().collect();

    let summary = algorithms
        .iter()
        .map(|&algorithm| {
            let sel: Vec<&OccupancyMetrics> =
                rows.iter().filter(|r| r.algorithm == algorithm).map(|r| &r.metrics).collect();
            let n = sel.len().max(1) as f64;
            let mean = |f: &dyn Fn(&OccupancyMetrics) -> f64| sel.iter().map(|m| f(m)).sum::<f64>() / n;
            AlgorithmSummary {
                algorithm,
                homes: sel.len(),
                accuracy_pct: mean(&|m| m.accuracy_pct),
                tp: mean(&|m| m.tp as f64),
                tn: mean(&|m| m.tn as f64),
                fp: mean(&|m| m.fp as f64),
                fn_: mean(&|m| m.fn_ as f64),
                energy_proxy: mean(&|m| m.energy_proxy as f64),
                miss_time: mean(&|m| m.miss_time as f64),
            }
        })
        .collect();

    Ok(OccupancyResults {
        protocol,
        rows,
        summary,
    })
}
