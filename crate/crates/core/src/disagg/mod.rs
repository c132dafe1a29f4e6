//! Appliance-level disaggregation: a supervised factorial HMM decoded
//! exactly, an unsupervised edge-pair reconstruction, and the usual NILM
//! accuracy metrics.

mod fhmm;
mod hart;
mod hmm;
mod metrics;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::HomeData;
use crate::series::PowerSeries;

pub use fhmm::{fhmm_disaggregate, viterbi_path, MAX_PRODUCT_STATES};
pub use hart::{
    hart_disaggregate, pulse_trace, HartConfig, HartOutput, PairCluster, HVAC_TRACE, TOP_APPLIANCE_TRACE,
};
pub use hmm::{train_hmm, ApplianceHmm, OFF_SNAP_W};
pub use metrics::{nilm_metrics, NilmMetrics};

#[derive(Clone, Debug, PartialEq)]
pub struct ApplianceTrace {
    pub name: String,
    pub power: PowerSeries,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DisaggResult {
    pub traces: Vec<ApplianceTrace>,
    /// Aggregate minus all predicted traces, clamped at 0.
    pub residual: PowerSeries,
}

impl DisaggResult {
    pub fn trace(&self, name: &str) -> Option<&PowerSeries> {
        self.traces.iter().find(|t| t.name == name).map(|t| &t.power)
    }

    /// The trace named like an HVAC circuit, if any.
    pub fn hvac(&self) -> Option<&PowerSeries> {
        self.traces
            .iter()
            .find(|t| t.name.to_ascii_lowercase().starts_with("hvac"))
            .map(|t| &t.power)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisaggAlgorithm {
    #[serde(rename = "fhmm")]
    Fhmm,
    #[serde(rename = "hart")]
    Hart,
}

impl DisaggAlgorithm {
    pub fn name(self) -> &'static str {
        match self {
            DisaggAlgorithm::Fhmm => "fhmm",
            DisaggAlgorithm::Hart => "hart",
        }
    }
}

impl std::str::FromStr for DisaggAlgorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fhmm" => Ok(DisaggAlgorithm::Fhmm),
            "hart" => Ok(DisaggAlgorithm::Hart),
            other => Err(Error::Config(format!("unknown disaggregation algorithm {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisaggConfig {
    pub states: usize,
    pub hvac_states: usize,
    pub seed: u64,
    /// Leading fraction of each home used to train appliance models.
    pub train_fraction: f64,
    pub on_threshold_w: f64,
    pub hart: HartConfig,
}

impl Default for DisaggConfig {
    fn default() -> Self {
        Self {
            states: 2,
            hvac_states: 3,
            seed: 7,
            train_fraction: 0.5,
            on_threshold_w: 50.0,
            hart: HartConfig::default(),
        }
    }
}

fn is_hvac(name: &str) -> bool {
    name.to_ascii_lowercase().starts_with("hvac")
}

/// Trains one model per submetered appliance on the leading
/// `train_fraction` of the home. A model that cannot support the requested
/// state count is retried with fewer states; an appliance that never
/// switches yields `None`.
pub fn train_home_models(home: &HomeData, cfg: &DisaggConfig) -> Result<Vec<(String, Option<ApplianceHmm>)>> {
    home.appliances
        .par_iter()
        .map(|(name, s)| {
            let train = s.split_at_fraction(cfg.train_fraction)?.0;
            let mut k = if is_hvac(name) { cfg.hvac_states } else { cfg.states };
            loop {
                match train_hmm(name, &train, k, cfg.seed) {
                    Ok(m) => return Ok((name.clone(), Some(m))),
                    Err(Error::DegenerateModel(msg)) if k > 2 => {
                        log::debug!("{}: {msg}; retrying with {} states", home.entry.home_id, k - 1);
                        k -= 1;
                    }
                    Err(Error::DegenerateModel(msg)) => {
                        log::warn!("{}: {msg}; predicting it as always off", home.entry.home_id);
                        return Ok((name.clone(), None));
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect()
}

/// Disaggregates the whole span of a home's aggregate. FHMM trains on the
/// home's own submeters (see [`train_home_models`]); Hart needs no training.
pub fn disaggregate_home(home: &HomeData, algorithm: DisaggAlgorithm, cfg: &DisaggConfig) -> Result<DisaggResult> {
    match algorithm {
        DisaggAlgorithm::Hart => Ok(hart_disaggregate(&home.aggregate, &cfg.hart)?.result),
        DisaggAlgorithm::Fhmm => {
            if home.appliances.is_empty() {
                return Err(Error::Config(format!(
                    "home {:?} has no submetered appliances to train on",
                    home.entry.home_id
                )));
            }
            let trained = train_home_models(home, cfg)?;
            let models: Vec<ApplianceHmm> = trained.iter().filter_map(|(_, m)| m.clone()).collect();
            let mut decoded = if models.is_empty() {
                DisaggResult {
                    traces: vec![],
                    residual: home.aggregate.clone(),
                }
            } else {
                fhmm_disaggregate(&home.aggregate, &models)?
            };
            let mut traces = Vec::with_capacity(trained.len());
            for (name, m) in &trained {
                match m {
                    Some(_) => {
                        let i = decoded.traces.iter().position(|t| &t.name == name).expect("decoded");
                        traces.push(decoded.traces.swap_remove(i));
                    }
                    None => traces.push(ApplianceTrace {
                        name: name.clone(),
                        power: home.aggregate.zeros_like(),
                    }),
                }
            }
            decoded.traces = traces;
            Ok(decoded)
        }
    }
}

/// Accuracy of one predicted appliance trace over the held-out span.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisaggRow {
    pub home_id: String,
    pub algorithm: DisaggAlgorithm,
    pub appliance: String,
    #[serde(flatten)]
    pub metrics: NilmMetrics,
}

/// Scores every predicted trace that has a submetered counterpart, on the
/// part of the span after `train_fraction`. Hart's HVAC trace is matched
/// with the home's HVAC submeter.
pub fn score_home(
    home: &HomeData,
    algorithm: DisaggAlgorithm,
    result: &DisaggResult,
    cfg: &DisaggConfig,
) -> Result<Vec<DisaggRow>> {
    let mut rows = Vec::new();
    for t in &result.traces {
        let truth = match algorithm {
            DisaggAlgorithm::Fhmm => home.appliances.get(&t.name),
            DisaggAlgorithm::Hart if t.name == HVAC_TRACE => home.hvac(),
            DisaggAlgorithm::Hart => None,
        };
        let Some(truth) = truth else { continue };
        let pred = t.power.split_at_fraction(cfg.train_fraction)?.1;
        let truth = truth.split_at_fraction(cfg.train_fraction)?.1;
        rows.push(DisaggRow {
            home_id: home.entry.home_id.clone(),
            algorithm,
            appliance: t.name.clone(),
            metrics: nilm_metrics(&pred, &truth, cfg.on_threshold_w)?,
        });
    }
    Ok(rows)
}
