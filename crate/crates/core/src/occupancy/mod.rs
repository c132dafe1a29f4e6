//! Occupancy prediction from electricity data and its evaluation.
//!
//! Three families of predictors are provided: the event-pair pipeline
//! ([`predict_ours`]), the night-threshold method and its median variant
//! ([`predict_chen`]), and a supervised window classifier over mean, standard
//! deviation and range ([`predict_supervised`]).

mod chen;
mod experiment;
mod kleiminger;
mod metrics;
mod ours;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::SECONDS_PER_DAY;

pub use chen::{predict_chen, ChenPrediction, ChenStat};
pub use experiment::{
    occupancy_experiment, run_occupancy, Algorithm, AlgorithmSummary, ExperimentConfig,
    OccupancyResults, OccupancyRow, Protocol,
};
pub use kleiminger::{kleiminger_features, predict_supervised, SupervisedModel, WindowFeatures};
pub use metrics::{evaluate_occupancy, OccupancyMetrics};
pub use ours::{occupancy_from_pairs, predict_ours, OursTrace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OccupancyConfig {
    pub eval_start_hour: u32,
    pub eval_end_hour: u32,
    pub window_s: u32,
    /// Occupied intervals closer than this are bridged.
    pub pair_gap_fill_s: i64,
    /// Mark midnight up to the first foreground event as occupied. Turning
    /// this off gives the "optimised" variant.
    pub mark_start_of_day: bool,
    /// Mark the last foreground event up to midnight as occupied.
    pub mark_end_of_day: bool,
}

impl Default for OccupancyConfig {
    fn default() -> Self {
        Self {
            eval_start_hour: 6,
            eval_end_hour: 22,
            window_s: 900,
            pair_gap_fill_s: 3600,
            mark_start_of_day: true,
            mark_end_of_day: true,
        }
    }
}

impl OccupancyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eval_start_hour >= self.eval_end_hour || self.eval_end_hour > 24 {
            return Err(Error::Config(format!(
                "evaluation hours [{}, {}) are not a valid clock range",
                self.eval_start_hour, self.eval_end_hour
            )));
        }
        if self.window_s == 0 || SECONDS_PER_DAY % self.window_s as i64 != 0 {
            return Err(Error::Config(format!(
                "window_s={} must divide 86400",
                self.window_s
            )));
        }
        Ok(())
    }
}
