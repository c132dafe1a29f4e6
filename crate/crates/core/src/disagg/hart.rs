use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::events::{cluster_magnitudes, detect_events, pair_events, Event, EventPair, EventPipelineConfig};
use crate::series::PowerSeries;

use super::{ApplianceTrace, DisaggResult};

pub const HVAC_TRACE: &str = "hvac";
pub const TOP_APPLIANCE_TRACE: &str = "highest_power_appliance";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HartConfig {
    pub events: EventPipelineConfig,
    /// Relative gap that separates magnitude clusters.
    pub cluster_gap_frac: f64,
    /// The HVAC cluster must be centred at or above this power.
    pub hvac_min_w: f64,
}

impl Default for HartConfig {
    fn default() -> Self {
        Self {
            events: EventPipelineConfig::default(),
            cluster_gap_frac: 0.1,
            hvac_min_w: 1000.0,
        }
    }
}

/// Event pairs grouped by magnitude and treated as one pseudo-appliance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCluster {
    pub center_w: f64,
    pub pairs: Vec<EventPair>,
}

impl PairCluster {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.magnitude_w).collect()
    }
}

#[derive(Clone, Debug)]
pub struct HartOutput {
    /// Holds the [`HVAC_TRACE`] and [`TOP_APPLIANCE_TRACE`] traces.
    pub result: DisaggResult,
    pub events: Vec<Event>,
    pub pairs: Vec<EventPair>,
    /// Ascending by center.
    pub clusters: Vec<PairCluster>,
    pub hvac_cluster: Option<usize>,
    pub top_cluster: Option<usize>,
}

impl HartOutput {
    /// True when no cluster reached `hvac_min_w`; the HVAC trace is then all
    /// zeros.
    pub fn hvac_missing(&self) -> bool {
        self.hvac_cluster.is_none()
    }

    pub fn hvac(&self) -> &PowerSeries {
        self.result.trace(HVAC_TRACE).expect("hart output always carries an hvac trace")
    }

    pub fn top_appliance(&self) -> Option<&PairCluster> {
        self.top_cluster.map(|i| &self.clusters[i])
    }
}

/// Sum of `magnitude × [on, off)` pulses, one per pair.
pub fn pulse_trace(template: &PowerSeries, pairs: &[EventPair]) -> Result<PowerSeries> {
    let mut v = vec![0.0; template.len()];
    for p in pairs {
        let a = template.ceil_index(p.on_time).min(v.len());
        let b = template.ceil_index(p.off_time).min(v.len());
        for x in &mut v[a..b] {
            *x += p.magnitude_w;
        }
    }
    template.with_values(v)
}

/// Unsupervised reconstruction from edge pairs. Pairs are clustered by
/// magnitude and each cluster rebuilt as rectangular pulses. The cluster
/// with the largest center at or above `hvac_min_w` is labelled HVAC; the
/// largest cluster overall is the highest-power appliance.
pub fn hart_disaggregate(aggregate: &PowerSeries, cfg: &HartConfig) -> Result<HartOutput> {
    let events = detect_events(aggregate, &cfg.events.detector)?;
    let pairs = pair_events(&events, &cfg.events.pairing);
    let mags: Vec<f64> = pairs.iter().map(|p| p.magnitude_w).collect();
    let clusters: Vec<PairCluster> = cluster_magnitudes(&mags, cfg.cluster_gap_frac)
        .into_iter()
        .map(|c| {
            let mut members: Vec<EventPair> = c.members.iter().map(|&i| pairs[i]).collect();
            members.sort_by_key(|p| (p.on_time, p.off_time));
            PairCluster {
                center_w: c.center,
                pairs: members,
            }
        })
        .collect();

    let top_cluster = clusters.len().checked_sub(1);
    let hvac_cluster = top_cluster.filter(|&i| clusters[i].center_w >= cfg.hvac_min_w);

    let trace_of = |idx: Option<usize>| match idx {
        Some(i) => pulse_trace(aggregate, &clusters[i].pairs),
        None => Ok(aggregate.zeros_like()),
    };
    let hvac = trace_of(hvac_cluster)?;
    let top = trace_of(top_cluster)?;

    let mut residual = aggregate.values().to_vec();
    let explained = if hvac_cluster.is_some() { &hvac } else { &top };
    for (r, e) in residual.iter_mut().zip(explained.values()) {
        *r = (*r - e).max(0.0);
    }

    Ok(HartOutput {
        result: DisaggResult {
            traces: vec![
                ApplianceTrace {
                    name: HVAC_TRACE.into(),
                    power: hvac,
                },
                ApplianceTrace {
                    name: TOP_APPLIANCE_TRACE.into(),
                    power: top,
                },
            ],
            residual: aggregate.with_values(residual)?,
        },
        events,
        pairs,
        clusters,
        hvac_cluster,
        top_cluster,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono_tz::Tz;

    #[test]
    fn square_wave_reconstructed_exactly() {
        let v: Vec<f64> = (0..300).map(|i| if i % 30 >= 10 && i % 30 < 25 { 3000.0 } else { 0.0 }).collect();
        let s = PowerSeries::new(0, Tz::UTC, 60, v.clone()).unwrap();
        let out = hart_disaggregate(&s, &HartConfig::default()).unwrap();
        assert!(!out.hvac_missing());
        assert_eq!(out.hvac().values(), &v[..]);
        assert!(out.result.residual.values().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn flat_series_has_no_hvac() {
        let s = PowerSeries::new(0, Tz::UTC, 60, vec![100.0; 50]).unwrap();
        let out = hart_disaggregate(&s, &HartConfig::default()).unwrap();
        assert!(out.clusters.is_empty());
        assert!(out.hvac_missing());
        assert_eq!(out.hvac().max(), 0.0);
    }
}
