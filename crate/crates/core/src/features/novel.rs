use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{cluster_magnitudes, median_sorted, Event, EventPair};
use crate::series::PowerSeries;

use super::{FeatureFlag, FeatureSource, FeatureVector};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NovelConfig {
    /// HVAC counts as running above this power.
    pub on_threshold_w: f64,
    pub cluster_gap_frac: f64,
    /// Pair clusters centred at or above this are counted as HVAC circuits
    /// when the metadata has no circuit count.
    pub hvac_min_w: f64,
}

impl Default for NovelConfig {
    fn default() -> Self {
        Self {
            on_threshold_w: 50.0,
            cluster_gap_frac: 0.1,
            hvac_min_w: 1000.0,
        }
    }
}

/// HVAC and appliance features.
///
/// `hvac_source` tags the HVAC-derived values (submetered or disaggregated).
/// Without a metadata circuit count, circuits are estimated as the number of
/// pair clusters at or above `hvac_min_w` and flagged as a proxy. The
/// highest-power appliance is the pair cluster with the largest center.
pub fn extract_novel(
    hvac: &PowerSeries,
    aggregate: &PowerSeries,
    events: &[Event],
    pairs: &[EventPair],
    hvac_circuits: Option<u32>,
    hvac_source: FeatureSource,
    cfg: &NovelConfig,
) -> Result<FeatureVector> {
    if hvac.start() != aggregate.start() || hvac.len() != aggregate.len() || hvac.period_s() != aggregate.period_s() {
        return Err(Error::Alignment("HVAC and aggregate streams must cover the same samples".into()));
    }
    let agg_energy: f64 = aggregate.values().iter().sum();
    if agg_energy <= 0.0 {
        return Err(Error::Undefined("HVAC energy fraction of a home that used no energy".into()));
    }
    let hvac_energy: f64 = hvac.values().iter().sum();
    let on = hvac.values().iter().filter(|&&v| v > cfg.on_threshold_w).count() as f64 / hvac.len() as f64;
    let raw_fraction = hvac_energy / agg_energy;
    let (fraction, fraction_flag) = if raw_fraction > 1.0 {
        (1.0, Some(FeatureFlag::Clamped))
    } else {
        (raw_fraction, None)
    };

    let mags: Vec<f64> = pairs.iter().map(|p| p.magnitude_w).collect();
    let clusters = cluster_magnitudes(&mags, cfg.cluster_gap_frac);
    let (circuits, circuits_source, circuits_flag) = match hvac_circuits {
        Some(c) => (c as f64, FeatureSource::Metadata, None),
        None => (
            clusters.iter().filter(|c| c.center >= cfg.hvac_min_w).count() as f64,
            FeatureSource::EventStream,
            Some(FeatureFlag::Proxy),
        ),
    };
    let top: Vec<f64> = clusters
        .last()
        .map(|c| c.members.iter().map(|&i| mags[i]).collect())
        .unwrap_or_default();
    let (top_mean, top_max, top_median) = if top.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        (
            top.iter().sum::<f64>() / top.len() as f64,
            *top.last().unwrap(),
            median_sorted(&top),
        )
    };

    let mut out = FeatureVector::new();
    out.push("hvac_max", hvac.max(), hvac_source, None)?;
    out.push("n_switches", events.len() as f64, FeatureSource::EventStream, None)?;
    out.push("hvac_circuits", circuits, circuits_source, circuits_flag)?;
    out.push("hvac_on_fraction", on, hvac_source, None)?;
    out.push("hvac_energy_fraction", fraction, hvac_source, fraction_flag)?;
    out.push("top_appliance_mean", top_mean, FeatureSource::EventStream, None)?;
    out.push("top_appliance_max", top_max, FeatureSource::EventStream, None)?;
    out.push("top_appliance_median", top_median, FeatureSource::EventStream, None)?;
    Ok(out)
}
