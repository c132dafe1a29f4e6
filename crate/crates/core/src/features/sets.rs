use serde::{Deserialize, Serialize};

use crate::disagg::{disaggregate_home, hart_disaggregate, DisaggAlgorithm, DisaggConfig};
use crate::error::{Error, Result};
use crate::events::{detect_events, pair_events};
use crate::manifest::HomeData;
use crate::series::PowerSeries;

use super::{extract_beckel, extract_novel, FeatureSource, FeatureVector, NovelConfig};

/// Which streams a home's feature vector is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    /// Catalogue features of the aggregate only.
    #[serde(rename = "aggregate-only")]
    AggregateOnly,
    /// Catalogue features of the HVAC submeter plus the HVAC and appliance
    /// features.
    #[serde(rename = "hvac-only")]
    HvacOnly,
    #[serde(rename = "both")]
    Both,
    /// As `Both`, with the HVAC stream reconstructed from edge pairs.
    #[serde(rename = "disagg-hart")]
    DisaggHart,
    /// As `Both`, with the HVAC stream decoded by the factorial HMM.
    #[serde(rename = "disagg-fhmm")]
    DisaggFhmm,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 5] = [
        FeatureSet::AggregateOnly,
        FeatureSet::HvacOnly,
        FeatureSet::Both,
        FeatureSet::DisaggHart,
        FeatureSet::DisaggFhmm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::AggregateOnly => "aggregate-only",
            FeatureSet::HvacOnly => "hvac-only",
            FeatureSet::Both => "both",
            FeatureSet::DisaggHart => "disagg-hart",
            FeatureSet::DisaggFhmm => "disagg-fhmm",
        }
    }
}

impl std::str::FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureSet::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature source {s:?}")))
    }
}

fn hvac_stream(home: &HomeData, set: FeatureSet, disagg: &DisaggConfig) -> Result<Option<(PowerSeries, FeatureSource)>> {
    let submeter = || {
        home.hvac().cloned().ok_or_else(|| {
            Error::Config(format!("home {:?} has no HVAC submeter", home.entry.home_id))
        })
    };
    Ok(match set {
        FeatureSet::AggregateOnly => None,
        FeatureSet::HvacOnly | FeatureSet::Both => Some((submeter()?, FeatureSource::HvacSubmeter)),
        FeatureSet::DisaggHart => {
            let out = hart_disaggregate(&home.aggregate, &disagg.hart)?;
            Some((out.hvac().clone(), FeatureSource::HvacDisagg))
        }
        FeatureSet::DisaggFhmm => {
            let result = disaggregate_home(home, DisaggAlgorithm::Fhmm, disagg)?;
            let hvac = result.hvac().cloned().ok_or_else(|| {
                Error::Config(format!("home {:?} has no HVAC model to decode", home.entry.home_id))
            })?;
            Some((hvac, FeatureSource::HvacDisagg))
        }
    })
}

/// Feature vector of one home for `set`. Catalogue features are prefixed
/// `agg.` or `hvac.`; the HVAC circuit count comes from the manifest when
/// recorded.
pub fn extract_home_features(home: &HomeData, set: FeatureSet, novel: &NovelConfig, disagg: &DisaggConfig) -> Result<FeatureVector> {
    let mut out = FeatureVector::new();
    if set != FeatureSet::HvacOnly {
        out.extend(extract_beckel(&home.aggregate, "agg", FeatureSource::Aggregate)?)?;
    }
    if let Some((hvac, source)) = hvac_stream(home, set, disagg)? {
        out.extend(extract_beckel(&hvac, "hvac", source)?)?;
        let events = detect_events(&home.aggregate, &disagg.hart.events.detector)?;
        let pairs = pair_events(&events, &disagg.hart.events.pairing);
        out.extend(extract_novel(
            &hvac,
            &home.aggregate,
            &events,
            &pairs,
            home.entry.hvac_circuits,
            source,
            novel,
        )?)?;
    }
    Ok(out)
}
