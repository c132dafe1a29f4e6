//! Per-home feature vectors: the consumption/ratio/temporal/statistical
//! catalogue over any power stream, HVAC and appliance features, chi-squared
//! selection and correlation.

mod beckel;
mod matrix;
mod novel;
mod select;
mod sets;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use beckel::{extract_beckel, BECKEL_FEATURES};
pub use matrix::FeatureMatrix;
pub use novel::{extract_novel, NovelConfig};
pub use select::{chi2_scores, chi2_select, pearson, Chi2Selection, Correlation};
pub use sets::{extract_home_features, FeatureSet};

/// Where a feature value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSource {
    Aggregate,
    HvacSubmeter,
    HvacDisagg,
    EventStream,
    Metadata,
}

/// Why a value is not the plain statistic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFlag {
    /// Ratio with a zero denominator, reported as 0.
    ZeroDenominator,
    /// Raised to 0 or capped at 1 to stay within `[0, 1]`.
    Clamped,
    /// Estimated from a stand-in quantity.
    Proxy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub id: String,
    pub value: f64,
    pub source: FeatureSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<FeatureFlag>,
}

/// Ordered named features, every value finite and non-negative.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    features: Vec<Feature>,
}

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: impl Into<String>, value: f64, source: FeatureSource, flag: Option<FeatureFlag>) -> Result<()> {
        let id = id.into();
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Validation(format!("feature {id} = {value} must be finite and >= 0")));
        }
        if self.get(&id).is_some() {
            return Err(Error::Validation(format!("duplicate feature {id}")));
        }
        self.features.push(Feature {
            id,
            value,
            source,
            flag,
        });
        Ok(())
    }

    pub fn extend(&mut self, other: FeatureVector) -> Result<()> {
        for f in other.features {
            self.push(f.id, f.value, f.source, f.flag)?;
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.feature(id).map(|f| f.value)
    }

    pub fn feature(&self, id: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.id == id)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.id.as_str()).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.features.iter().map(|f| f.value).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Feature> {
        self.features.iter()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}
