//! Dataset manifest: which files make up each home, plus static metadata.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{load_occupancy_csv, load_power_csv, CsvSchema, IngestReport};
use crate::series::{parse_timezone, OccupancySeries, PowerSeries};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Characteristics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_years: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_sqft: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub income_usd_per_year: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floors: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rooms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupants: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomeEntry {
    pub home_id: String,
    pub aggregate_path: PathBuf,
    #[serde(default)]
    pub appliance_paths: BTreeMap<String, PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occupancy_path: Option<PathBuf>,
    pub timezone: String,
    #[serde(default)]
    pub characteristics: Characteristics,
    /// Number of electrical circuits dedicated to HVAC, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hvac_circuits: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub season: Option<String>,
}

impl HomeEntry {
    pub fn tz(&self) -> Result<Tz> {
        parse_timezone(&self.timezone)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub homes: Vec<HomeEntry>,
    /// Directory that relative paths resolve against. Not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: DatasetManifest = serde_json::from_str(&text)?;
        manifest.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for home in &self.homes {
            if !seen.insert(home.home_id.as_str()) {
                return Err(Error::Config(format!("duplicate home_id {:?}", home.home_id)));
            }
            home.tz()?;
            let paths = std::iter::once(&home.aggregate_path)
                .chain(home.appliance_paths.values())
                .chain(home.occupancy_path.iter());
            for p in paths {
                let full = self.resolve(p);
                if !full.is_file() {
                    return Err(Error::Config(format!(
                        "home {:?}: file {} not found",
                        home.home_id,
                        full.display()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn home(&self, id: &str) -> Option<&HomeEntry> {
        self.homes.iter().find(|h| h.home_id == id)
    }
}

/// Everything loaded for one home.
#[derive(Clone, Debug)]
pub struct HomeData {
    pub entry: HomeEntry,
    pub aggregate: PowerSeries,
    pub appliances: BTreeMap<String, PowerSeries>,
    pub occupancy: Option<OccupancySeries>,
    pub ingest: IngestReport,
}

impl HomeData {
    pub fn load(manifest: &DatasetManifest, entry: &HomeEntry, window_s: u32) -> Result<Self> {
        let tz = entry.tz()?;
        let schema = CsvSchema::power(tz);
        let (aggregate, ingest) = load_power_csv(manifest.resolve(&entry.aggregate_path), &schema)?;
        let mut appliances = BTreeMap::new();
        for (name, p) in &entry.appliance_paths {
            let (s, _) = load_power_csv(manifest.resolve(p), &schema)?;
            appliances.insert(name.clone(), s);
        }
        let occupancy = entry
            .occupancy_path
            .as_ref()
            .map(|p| load_occupancy_csv(manifest.resolve(p), &CsvSchema::occupancy(tz), window_s))
            .transpose()?;
        Ok(Self {
            entry: entry.clone(),
            aggregate,
            appliances,
            occupancy,
            ingest,
        })
    }

    /// The submetered HVAC trace, if the manifest names one.
    pub fn hvac(&self) -> Option<&PowerSeries> {
        self.appliances
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case("hvac") || k.starts_with("hvac"))
            .map(|(_, v)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_ids_and_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "timestamp,power_w\n0,1\n").unwrap();
        let home = |id: &str, p: &str| HomeEntry {
            home_id: id.into(),
            aggregate_path: p.into(),
            appliance_paths: BTreeMap::new(),
            occupancy_path: None,
            timezone: "UTC".into(),
            characteristics: Characteristics::default(),
            hvac_circuits: None,
            season: None,
        };
        let mut m = DatasetManifest {
            homes: vec![home("h1", "a.csv"), home("h1", "a.csv")],
            base_dir: dir.path().to_path_buf(),
        };
        assert!(matches!(m.validate(), Err(Error::Config(_))));
        m.homes[1] = home("h2", "missing.csv");
        assert!(matches!(m.validate(), Err(Error::Config(_))));
        m.homes.pop();
        m.validate().unwrap();

        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        let back = DatasetManifest::load(&path).unwrap();
        assert_eq!(back.homes, m.homes);
    }
}
