use std::path::Path;

use crate::error::{Error, Result};

use super::FeatureVector;

/// Homes × features table with a `home_id` column in CSV form.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub home_ids: Vec<String>,
    pub feature_ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    /// All vectors must carry the same feature ids in the same order.
    pub fn from_vectors(home_ids: Vec<String>, vectors: &[FeatureVector]) -> Result<Self> {
        if home_ids.len() != vectors.len() {
            return Err(Error::Argument("one feature vector per home is required".into()));
        }
        let feature_ids: Vec<String> = vectors
            .first()
            .map(|v| v.ids().into_iter().map(String::from).collect())
            .unwrap_or_default();
        for (h, v) in home_ids.iter().zip(vectors) {
            if v.ids() != feature_ids {
                return Err(Error::Validation(format!("home {h} has a different feature layout")));
            }
        }
        Ok(Self {
            home_ids,
            feature_ids,
            rows: vectors.iter().map(FeatureVector::values).collect(),
        })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn column_by_id(&self, id: &str) -> Option<Vec<f64>> {
        self.feature_ids.iter().position(|f| f == id).map(|j| self.column(j))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::Validation(format!("{}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let mut header = vec!["home_id".to_string()];
        header.extend(self.feature_ids.iter().cloned());
        w.write_record(&header).map_err(io)?;
        for (h, row) in self.home_ids.iter().zip(&self.rows) {
            let mut rec = vec![h.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let parse_err = |line: u64, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut r = csv::Reader::from_path(path).map_err(|e| parse_err(0, e.to_string()))?;
        let header = r.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
        if header.get(0) != Some("home_id") {
            return Err(parse_err(1, "first column must be home_id".into()));
        }
        let feature_ids: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let (mut home_ids, mut rows) = (Vec::new(), Vec::new());
        for (i, rec) in r.records().enumerate() {
            let line = i as u64 + 2;
            let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
            home_ids.push(rec[0].to_string());
            let row = rec
                .iter()
                .skip(1)
                .map(|v| v.trim().parse::<f64>().map_err(|e| parse_err(line, format!("{v:?}: {e}"))))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Self {
            home_ids,
            feature_ids,
            rows,
        })
    }
}
