use crate::error::{Error, Result};

use super::vote;

/// Per-feature z-scoring fitted on training rows. Features with zero
/// spread carry no distance information and are dropped.
#[derive(Clone, Debug)]
pub struct Standardizer {
    kept: Vec<usize>,
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let (mut kept, mut mean, mut std) = (Vec::new(), Vec::new(), Vec::new());
        for j in 0..d {
            let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
            let s = var.sqrt();
            if s > 0.0 && s.is_finite() {
                kept.push(j);
                mean.push(m);
                std.push(s);
            }
        }
        Self { kept, mean, std }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        self.kept
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&j, (m, s))| (row[j] - m) / s)
            .collect()
    }
}

pub(super) fn check_classifier_shapes(train_x: &[Vec<f64>], train_y_len: usize, test_x: &[Vec<f64>]) -> Result<()> {
    if train_x.is_empty() {
        return Err(Error::Argument("empty training set".into()));
    }
    if train_x.len() != train_y_len {
        return Err(Error::Argument(format!(
            "{} training rows but {train_y_len} labels",
            train_x.len()
        )));
    }
    let d = train_x[0].len();
    if let Some(r) = train_x.iter().chain(test_x).find(|r| r.len() != d) {
        return Err(Error::Argument(format!(
            "feature dimension mismatch: expected {d}, found {}",
            r.len()
        )));
    }
    Ok(())
}

/// k-nearest-neighbour majority vote on z-scored Euclidean distance.
///
/// Ties in distance go to the lower training index; ties in the vote go
/// to the class more frequent in training, then to the smaller label.
pub fn knn_classify<L: Clone + Ord>(
    train_x: &[Vec<f64>],
    train_y: &[L],
    test_x: &[Vec<f64>],
    k: usize,
) -> Result<Vec<L>> {
    check_classifier_shapes(train_x, train_y.len(), test_x)?;
    if k == 0 || k > train_x.len() {
        return Err(Error::Argument(format!(
            "k={k} must lie in 1..={}",
            train_x.len()
        )));
    }
    let scaler = Standardizer::fit(train_x);
    let train: Vec<Vec<f64>> = train_x.iter().map(|r| scaler.transform(r)).collect();
    let priority = vote::TiePriority::new(train_y);

    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(train.len());
    let mut out = Vec::with_capacity(test_x.len());
    for row in test_x {
        let q = scaler.transform(row);
        scratch.clear();
        scratch.extend(train.iter().enumerate().map(|(i, t)| {
            let d2: f64 = t.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, i)
        }));
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < scratch.len() {
            scratch.select_nth_unstable_by(k - 1, cmp);
        }
        let neighbours = scratch[..k].iter().map(|&(_, i)| train_y[i].clone());
        out.push(priority.winner(neighbours));
    }
    Ok(out)
}
