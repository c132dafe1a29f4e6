use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chi2Selection {
    /// Chosen column indices, best first.
    pub indices: Vec<usize>,
    /// Score of every column.
    pub scores: Vec<f64>,
}

/// Chi-squared statistic of every column against the class labels, treating
/// each column's per-class sums as observed counts. Columns summing to zero
/// score 0.
pub fn chi2_scores<L: Ord>(x: &[Vec<f64>], y: &[L]) -> Result<Vec<f64>> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::Argument(format!(
            "chi-squared scoring needs matching non-empty rows and labels ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].len();
    for (i, row) in x.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Argument(format!("row {i} has {} columns, expected {d}", row.len())));
        }
        if let Some(j) = row.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Precondition(format!(
                "feature {j} of row {i} is {}; chi-squared needs finite non-negative values",
                row[j]
            )));
        }
    }
    let mut classes: Vec<&L> = y.iter().collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Precondition("chi-squared scoring needs at least 2 classes".into()));
    }
    let class_of: Vec<usize> = y.iter().map(|l| classes.binary_search(&l).expect("present")).collect();
    let n = x.len() as f64;
    let mut class_n = vec![0.0; classes.len()];
    for &c in &class_of {
        class_n[c] += 1.0;
    }

    let mut scores = vec![0.0; d];
    let mut observed = vec![0.0; classes.len()];
    for (j, score) in scores.iter_mut().enumerate() {
        observed.iter_mut().for_each(|o| *o = 0.0);
        for (row, &c) in x.iter().zip(&class_of) {
            observed[c] += row[j];
        }
        let total: f64 = observed.iter().sum();
        if total == 0.0 {
            continue;
        }
        *score = observed
            .iter()
            .zip(&class_n)
            .map(|(o, nc)| {
                let e = total * nc / n;
                (o - e).powi(2) / e
            })
            .sum();
    }
    Ok(scores)
}

/// The `k` highest-scoring columns; equal scores prefer the lower index.
pub fn chi2_select<L: Ord>(x: &[Vec<f64>], y: &[L], k: usize) -> Result<Chi2Selection> {
    let scores = chi2_scores(x, y)?;
    if k == 0 || k > scores.len() {
        return Err(Error::Argument(format!("k={k} must be within 1..={}", scores.len())));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    Ok(Chi2Selection { indices: order, scores })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub r2: f64,
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<Correlation> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Argument(format!(
            "correlation needs two equal-length sequences of at least 2 values ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Undefined("correlation with a constant sequence".into()));
    }
    let r = (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0);
    Ok(Correlation { r, r2: r * r })
}
