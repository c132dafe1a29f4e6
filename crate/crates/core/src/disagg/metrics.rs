use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::PowerSeries;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NilmMetrics {
    /// `|Σpred − Σtruth| / Σtruth` in percent; `None` when the truth has no
    /// energy.
    pub error_energy_pct: Option<f64>,
    pub rmse_w: f64,
    pub fscore: f64,
}

/// Energy error, RMSE and F-score of the ON indicator (`power > on_threshold_w`).
pub fn nilm_metrics(pred: &PowerSeries, truth: &PowerSeries, on_threshold_w: f64) -> Result<NilmMetrics> {
    if pred.len() != truth.len() || pred.period_s() != truth.period_s() {
        return Err(Error::Alignment(format!(
            "prediction ({} samples @ {} s) and truth ({} samples @ {} s) differ in shape",
            pred.len(),
            pred.period_s(),
            truth.len(),
            truth.period_s()
        )));
    }
    Ok(nilm_metrics_raw(pred.values(), truth.values(), on_threshold_w))
}

pub(crate) fn nilm_metrics_raw(pred: &[f64], truth: &[f64], on_threshold_w: f64) -> NilmMetrics {
    let sum_p: f64 = pred.iter().sum();
    let sum_t: f64 = truth.iter().sum();
    let error_energy_pct = (sum_t > 0.0).then(|| (sum_p - sum_t).abs() * 100.0 / sum_t);
    let n = pred.len().max(1) as f64;
    let rmse_w = (pred.iter().zip(truth).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n).sqrt();

    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p > on_threshold_w, t > on_threshold_w) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let precision = if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 };
    let recall = if tp + fn_ > 0 { tp as f64 / (tp + fn_) as f64 } else { 0.0 };
    let fscore = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    NilmMetrics {
        error_energy_pct,
        rmse_w,
        fscore,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_example() {
        let m = nilm_metrics_raw(&[50.0, 50.0], &[100.0, 0.0], 10.0);
        assert_eq!(m.error_energy_pct, Some(0.0));
        assert_eq!(m.rmse_w, 50.0);
        assert!((m.fscore - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity() {
        let v = [0.0, 120.0, 300.0, 10.0];
        let m = nilm_metrics_raw(&v, &v, 50.0);
        assert_eq!((m.error_energy_pct, m.rmse_w, m.fscore), (Some(0.0), 0.0, 1.0));
    }

    #[test]
    fn zero_truth_energy_is_undefined() {
        let m = nilm_metrics_raw(&[1.0, 0.0], &[0.0, 0.0], 50.0);
        assert_eq!(m.error_energy_pct, None);
        assert_eq!(m.rmse_w, (0.5f64).sqrt());
    }
}
