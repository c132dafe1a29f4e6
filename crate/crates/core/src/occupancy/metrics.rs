use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{ClockWindow, OccupancySeries};

use super::OccupancyConfig;

/// Confusion counts with occupied as the positive class, plus the HVAC
/// control proxies: run time (`tp + fp`) and miss time (`fn`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMetrics {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub accuracy_pct: f64,
    pub energy_proxy: usize,
    pub miss_time: usize,
}

impl OccupancyMetrics {
    pub fn from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        let total = tp + tn + fp + fn_;
        let accuracy_pct = if total == 0 {
            0.0
        } else {
            100.0 * (tp + tn) as f64 / total as f64
        };
        Self {
            tp,
            tn,
            fp,
            fn_,
            accuracy_pct,
            energy_proxy: tp + fp,
            miss_time: fn_,
        }
    }

    pub fn evaluated(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Scores windows whose local start time lies in the evaluation hours.
/// Both series must sit on the same window grid; only their overlap is
/// scored. An overlap with no window in the evaluation hours is an
/// empty-window error.
pub fn evaluate_occupancy(
    pred: &OccupancySeries,
    truth: &OccupancySeries,
    cfg: &OccupancyConfig,
    tz: Tz,
) -> Result<OccupancyMetrics> {
    if pred.window_s != truth.window_s {
        return Err(Error::Alignment(format!(
            "window widths differ: {} s vs {} s",
            pred.window_s, truth.window_s
        )));
    }
    let w = pred.window_s as i64;
    if (pred.window_start - truth.window_start).rem_euclid(w) != 0 {
        return Err(Error::Alignment(format!(
            "window grids are offset: starts {} and {}",
            pred.window_start, truth.window_start
        )));
    }
    let from = pred.window_start.max(truth.window_start);
    let to = pred.end().min(truth.end());
    if from >= to {
        return Err(Error::Alignment("prediction and truth do not overlap".into()));
    }
    let eval = ClockWindow::new(cfg.eval_start_hour, cfg.eval_end_hour)?;
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    let mut t = from;
    while t < to {
        if eval.contains(tz, t) {
            let p = pred.flags[((t - pred.window_start) / w) as usize];
            let g = truth.flags[((t - truth.window_start) / w) as usize];
            match (p, g) {
                (true, true) => tp += 1,
                (false, false) => tn += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
            }
        }
        t += w;
    }
    if tp + tn + fp + fn_ == 0 {
        return Err(Error::EmptyWindow(format!(
            "no windows start between {}:00 and {}:00 local",
            cfg.eval_start_hour, cfg.eval_end_hour
        )));
    }
    Ok(OccupancyMetrics::from_counts(tp, tn, fp, fn_))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(flags: &[u8]) -> OccupancySeries {
        // 06:00 UTC start so every window is inside evaluation hours.
        OccupancySeries::new(6 * 3600, 900, flags.iter().map(|f| *f == 1).collect()).unwrap()
    }

    #[test]
    fn identity() {
        let s = series(&[1, 0, 1, 1]);
        let m = evaluate_occupancy(&s, &s, &OccupancyConfig::default(), Tz::UTC).unwrap();
        assert_eq!((m.fp, m.fn_, m.accuracy_pct), (0, 0, 100.0));
    }

    #[test]
    fn hand_count() {
        let truth = series(&[1, 1, 0, 0]);
        let pred = series(&[1, 0, 1, 0]);
        let m = evaluate_occupancy(&pred, &truth, &OccupancyConfig::default(), Tz::UTC).unwrap();
        assert_eq!((m.tp, m.fn_, m.fp, m.tn), (1, 1, 1, 1));
        assert_eq!(m.accuracy_pct, 50.0);
        assert_eq!((m.energy_proxy, m.miss_time), (2, 1));
    }

    #[test]
    fn only_evaluation_hours_count() {
        let day = OccupancySeries::new(0, 900, vec![true; 96]).unwrap();
        let m = evaluate_occupancy(&day, &day, &OccupancyConfig::default(), Tz::UTC).unwrap();
        assert_eq!(m.evaluated(), 64);
    }

    #[test]
    fn misaligned_grids() {
        let a = series(&[1, 0]);
        let mut b = series(&[1, 0]);
        b.window_start += 60;
        let cfg = OccupancyConfig::default();
        assert!(matches!(evaluate_occupancy(&a, &b, &cfg, Tz::UTC), Err(Error::Alignment(_))));
        let c = OccupancySeries::new(6 * 3600, 1800, vec![true]).unwrap();
        assert!(matches!(evaluate_occupancy(&a, &c, &cfg, Tz::UTC), Err(Error::Alignment(_))));
    }
}
