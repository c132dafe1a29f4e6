use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::classify::{knn_classify, rf_classify, ForestConfig};
use crate::error::{Error, Result};
use crate::series::{ClockWindow, OccupancySeries, PowerSeries, Timestamp, SECONDS_PER_DAY};

use super::OccupancyConfig;

/// Mean, population standard deviation and range of one window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowFeatures {
    pub start: Timestamp,
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
    pub range: f64,
}

impl WindowFeatures {
    pub fn row(&self) -> Vec<f64> {
        vec![self.mean, self.std, self.range]
    }
}

pub(crate) fn window_stats(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    (mean, var.sqrt(), hi - lo)
}

/// Per-window features on the grid of multiples of `window_s` that covers
/// the series. Windows without samples are skipped.
pub fn kleiminger_features(s: &PowerSeries, window_s: u32) -> Result<Vec<WindowFeatures>> {
    if window_s == 0 || SECONDS_PER_DAY % window_s as i64 != 0 {
        return Err(Error::Argument(format!("window_s={window_s} must divide 86400")));
    }
    let grid = OccupancySeries::empty_grid(s.start(), s.end(), window_s)?;
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let a = grid.window_time(i);
        let (lo, hi) = (s.ceil_index(a), s.ceil_index(a + window_s as i64));
        if lo >= hi {
            continue;
        }
        let (mean, std, range) = window_stats(&s.values()[lo..hi]);
        out.push(WindowFeatures {
            start: a,
            samples: hi - lo,
            mean,
            std,
            range,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SupervisedModel {
    Knn { k: usize },
    RandomForest(ForestConfig),
}

fn eval_rows(s: &PowerSeries, cfg: &OccupancyConfig) -> Result<Vec<WindowFeatures>> {
    let eval = ClockWindow::new(cfg.eval_start_hour, cfg.eval_end_hour)?;
    let tz: Tz = s.timezone();
    Ok(kleiminger_features(s, cfg.window_s)?
        .into_iter()
        .filter(|w| eval.contains(tz, w.start))
        .collect())
}

/// Trains on labelled homes (or halves) and predicts each test window.
/// Training uses windows inside the evaluation hours only.
pub fn predict_supervised(
    train: &[(&PowerSeries, &OccupancySeries)],
    test: &PowerSeries,
    cfg: &OccupancyConfig,
    model: &SupervisedModel,
) -> Result<OccupancySeries> {
    cfg.validate()?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (series, truth) in train {
        if truth.window_s != cfg.window_s {
            return Err(Error::Alignment(format!(
                "training truth uses {} s windows, expected {}",
                truth.window_s, cfg.window_s
            )));
        }
        for w in eval_rows(series, cfg)? {
            let offset = w.start - truth.window_start;
            if offset < 0 || offset % truth.window_s as i64 != 0 {
                continue;
            }
            if let Some(&label) = truth.flags.get((offset / truth.window_s as i64) as usize) {
                x.push(w.row());
                y.push(label);
            }
        }
    }
    if x.is_empty() {
        return Err(Error::Config("no labelled training windows".into()));
    }
    let rows = kleiminger_features(test, cfg.window_s)?;
    let test_x: Vec<Vec<f64>> = rows.iter().map(WindowFeatures::row).collect();
    let pred = match model {
        SupervisedModel::Knn { k } => knn_classify(&x, &y, &test_x, (*k).min(x.len()))?,
        SupervisedModel::RandomForest(forest) => rf_classify(&x, &y, &test_x, forest)?,
    };
    let mut out = OccupancySeries::empty_grid(test.start(), test.end(), cfg.window_s)?;
    for (w, p) in rows.iter().zip(pred) {
        let idx = ((w.start - out.window_start) / cfg.window_s as i64) as usize;
        out.flags[idx] = p;
    }
    Ok(out)
}
