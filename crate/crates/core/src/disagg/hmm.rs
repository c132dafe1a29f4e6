use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::PowerSeries;

/// Centroids below this are treated as the appliance being off.
pub const OFF_SNAP_W: f64 = 15.0;
const VAR_FLOOR_W2: f64 = 1.0;
const MAX_LLOYD_ITERS: usize = 100;

/// Per-appliance Markov chain with Gaussian emissions. State 0 is OFF.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApplianceHmm {
    pub name: String,
    pub period_s: u32,
    pub state_means_w: Vec<f64>,
    pub state_vars: Vec<f64>,
    /// Row-stochastic, `transition[from][to]`.
    pub transition: Vec<Vec<f64>>,
    pub initial: Vec<f64>,
}

impl ApplianceHmm {
    pub fn states(&self) -> usize {
        self.state_means_w.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.states();
        let bad = |m: String| Err(Error::Validation(format!("model {:?}: {m}", self.name)));
        if k < 2 {
            return bad(format!("needs at least 2 states, has {k}"));
        }
        if self.state_vars.len() != k || self.initial.len() != k || self.transition.len() != k {
            return bad("parameter shapes disagree with the state count".into());
        }
        if self.state_means_w.windows(2).any(|w| w[0] > w[1]) || self.state_means_w[0] < 0.0 {
            return bad("state means must be non-negative and ascending".into());
        }
        if self.state_vars.iter().any(|v| !(*v > 0.0)) {
            return bad("emission variances must be positive".into());
        }
        let simplex = |p: &[f64]| p.iter().all(|x| *x >= 0.0) && (p.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        if !simplex(&self.initial) {
            return bad("initial distribution does not sum to 1".into());
        }
        if self.transition.iter().any(|row| row.len() != k || !simplex(row)) {
            return bad("transition rows must be probability vectors".into());
        }
        Ok(())
    }
}

fn nearest(levels: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (j, &c) in levels.iter().enumerate().skip(1) {
        if (v - c).abs() < (v - levels[best]).abs() {
            best = j;
        }
    }
    best
}

/// k-means++ seeding followed by Lloyd iterations. Returns centroids and
/// inertia.
fn kmeans_1d(values: &[f64], k: usize, rng: &mut ChaCha8Rng) -> (Vec<f64>, f64) {
    let n = values.len();
    let mut centers = vec![values[rng.random_range(0..n)]];
    let mut d2: Vec<f64> = values.iter().map(|v| (v - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if r < d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = values[pick];
        centers.push(c);
        for (d, v) in d2.iter_mut().zip(values) {
            *d = d.min((v - c).powi(2));
        }
    }

    let mut assign = vec![usize::MAX; n];
    for _ in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for (a, &v) in assign.iter_mut().zip(values) {
            let j = nearest(&centers, v);
            if *a != j {
                *a = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sum = vec![0.0; k];
        let mut cnt = vec![0usize; k];
        for (&a, &v) in assign.iter().zip(values) {
            sum[a] += v;
            cnt[a] += 1;
        }
        for j in 0..k {
            if cnt[j] > 0 {
                centers[j] = sum[j] / cnt[j] as f64;
            }
        }
    }
    let inertia = assign.iter().zip(values).map(|(&a, &v)| (v - centers[a]).powi(2)).sum();
    (centers, inertia)
}

/// Fits a `k`-state model to a submetered appliance trace.
///
/// Levels come from 1-D k-means (k restarts from `seed`, best inertia kept);
/// the lowest level is snapped to 0 W when under [`OFF_SNAP_W`]. Samples are
/// labelled with their nearest level, giving add-one smoothed transition
/// counts, empirical initial frequencies and per-state variances floored at
/// 1 W².
pub fn train_hmm(name: &str, appliance: &PowerSeries, k: usize, seed: u64) -> Result<ApplianceHmm> {
    if k < 2 {
        return Err(Error::Argument(format!("an appliance model needs k >= 2 states, got {k}")));
    }
    let values = appliance.values();
    if values.len() < 10 * k {
        return Err(Error::Coverage(format!(
            "training {name:?} with {k} states needs at least {} samples, got {}",
            10 * k,
            values.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..k {
        let (c, inertia) = kmeans_1d(values, k, &mut rng);
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((c, inertia));
        }
    }
    let mut levels = best.expect("k >= 2 restarts").0;
    levels.sort_by(f64::total_cmp);
    if levels[0] < OFF_SNAP_W {
        levels[0] = 0.0;
    }
    let degenerate = || {
        Error::DegenerateModel(format!(
            "{name:?} does not show {k} distinct power levels; lower the state count"
        ))
    };
    if levels.windows(2).any(|w| w[1] - w[0] <= 1e-9 * w[1].abs().max(1.0)) {
        return Err(degenerate());
    }

    let labels: Vec<usize> = values.iter().map(|&v| nearest(&levels, v)).collect();
    let mut count = vec![0usize; k];
    let mut sq = vec![0.0; k];
    for (&s, &v) in labels.iter().zip(values) {
        count[s] += 1;
        sq[s] += (v - levels[s]).powi(2);
    }
    if count.contains(&0) {
        return Err(degenerate());
    }
    let mut trans = vec![vec![1.0; k]; k];
    for w in labels.windows(2) {
        trans[w[0]][w[1]] += 1.0;
    }
    for row in &mut trans {
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
    }
    let n = values.len() as f64;
    let model = ApplianceHmm {
        name: name.to_string(),
        period_s: appliance.period_s(),
        state_vars: sq
            .iter()
            .zip(&count)
            .map(|(s, &c)| (s / c as f64).max(VAR_FLOOR_W2))
            .collect(),
        initial: count.iter().map(|&c| c as f64 / n).collect(),
        state_means_w: levels,
        transition: trans,
    };
    model.validate()?;
    Ok(model)
}
