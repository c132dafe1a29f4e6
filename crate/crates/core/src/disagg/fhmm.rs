use crate::error::{Error, Result};
use crate::series::PowerSeries;

use super::{ApplianceHmm, ApplianceTrace, DisaggResult};

/// Largest joint state space decoded exactly.
pub const MAX_PRODUCT_STATES: usize = 4096;

/// Joint state space of a set of appliance models. Joint index
/// `Σ s_i · stride_i` with the first appliance most significant.
struct ProductSpace {
    sizes: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl ProductSpace {
    fn new(models: &[ApplianceHmm]) -> Result<Self> {
        let sizes: Vec<usize> = models.iter().map(ApplianceHmm::states).collect();
        let mut total = 1usize;
        for &k in &sizes {
            total = total.saturating_mul(k);
            if total > MAX_PRODUCT_STATES {
                let states = sizes.iter().fold(1usize, |a, &k| a.saturating_mul(k));
                return Err(Error::Capacity {
                    states,
                    cap: MAX_PRODUCT_STATES,
                });
            }
        }
        let mut strides = vec![1usize; sizes.len()];
        for i in (0..sizes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        Ok(Self { sizes, strides, total })
    }

    fn component(&self, joint: usize, appliance: usize) -> usize {
        joint / self.strides[appliance] % self.sizes[appliance]
    }
}

fn ln(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Most probable joint state sequence for `observed` under the factorial
/// model, as joint indices. Ties go to the lowest joint index.
///
/// Each step maximises over predecessors one appliance at a time (least
/// significant first), which costs `S · ΣK` instead of `S²`.
pub fn viterbi_path(observed: &[f64], models: &[ApplianceHmm]) -> Result<Vec<usize>> {
    if models.is_empty() {
        return Err(Error::Argument("at least one appliance model is required".into()));
    }
    for m in models {
        m.validate()?;
    }
    let space = ProductSpace::new(models)?;
    let s = space.total;
    let (mut mean, mut var, mut init) = (vec![0.0; s], vec![0.0; s], vec![0.0; s]);
    for j in 0..s {
        for (i, m) in models.iter().enumerate() {
            let c = space.component(j, i);
            mean[j] += m.state_means_w[c];
            var[j] += m.state_vars[c];
            init[j] += ln(m.initial[c]);
        }
    }
    let log_norm: Vec<f64> = var.iter().map(|v| -0.5 * (2.0 * std::f64::consts::PI * v).ln()).collect();
    let emit = |j: usize, y: f64| log_norm[j] - (y - mean[j]).powi(2) / (2.0 * var[j]);
    let log_trans: Vec<Vec<Vec<f64>>> = models
        .iter()
        .map(|m| m.transition.iter().map(|row| row.iter().map(|&p| ln(p)).collect()).collect())
        .collect();

    let t_len = observed.len();
    if t_len == 0 {
        return Ok(Vec::new());
    }
    let mut delta: Vec<f64> = (0..s).map(|j| init[j] + emit(j, observed[0])).collect();
    let mut back: Vec<Vec<u32>> = Vec::with_capacity(t_len - 1);
    let mut buf = vec![0.0; s];
    let mut arg = vec![0u32; s];
    let mut next_buf = vec![0.0; s];
    let mut next_arg = vec![0u32; s];

    for &y in &observed[1..] {
        buf.copy_from_slice(&delta);
        for (j, a) in arg.iter_mut().enumerate() {
            *a = j as u32;
        }
        // Replace old coordinates by new ones, least significant first, so
        // ties resolve to the lowest joint predecessor.
        for i in (0..models.len()).rev() {
            let k = space.sizes[i];
            let stride = space.strides[i];
            let lt = &log_trans[i];
            for j in 0..s {
                let new_c = space.component(j, i);
                let base = j - new_c * stride;
                let mut best = f64::NEG_INFINITY;
                let mut best_arg = arg[base];
                let mut found = false;
                for old_c in 0..k {
                    let src = base + old_c * stride;
                    let v = buf[src] + lt[old_c][new_c];
                    if !found || v > best {
                        best = v;
                        best_arg = arg[src];
                        found = true;
                    }
                }
                next_buf[j] = best;
                next_arg[j] = best_arg;
            }
            std::mem::swap(&mut buf, &mut next_buf);
            std::mem::swap(&mut arg, &mut next_arg);
        }
        for j in 0..s {
            delta[j] = buf[j] + emit(j, y);
        }
        back.push(arg.clone());
    }

    let mut last = 0;
    for j in 1..s {
        if delta[j] > delta[last] {
            last = j;
        }
    }
    let mut path = vec![0usize; t_len];
    path[t_len - 1] = last;
    for t in (1..t_len).rev() {
        path[t - 1] = back[t - 1][path[t]] as usize;
    }
    Ok(path)
}

/// Exact factorial-HMM disaggregation of `aggregate` into one trace per
/// model. Each trace holds the decoded state mean of its appliance; the
/// residual is what the models leave unexplained, clamped at 0.
pub fn fhmm_disaggregate(aggregate: &PowerSeries, models: &[ApplianceHmm]) -> Result<DisaggResult> {
    if let Some(m) = models.iter().find(|m| m.period_s != aggregate.period_s()) {
        return Err(Error::Alignment(format!(
            "model {:?} was trained at {} s but the aggregate is sampled every {} s",
            m.name,
            m.period_s,
            aggregate.period_s()
        )));
    }
    let path = viterbi_path(aggregate.values(), models)?;
    let space = ProductSpace::new(models)?;
    let mut residual: Vec<f64> = aggregate.values().to_vec();
    let mut traces = Vec::with_capacity(models.len());
    for (i, m) in models.iter().enumerate() {
        let vals: Vec<f64> = path.iter().map(|&j| m.state_means_w[space.component(j, i)]).collect();
        for (r, v) in residual.iter_mut().zip(&vals) {
            *r -= v;
        }
        traces.push(ApplianceTrace {
            name: m.name.clone(),
            power: aggregate.with_values(vals)?,
        });
    }
    residual.iter_mut().for_each(|r| *r = r.max(0.0));
    Ok(DisaggResult {
        residual: aggregate.with_values(residual)?,
        traces,
    })
}
