use crate::error::{Error, Result};
use crate::series::{is_weekend, ClockWindow, PowerSeries, SECONDS_PER_DAY};

use super::{FeatureFlag, FeatureSource, FeatureVector};

/// Feature names produced by [`extract_beckel`], without the stream prefix.
pub const BECKEL_FEATURES: [&str; 22] = [
    "mean_total",
    "mean_weekday",
    "mean_weekend",
    "mean_day",
    "mean_evening",
    "mean_morning",
    "mean_night",
    "mean_noon",
    "max",
    "min",
    "mean_over_max",
    "min_over_mean",
    "morning_over_noon",
    "evening_over_noon",
    "noon_over_total",
    "night_over_day",
    "weekday_over_weekend",
    "frac_above_mean",
    "frac_above_0_5kw",
    "frac_above_1kw",
    "variance",
    "autocorr_1d",
];

fn ratio(num: f64, den: f64) -> (f64, Option<FeatureFlag>) {
    if den == 0.0 {
        (0.0, Some(FeatureFlag::ZeroDenominator))
    } else {
        (num / den, None)
    }
}

/// Pearson correlation between `x[..n-lag]` and `x[lag..]`; `None` when
/// either side is constant.
fn lagged_correlation(x: &[f64], lag: usize) -> Option<f64> {
    if lag == 0 || x.len() <= lag + 1 {
        return None;
    }
    let (a, b) = (&x[..x.len() - lag], &x[lag..]);
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (p, q) in a.iter().zip(b) {
        sab += (p - ma) * (q - mb);
        saa += (p - ma).powi(2);
        sbb += (q - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| sab / (saa * sbb).sqrt())
}

/// The 22 consumption, ratio, temporal and statistical features of one
/// stream, named `{prefix}.{feature}`.
///
/// Clock windows use local time: day 06–22, evening 18–22, morning 06–10,
/// night 01–05, noon 10–14. Temporal proportions use strict `>`. Variance is
/// the population variance; autocorrelation is taken at a lag of one day and
/// floored at 0. Ratios with a zero denominator, and a constant series'
/// autocorrelation, are reported as 0 and flagged.
pub fn extract_beckel(s: &PowerSeries, prefix: &str, source: FeatureSource) -> Result<FeatureVector> {
    let span = s.len() as i64 * s.period_s() as i64;
    if span < 7 * SECONDS_PER_DAY {
        return Err(Error::Coverage(format!(
            "daily-rhythm features need at least one week of data, got {:.2} days",
            span as f64 / SECONDS_PER_DAY as f64
        )));
    }
    let values = s.values();
    let sod = s.seconds_of_day();
    let tz = s.timezone();
    let weekend: Vec<bool> = (0..s.len()).map(|i| is_weekend(tz, s.time_at(i))).collect();

    let mean_where = |keep: &dyn Fn(usize) -> bool| -> Result<f64> {
        let (sum, n) = (0..values.len())
            .filter(|&i| keep(i))
            .fold((0.0, 0usize), |(a, n), i| (a + values[i], n + 1));
        if n == 0 {
            return Err(Error::EmptyWindow(format!("no samples for {prefix} window feature")));
        }
        Ok(sum / n as f64)
    };
    let clock = |a: u32, b: u32| -> Result<f64> {
        let w = ClockWindow::new(a, b)?;
        mean_where(&|i| w.contains_second(sod[i]))
    };

    let total = s.mean();
    let weekday_mean = mean_where(&|i| !weekend[i])?;
    let weekend_mean = mean_where(&|i| weekend[i])?;
    let day = clock(6, 22)?;
    let evening = clock(18, 22)?;
    let morning = clock(6, 10)?;
    let night = clock(1, 5)?;
    let noon = clock(10, 14)?;
    let max = s.max();
    let min = s.min();

    let n = values.len() as f64;
    let frac = |thr: f64| values.iter().filter(|&&v| v > thr).count() as f64 / n;
    let variance = values.iter().map(|v| (v - total).powi(2)).sum::<f64>() / n;
    let lag = (SECONDS_PER_DAY / s.period_s() as i64) as usize;
    let (autocorr, autocorr_flag) = match lagged_correlation(values, lag) {
        Some(r) if r < 0.0 => (0.0, Some(FeatureFlag::Clamped)),
        Some(r) => (r.min(1.0), None),
        None => (0.0, Some(FeatureFlag::ZeroDenominator)),
    };

    let plain = |v: f64| (v, None);
    let entries: [(f64, Option<FeatureFlag>); 22] = [
        plain(total),
        plain(weekday_mean),
        plain(weekend_mean),
        plain(day),
        plain(evening),
        plain(morning),
        plain(night),
        plain(noon),
        plain(max),
        plain(min),
        ratio(total, max),
        ratio(min, total),
        ratio(morning, noon),
        ratio(evening, noon),
        ratio(noon, total),
        ratio(night, day),
        ratio(weekday_mean, weekend_mean),
        plain(frac(total)),
        plain(frac(500.0)),
        plain(frac(1000.0)),
        plain(variance),
        (autocorr, autocorr_flag),
    ];
    let mut out = FeatureVector::new();
    for (name, (value, flag)) in BECKEL_FEATURES.iter().zip(entries) {
        out.push(format!("{prefix}.{name}"), value, source, flag)?;
    }
    Ok(out)
}
