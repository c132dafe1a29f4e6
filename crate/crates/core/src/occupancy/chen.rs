use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::series::{local_days, ClockWindow, OccupancySeries, PowerSeries};

use super::kleiminger::window_stats;
use super::OccupancyConfig;

/// How night sub-window features are reduced to a threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChenStat {
    Max,
    Median,
}

#[derive(Clone, Debug)]
pub struct ChenPrediction {
    pub occupancy: OccupancySeries,
    /// Days left unpredicted (all unoccupied) for lack of a night window.
    pub skipped_days: Vec<NaiveDate>,
}

fn reduce(values: &mut [f64], stat: ChenStat) -> f64 {
    values.sort_by(f64::total_cmp);
    match stat {
        ChenStat::Max => *values.last().expect("non-empty"),
        ChenStat::Median => crate::events::median_sorted(values),
    }
}

/// Night-threshold occupancy. For each local day, the range, standard
/// deviation and mean of every night sub-window (01:00-05:00) are reduced
/// with `stat`; a window of that day is occupied if any of its three
/// features strictly exceeds the matching threshold.
pub fn predict_chen(s: &PowerSeries, cfg: &OccupancyConfig, stat: ChenStat) -> Result<ChenPrediction> {
    predict_chen_with_night(s, cfg, stat, ClockWindow::NIGHT)
}

pub fn predict_chen_with_night(
    s: &PowerSeries,
    cfg: &OccupancyConfig,
    stat: ChenStat,
    night: ClockWindow,
) -> Result<ChenPrediction> {
    cfg.validate()?;
    let tz = s.timezone();
    let w = cfg.window_s as i64;
    let mut out = OccupancySeries::empty_grid(s.start(), s.end(), cfg.window_s)?;

    // (mean, std, range, samples) per grid window.
    let stats: Vec<Option<(f64, f64, f64, usize)>> = (0..out.len())
        .map(|i| {
            let a = out.window_time(i);
            let (lo, hi) = (s.ceil_index(a), s.ceil_index(a + w));
            (lo < hi).then(|| {
                let (m, sd, r) = window_stats(&s.values()[lo..hi]);
                (m, sd, r, hi - lo)
            })
        })
        .collect();

    let mut skipped_days = Vec::new();
    for day in local_days(tz, s.start(), s.end()) {
        let first = ((day.start.max(out.window_start) - out.window_start) / w) as usize;
        let last = (((day.end - out.window_start + w - 1) / w) as usize).min(out.len());
        let in_day: Vec<usize> = (first..last)
            .filter(|&i| {
                let t = out.window_time(i);
                t >= day.start && t < day.end
            })
            .collect();

        let (mut means, mut stds, mut ranges) = (Vec::new(), Vec::new(), Vec::new());
        let mut night_samples = 0;
        for &i in &in_day {
            if let (Some((m, sd, r, n)), true) = (stats[i], night.contains(tz, out.window_time(i))) {
                means.push(m);
                stds.push(sd);
                ranges.push(r);
                night_samples += n;
            }
        }
        if night_samples < 2 {
            log::warn!("chen: no usable night window on {}, day skipped", day.date);
            skipped_days.push(day.date);
            continue;
        }
        let (t_mean, t_std, t_range) = (
            reduce(&mut means, stat),
            reduce(&mut stds, stat),
            reduce(&mut ranges, stat),
        );
        for &i in &in_day {
            if let Some((m, sd, r, _)) = stats[i] {
                out.flags[i] = m > t_mean || sd > t_std || r > t_range;
            }
        }
    }
    Ok(ChenPrediction {
        occupancy: out,
        skipped_days,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono_tz::Tz;

    #[test]
    fn constant_day_is_unoccupied() {
        let s = PowerSeries::new(0, Tz::UTC, 60, vec![300.0; 1440]).unwrap();
        for stat in [ChenStat::Max, ChenStat::Median] {
            let p = predict_chen(&s, &OccupancyConfig::default(), stat).unwrap();
            assert_eq!(p.occupancy.occupied_count(), 0);
            assert!(p.skipped_days.is_empty());
        }
    }

    #[test]
    fn single_pulse_window() {
        let mut v = vec![100.0; 1440];
        for x in &mut v[12 * 60 + 3..12 * 60 + 8] {
            *x = 500.0;
        }
        let s = PowerSeries::new(0, Tz::UTC, 60, v).unwrap();
        let p = predict_chen(&s, &OccupancyConfig::default(), ChenStat::Max).unwrap();
        let occupied: Vec<usize> = (0..p.occupancy.len()).filter(|&i| p.occupancy.flags[i]).collect();
        assert_eq!(occupied, vec![48]);
    }

    #[test]
    fn missing_night_skips_day() {
        let start = 6 * 3600;
        let s = PowerSeries::new(start, Tz::UTC, 60, vec![100.0; 600]).unwrap();
        let p = predict_chen(&s, &OccupancyConfig::default(), ChenStat::Max).unwrap();
        assert_eq!(p.skipped_days.len(), 1);
        assert_eq!(p.occupancy.occupied_count(), 0);
    }
}
