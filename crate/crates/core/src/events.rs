//! Steady-state edge detection, ON/OFF pairing and night-time background
//! load learning.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{ClockWindow, PowerSeries, Timestamp};

/// A step change between two steady states of the aggregate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: Timestamp,
    pub delta_w: f64,
    pub pre_level_w: f64,
}

impl Event {
    pub fn is_rising(&self) -> bool {
        self.delta_w > 0.0
    }
}

/// A rising edge matched with the falling edge that undoes it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventPair {
    pub on_time: Timestamp,
    pub off_time: Timestamp,
    pub magnitude_w: f64,
    pub duration_s: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// A sample joins the current steady state while it stays this close to
    /// the state's running mean.
    pub steady_tol_w: f64,
    /// Smallest level change reported as an event.
    pub min_event_w: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            steady_tol_w: 15.0,
            min_event_w: 70.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.steady_tol_w > 0.0) || self.min_event_w < self.steady_tol_w {
            return Err(Error::Argument(format!(
                "detector needs steady_tol_w > 0 and min_event_w >= steady_tol_w (got {} / {})",
                self.steady_tol_w, self.min_event_w
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairingConfig {
    pub match_tol_frac: f64,
    pub max_duration_s: i64,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self {
            match_tol_frac: 0.2,
            max_duration_s: 7200,
        }
    }
}

/// Thresholds for the whole detect / learn / pair chain.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventPipelineConfig {
    pub detector: DetectorConfig,
    pub pairing: PairingConfig,
    pub background: BackgroundConfig,
}

/// A maximal run of samples within tolerance of its running mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyState {
    pub start: usize,
    pub len: usize,
    pub mean: f64,
}

pub fn steady_states(values: &[f64], steady_tol_w: f64) -> Vec<SteadyState> {
    let mut out = Vec::new();
    let Some(&first) = values.first() else {
        return out;
    };
    let mut cur = SteadyState {
        start: 0,
        len: 1,
        mean: first,
    };
    let mut sum = first;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if (v - cur.mean).abs() <= steady_tol_w {
            cur.len += 1;
            sum += v;
            cur.mean = sum / cur.len as f64;
        } else {
            out.push(cur);
            cur = SteadyState {
                start: i,
                len: 1,
                mean: v,
            };
            sum = v;
        }
    }
    out.push(cur);
    out
}

fn events_from_states(s: &PowerSeries, offset: usize, states: &[SteadyState], cfg: &DetectorConfig) -> Vec<Event> {
    states
        .windows(2)
        .filter_map(|w| {
            let delta = w[1].mean - w[0].mean;
            (delta.abs() >= cfg.min_event_w).then(|| Event {
                time: s.time_at(offset + w[1].start),
                delta_w: delta,
                pre_level_w: w[0].mean,
            })
        })
        .collect()
}

/// Hart-style edge detection. The trace is cut into steady states; every
/// boundary whose adjacent state means differ by at least `min_event_w`
/// becomes an event stamped at the first sample of the new state.
pub fn detect_events(s: &PowerSeries, cfg: &DetectorConfig) -> Result<Vec<Event>> {
    cfg.validate()?;
    if s.len() < 2 {
        return Err(Error::Argument("event detection needs at least 2 samples".into()));
    }
    let states = steady_states(s.values(), cfg.steady_tol_w);
    Ok(events_from_states(s, 0, &states, cfg))
}

/// Detection restricted to samples `[from, to)` of `s`.
fn detect_in_range(s: &PowerSeries, from: usize, to: usize, cfg: &DetectorConfig) -> Vec<Event> {
    let states = steady_states(&s.values()[from..to], cfg.steady_tol_w);
    events_from_states(s, from, &states, cfg)
}

/// Greedy earliest-first pairing. Each falling edge takes the earliest
/// still-open rising edge of similar magnitude no more than
/// `max_duration_s` before it. Unmatched edges are dropped.
pub fn pair_events(events: &[Event], cfg: &PairingConfig) -> Vec<EventPair> {
    let mut open: Vec<&Event> = Vec::new();
    let mut pairs = Vec::new();
    for ev in events {
        if ev.is_rising() {
            open.push(ev);
            continue;
        }
        open.retain(|on| ev.time - on.time <= cfg.max_duration_s);
        let hit = open.iter().position(|on| {
            (on.delta_w + ev.delta_w).abs() <= cfg.match_tol_frac * on.delta_w.abs()
                && on.time < ev.time
        });
        if let Some(j) = hit {
            let on = open.remove(j);
            pairs.push(EventPair {
                on_time: on.time,
                off_time: ev.time,
                magnitude_w: 0.5 * (on.delta_w.abs() + ev.delta_w.abs()),
                duration_s: ev.time - on.time,
            });
        }
    }
    pairs.sort_by_key(|p| (p.on_time, p.off_time));
    pairs
}

/// Drops pairs longer than `max_duration_s`.
pub fn filter_long_pairs(pairs: &[EventPair], max_duration_s: i64) -> Vec<EventPair> {
    pairs
        .iter()
        .copied()
        .filter(|p| p.duration_s <= max_duration_s)
        .collect()
}

/// A group of magnitudes connected by small relative gaps.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnitudeCluster {
    /// Median member magnitude.
    pub center: f64,
    /// Indices into the clustered slice, ascending by magnitude.
    pub members: Vec<usize>,
}

/// Single-linkage clustering of positive magnitudes: sorted neighbours
/// whose relative gap `(next - prev) / prev` exceeds `rel_gap` start a new
/// cluster. Clusters come out in ascending order of magnitude.
pub fn cluster_magnitudes(magnitudes: &[f64], rel_gap: f64) -> Vec<MagnitudeCluster> {
    let mut order: Vec<usize> = (0..magnitudes.len()).collect();
    order.sort_by(|&a, &b| magnitudes[a].total_cmp(&magnitudes[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        match groups.last_mut() {
            Some(g) => {
                let prev = magnitudes[*g.last().unwrap()];
                if prev > 0.0 && (magnitudes[idx] - prev) / prev <= rel_gap {
                    g.push(idx);
                } else {
                    groups.push(vec![idx]);
                }
            }
            None => groups.push(vec![idx]),
        }
    }
    groups
        .into_iter()
        .map(|members| {
            let vals: Vec<f64> = members.iter().map(|&i| magnitudes[i]).collect();
            MagnitudeCluster {
                center: median_sorted(&vals),
                members,
            }
        })
        .collect()
}

pub(crate) fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Magnitudes of loads that run while the home is asleep.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BackgroundProfile {
    pub cluster_centers_w: Vec<f64>,
    pub match_tol_frac: f64,
}

impl BackgroundProfile {
    pub fn new(mut cluster_centers_w: Vec<f64>, match_tol_frac: f64) -> Result<Self> {
        if cluster_centers_w.iter().any(|c| !(*c > 0.0)) {
            return Err(Error::Validation("background centers must be positive".into()));
        }
        cluster_centers_w.sort_by(f64::total_cmp);
        Ok(Self {
            cluster_centers_w,
            match_tol_frac,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.cluster_centers_w.is_empty()
    }

    pub fn matches(&self, magnitude_w: f64) -> bool {
        self.cluster_centers_w
            .iter()
            .any(|c| (magnitude_w - c).abs() <= self.match_tol_frac * c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundConfig {
    pub night: ClockWindow,
    pub cluster_tol_frac: f64,
    pub min_support: usize,
    pub match_tol_frac: f64,
}

impl Default for BackgroundConfig {
    fn default() -> Self {
        Self {
            night: ClockWindow::NIGHT,
            cluster_tol_frac: 0.1,
            min_support: 3,
            match_tol_frac: 0.1,
        }
    }
}

/// Learns background-load magnitudes from edges seen inside the night
/// window. Each contiguous night stretch is segmented on its own, so edges
/// straddling the window boundary are not counted.
pub fn learn_background(
    s: &PowerSeries,
    det: &DetectorConfig,
    cfg: &BackgroundConfig,
) -> Result<BackgroundProfile> {
    det.validate()?;
    let sod = s.seconds_of_day();
    let mut magnitudes = Vec::new();
    let mut night_samples = 0usize;
    let mut i = 0;
    while i < sod.len() {
        if !cfg.night.contains_second(sod[i]) {
            i += 1;
            continue;
        }
        let from = i;
        while i < sod.len() && cfg.night.contains_second(sod[i]) {
            i += 1;
        }
        night_samples += i - from;
        if i - from >= 2 {
            magnitudes.extend(detect_in_range(s, from, i, det).iter().map(|e| e.delta_w.abs()));
        }
    }
    if night_samples == 0 {
        return Err(Error::EmptyWindow(format!(
            "no samples inside the night window {:02}:00-{:02}:00",
            cfg.night.start_hour, cfg.night.end_hour
        )));
    }
    let centers = cluster_magnitudes(&magnitudes, cfg.cluster_tol_frac)
        .into_iter()
        .filter(|c| c.members.len() >= cfg.min_support)
        .map(|c| c.center)
        .collect();
    BackgroundProfile::new(centers, cfg.match_tol_frac)
}

/// Keeps the pairs that do not look like a learned background load.
pub fn remove_background(pairs: &[EventPair], profile: &BackgroundProfile) -> Vec<EventPair> {
    pairs
        .iter()
        .copied()
        .filter(|p| !profile.matches(p.magnitude_w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono_tz::Tz;

    fn ev(time: Timestamp, delta_w: f64) -> Event {
        Event {
            time,
            delta_w,
            pre_level_w: 0.0,
        }
    }

    fn series(values: Vec<f64>) -> PowerSeries {
        PowerSeries::new(0, Tz::UTC, 1, values).unwrap()
    }

    #[test]
    fn constant_has_no_events() {
        let s = series(vec![100.0; 500]);
        assert!(detect_events(&s, &DetectorConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn two_clean_edges() {
        let mut v = vec![0.0; 60];
        v.extend(vec![500.0; 60]);
        v.extend(vec![0.0; 60]);
        let got = detect_events(&series(v), &DetectorConfig::default()).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!((got[0].time, got[0].delta_w), (60, 500.0));
        assert_eq!((got[1].time, got[1].delta_w), (120, -500.0));
        assert_eq!(got[1].pre_level_w, 500.0);
    }

    #[test]
    fn short_series_rejected() {
        let s = series(vec![1.0]);
        assert!(matches!(
            detect_events(&s, &DetectorConfig::default()),
            Err(Error::Argument(_))
        ));
        let bad = DetectorConfig {
            steady_tol_w: 20.0,
            min_event_w: 10.0,
        };
        assert!(detect_events(&series(vec![1.0, 2.0]), &bad).is_err());
    }

    #[test]
    fn pairs_single_match() {
        let pairs = pair_events(&[ev(60, 500.0), ev(120, -500.0)], &PairingConfig {
            match_tol_frac: 0.2,
            max_duration_s: 3600,
        });
        assert_eq!(pairs, vec![EventPair {
            on_time: 60,
            off_time: 120,
            magnitude_w: 500.0,
            duration_s: 60
        }]);
        assert!(pair_events(&[ev(60, 500.0)], &PairingConfig::default()).is_empty());
        assert!(pair_events(&[], &PairingConfig::default()).is_empty());
    }

    #[test]
    fn interleaved_two_appliances() {
        let events = [ev(10, 500.0), ev(20, 200.0), ev(50, -200.0), ev(80, -500.0)];
        let got: Vec<_> = pair_events(&events, &PairingConfig::default())
            .iter()
            .map(|p| (p.on_time, p.off_time, p.magnitude_w))
            .collect();
        assert_eq!(got, vec![(10, 80, 500.0), (20, 50, 200.0)]);
    }

    #[test]
    fn pairing_respects_max_duration() {
        let events = [ev(0, 500.0), ev(100, -500.0)];
        let cfg = PairingConfig {
            match_tol_frac: 0.2,
            max_duration_s: 99,
        };
        assert!(pair_events(&events, &cfg).is_empty());
    }

    #[test]
    fn clustering_single_linkage() {
        let c = cluster_magnitudes(&[150.0, 1200.0, 155.0, 1180.0, 148.0], 0.1);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].center, 150.0);
        assert_eq!(c[0].members, vec![4, 0, 2]);
        assert_eq!(c[1].center, 1190.0);
    }

    #[test]
    fn background_removal() {
        let pair = |m: f64| EventPair {
            on_time: 0,
            off_time: 10,
            magnitude_w: m,
            duration_s: 10,
        };
        let profile = BackgroundProfile::new(vec![150.0], 0.1).unwrap();
        let kept = remove_background(&[pair(150.0), pair(700.0)], &profile);
        assert_eq!(kept, vec![pair(700.0)]);
        let empty = BackgroundProfile::default();
        assert_eq!(remove_background(&[pair(150.0)], &empty), vec![pair(150.0)]);
    }

    #[test]
    fn flat_night_learns_nothing() {
        let s = PowerSeries::new(0, Tz::UTC, 60, vec![80.0; 1440]).unwrap();
        let p = learn_background(&s, &DetectorConfig::default(), &BackgroundConfig::default()).unwrap();
        assert!(p.is_empty());
    }

    #[test]
    fn daytime_only_series_has_empty_night() {
        let start = 6 * 3600;
        let s = PowerSeries::new(start, Tz::UTC, 60, vec![80.0; 600]).unwrap();
        let err = learn_background(&s, &DetectorConfig::default(), &BackgroundConfig::default());
        assert!(matches!(err, Err(Error::EmptyWindow(_))));
    }
}
