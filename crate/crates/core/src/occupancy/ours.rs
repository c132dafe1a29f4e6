use chrono_tz::Tz;

use crate::error::Result;
use crate::events::{
    detect_events, filter_long_pairs, learn_background, pair_events, remove_background,
    BackgroundProfile, Event, EventPair, EventPipelineConfig,
};
use crate::series::{local_days, OccupancySeries, PowerSeries, Timestamp};

use super::OccupancyConfig;

/// Intermediate products of [`predict_ours`], kept for inspection.
#[derive(Clone, Debug)]
pub struct OursTrace {
    pub occupancy: OccupancySeries,
    pub events: Vec<Event>,
    pub profile: BackgroundProfile,
    pub foreground: Vec<EventPair>,
}

/// Event-pair occupancy: occupant-driven appliance use marks the home as
/// occupied.
///
/// Detect edges, learn background loads from the night window, pair edges,
/// drop background and over-long pairs, then turn the surviving pairs into
/// occupied intervals (see [`occupancy_from_pairs`]).
pub fn predict_ours(s: &PowerSeries, cfg: &OccupancyConfig, det: &EventPipelineConfig) -> Result<OursTrace> {
    cfg.validate()?;
    let events = detect_events(s, &det.detector)?;
    let profile = learn_background(s, &det.detector, &det.background)?;
    let pairs = pair_events(&events, &det.pairing);
    let foreground = filter_long_pairs(&remove_background(&pairs, &profile), det.pairing.max_duration_s);
    let occupancy = occupancy_from_pairs(&foreground, s.start(), s.end(), s.timezone(), cfg)?;
    Ok(OursTrace {
        occupancy,
        events,
        profile,
        foreground,
    })
}

/// Occupied intervals from foreground pairs over `[from, to)`.
///
/// Each pair's `[on, off)` span is occupied; consecutive spans closer than
/// `pair_gap_fill_s` are bridged. On every local day with at least one
/// foreground edge, midnight up to the first edge and the last edge up to
/// the next midnight are also occupied (each rule switchable). Days without
/// foreground edges stay unoccupied.
pub fn occupancy_from_pairs(
    pairs: &[EventPair],
    from: Timestamp,
    to: Timestamp,
    tz: Tz,
    cfg: &OccupancyConfig,
) -> Result<OccupancySeries> {
    let mut out = OccupancySeries::empty_grid(from, to, cfg.window_s)?;

    let mut spans: Vec<(Timestamp, Timestamp)> = pairs.iter().map(|p| (p.on_time, p.off_time)).collect();
    spans.sort_unstable();
    let mut merged: Vec<(Timestamp, Timestamp)> = Vec::with_capacity(spans.len());
    for (a, b) in spans {
        match merged.last_mut() {
            Some(last) if a - last.1 < cfg.pair_gap_fill_s => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    for (a, b) in &merged {
        out.mark((*a).max(from), (*b).min(to));
    }

    let mut edges: Vec<Timestamp> = pairs.iter().flat_map(|p| [p.on_time, p.off_time]).collect();
    edges.sort_unstable();
    for day in local_days(tz, from, to) {
        let lo = edges.partition_point(|&t| t < day.start);
        let hi = edges.partition_point(|&t| t < day.end);
        if lo == hi {
            continue;
        }
        if cfg.mark_start_of_day {
            out.mark(day.start.max(from), edges[lo].min(to));
        }
        if cfg.mark_end_of_day {
            out.mark(edges[hi - 1].max(from), day.end.min(to));
        }
    }
    Ok(out)
}
