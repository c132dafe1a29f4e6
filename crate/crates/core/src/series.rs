//! Uniformly sampled power traces, windowed occupancy, and local-clock
//! arithmetic shared by every pipeline stage.

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Timelike, Weekday};
use chrono_tz::Tz;

use crate::error::{Error, Result};

/// Absolute time in UTC epoch seconds.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;

pub fn parse_timezone(name: &str) -> Result<Tz> {
    name.parse::<Tz>()
        .map_err(|_| Error::Timezone(name.to_string()))
}

/// Active power in watts on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries {
    start: Timestamp,
    tz: Tz,
    period_s: u32,
    values: Vec<f64>,
}

impl PowerSeries {
    pub fn new(start: Timestamp, tz: Tz, period_s: u32, values: Vec<f64>) -> Result<Self> {
        if period_s == 0 {
            return Err(Error::Argument("period_s must be positive".into()));
        }
        if values.is_empty() {
            return Err(Error::Argument("a power series needs at least one sample".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation(format!(
                "sample {i} is {} (values must be finite and non-negative)",
                values[i]
            )));
        }
        Ok(Self {
            start,
            tz,
            period_s,
            values,
        })
    }

    /// Same grid and zone as `self`, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.start, self.tz, self.period_s, values)
    }

    /// All-zero series on the same grid.
    pub fn zeros_like(&self) -> Self {
        Self {
            start: self.start,
            tz: self.tz,
            period_s: self.period_s,
            values: vec![0.0; self.values.len()],
        }
    }

    pub fn start(&self) -> Timestamp {
        self.start
    }

    /// Exclusive end of the covered span.
    pub fn end(&self) -> Timestamp {
        self.start + self.values.len() as i64 * self.period_s as i64
    }

    pub fn timezone(&self) -> Tz {
        self.tz
    }

    pub fn period_s(&self) -> u32 {
        self.period_s
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, index: usize) -> Timestamp {
        self.start + index as i64 * self.period_s as i64
    }

    /// Index of the sample covering `t`, if inside the span.
    pub fn index_of(&self, t: Timestamp) -> Option<usize> {
        if t < self.start || t >= self.end() {
            return None;
        }
        Some(((t - self.start) / self.period_s as i64) as usize)
    }

    /// First sample index whose time is `>= t`, clamped to `len()`.
    pub fn ceil_index(&self, t: Timestamp) -> usize {
        if t <= self.start {
            return 0;
        }
        let p = self.period_s as i64;
        let idx = (t - self.start + p - 1) / p;
        (idx as usize).min(self.values.len())
    }

    pub fn total_energy_ws(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.period_s as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Samples with time in `[from, to)`.
    pub fn slice_time(&self, from: Timestamp, to: Timestamp) -> Result<Self> {
        let a = self.ceil_index(from);
        let b = self.ceil_index(to);
        if a >= b {
            return Err(Error::EmptyWindow(format!(
                "no samples between t={from} and t={to}"
            )));
        }
        Ok(Self {
            start: self.time_at(a),
            tz: self.tz,
            period_s: self.period_s,
            values: self.values[a..b].to_vec(),
        })
    }

    /// Splits at the local midnight closest to `fraction` of the span.
    pub fn split_at_fraction(&self, fraction: f64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&fraction) || fraction == 0.0 {
            return Err(Error::Argument(format!(
                "split fraction {fraction} must lie in (0, 1)"
            )));
        }
        let target = self.start + ((self.end() - self.start) as f64 * fraction) as i64;
        let days = local_days(self.tz, self.start, self.end());
        let cut = days
            .iter()
            .map(|d| d.start)
            .filter(|&t| t > self.start && t < self.end())
            .min_by_key(|&t| (t - target).abs())
            .unwrap_or(target);
        Ok((self.slice_time(self.start, cut)?, self.slice_time(cut, self.end())?))
    }

    pub fn local_time(&self, index: usize) -> DateTime<Tz> {
        local_time(self.tz, self.time_at(index))
    }

    /// Seconds since local midnight for every sample.
    pub fn seconds_of_day(&self) -> Vec<u32> {
        (0..self.len())
            .map(|i| self.local_time(i).num_seconds_from_midnight())
            .collect()
    }
}

/// Boolean occupancy per fixed-width window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OccupancySeries {
    pub window_start: Timestamp,
    pub window_s: u32,
    pub flags: Vec<bool>,
}

impl OccupancySeries {
    pub fn new(window_start: Timestamp, window_s: u32, flags: Vec<bool>) -> Result<Self> {
        if window_s == 0 {
            return Err(Error::Argument("window_s must be positive".into()));
        }
        if flags.is_empty() {
            return Err(Error::Argument("occupancy needs at least one window".into()));
        }
        Ok(Self {
            window_start,
            window_s,
            flags,
        })
    }

    /// Windows aligned to multiples of `window_s` covering `[from, to)`, all
    /// unoccupied.
    pub fn empty_grid(from: Timestamp, to: Timestamp, window_s: u32) -> Result<Self> {
        let w = window_s as i64;
        if window_s == 0 {
            return Err(Error::Argument("window_s must be positive".into()));
        }
        let first = from.div_euclid(w) * w;
        let n = ((to - first + w - 1) / w).max(1) as usize;
        Self::new(first, window_s, vec![false; n])
    }

    /// Windows an occupancy state held piecewise-constant from each sample
    /// time over `[t, t + hold_s)`. A window is occupied if any occupied
    /// stretch overlaps it.
    pub fn from_samples(
        samples: &[(Timestamp, bool)],
        hold_s: &[i64],
        window_s: u32,
    ) -> Result<Self> {
        let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
            return Err(Error::Argument("no occupancy samples".into()));
        };
        let end = last.0 + hold_s.last().copied().unwrap_or(1).max(1);
        let mut out = Self::empty_grid(first.0, end, window_s)?;
        for ((t, occ), hold) in samples.iter().zip(hold_s) {
            if *occ {
                out.mark(*t, *t + (*hold).max(1));
            }
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn end(&self) -> Timestamp {
        self.window_start + self.flags.len() as i64 * self.window_s as i64
    }

    pub fn window_time(&self, i: usize) -> Timestamp {
        self.window_start + i as i64 * self.window_s as i64
    }

    /// Flags every window overlapping the half-open interval `[a, b)`.
    pub fn mark(&mut self, a: Timestamp, b: Timestamp) {
        if b <= a {
            return;
        }
        let w = self.window_s as i64;
        let lo = ((a - self.window_start).div_euclid(w)).max(0);
        let hi = ((b - 1 - self.window_start).div_euclid(w)).min(self.flags.len() as i64 - 1);
        for i in lo..=hi {
            if i >= 0 {
                self.flags[i as usize] = true;
            }
        }
    }

    pub fn occupied_count(&self) -> usize {
        self.flags.iter().filter(|f| **f).count()
    }
}

/// Half-open local clock window `[start_hour, end_hour)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ClockWindow {
    pub start_hour: u32,
    pub end_hour: u32,
}

impl ClockWindow {
    pub const NIGHT: ClockWindow = ClockWindow::new_const(1, 5);
    pub const DAY: ClockWindow = ClockWindow::new_const(6, 22);

    const fn new_const(start_hour: u32, end_hour: u32) -> Self {
        Self {
            start_hour,
            end_hour,
        }
    }

    pub fn new(start_hour: u32, end_hour: u32) -> Result<Self> {
        if start_hour >= end_hour || end_hour > 24 {
            return Err(Error::Argument(format!(
                "clock window [{start_hour}, {end_hour}) must satisfy 0 <= start < end <= 24"
            )));
        }
        Ok(Self {
            start_hour,
            end_hour,
        })
    }

    pub fn contains_second(&self, second_of_day: u32) -> bool {
        second_of_day >= self.start_hour * 3600 && second_of_day < self.end_hour * 3600
    }

    pub fn contains(&self, tz: Tz, t: Timestamp) -> bool {
        self.contains_second(local_time(tz, t).num_seconds_from_midnight())
    }
}

pub fn local_time(tz: Tz, t: Timestamp) -> DateTime<Tz> {
    tz.timestamp_opt(t, 0)
        .single()
        .expect("UTC instants always map to a single local time")
}

pub fn is_weekend(tz: Tz, t: Timestamp) -> bool {
    matches!(local_time(tz, t).weekday(), Weekday::Sat | Weekday::Sun)
}

/// Local midnight of `date` as an absolute timestamp. Zones whose DST
/// switch skips midnight start the day at the first valid local instant.
pub fn local_midnight(tz: Tz, date: NaiveDate) -> Timestamp {
    for minute in 0..(4 * 60) {
        let naive = date.and_hms_opt(minute / 60, minute % 60, 0).unwrap();
        if let Some(dt) = tz.from_local_datetime(&naive).earliest() {
            return dt.timestamp();
        }
    }
    unreachable!("no valid local time within four hours of midnight on {date}")
}

/// One local calendar day; 23 or 25 hours long across DST switches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalDay {
    pub date: NaiveDate,
    pub start: Timestamp,
    pub end: Timestamp,
}

/// Local days intersecting `[from, to)`, with their full (unclipped) bounds.
pub fn local_days(tz: Tz, from: Timestamp, to: Timestamp) -> Vec<LocalDay> {
    let mut out = Vec::new();
    if to <= from {
        return out;
    }
    let mut date = local_time(tz, from).date_naive();
    loop {
        let start = local_midnight(tz, date);
        let next = date.succ_opt().expect("date in range");
        let end = local_midnight(tz, next);
        if start >= to {
            break;
        }
        out.push(LocalDay { date, start, end });
        date = next;
    }
    out
}

/// Arithmetic-mean downsampling; trailing partial bucket is dropped.
pub fn resample(s: &PowerSeries, new_period_s: u32) -> Result<PowerSeries> {
    if new_period_s == 0 || !new_period_s.is_multiple_of(s.period_s) {
        return Err(Error::Argument(format!(
            "new period {new_period_s} s is not a positive multiple of {} s",
            s.period_s
        )));
    }
    let factor = (new_period_s / s.period_s) as usize;
    let values: Vec<f64> = s
        .values
        .chunks_exact(factor)
        .map(|c| c.iter().sum::<f64>() / factor as f64)
        .collect();
    if values.is_empty() {
        return Err(Error::Argument(format!(
            "series of {} samples is shorter than one {new_period_s} s bucket",
            s.len()
        )));
    }
    PowerSeries::new(s.start, s.tz, new_period_s, values)
}

/// Mean power over every sample whose local clock time falls in the window,
/// across all covered days.
pub fn clock_window_mean(s: &PowerSeries, start_hour: u32, end_hour: u32) -> Result<f64> {
    let window = ClockWindow::new(start_hour, end_hour)?;
    let (sum, n) = s
        .seconds_of_day()
        .into_iter()
        .zip(s.values())
        .filter(|(sod, _)| window.contains_second(*sod))
        .fold((0.0, 0usize), |(acc, n), (_, v)| (acc + v, n + 1));
    if n == 0 {
        return Err(Error::EmptyWindow(format!(
            "no samples between {start_hour}:00 and {end_hour}:00 local"
        )));
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utc(values: Vec<f64>, period: u32) -> PowerSeries {
        PowerSeries::new(0, Tz::UTC, period, values).unwrap()
    }

    #[test]
    fn rejects_negative_and_empty() {
        assert!(PowerSeries::new(0, Tz::UTC, 1, vec![]).is_err());
        assert!(PowerSeries::new(0, Tz::UTC, 1, vec![-1.0]).is_err());
        assert!(PowerSeries::new(0, Tz::UTC, 0, vec![1.0]).is_err());
    }

    #[test]
    fn resample_exact_means() {
        let s = utc(vec![100.0, 100.0, 200.0, 200.0], 1);
        let r = resample(&s, 2).unwrap();
        assert_eq!(r.values(), &[100.0, 200.0]);
        assert_eq!(r.period_s(), 2);
    }

    #[test]
    fn resample_identity_and_errors() {
        let s = utc(vec![1.0, 2.0, 3.0], 5);
        assert_eq!(resample(&s, 5).unwrap(), s);
        assert!(matches!(resample(&s, 7), Err(Error::Argument(_))));
        assert!(matches!(resample(&s, 20), Err(Error::Argument(_))));
    }

    #[test]
    fn resample_drops_partial_tail() {
        let s = utc(vec![1.0, 1.0, 1.0, 5.0, 5.0], 1);
        assert_eq!(resample(&s, 2).unwrap().values(), &[1.0, 3.0]);
    }

    #[test]
    fn window_mean_constant_and_piecewise() {
        let s = utc(vec![1000.0; 86_400 / 60], 60);
        assert_eq!(clock_window_mean(&s, 1, 5).unwrap(), 1000.0);

        let vals = (0..1440)
            .map(|m| if (18 * 60..22 * 60).contains(&m) { 500.0 } else { 0.0 })
            .collect();
        let s = utc(vals, 60);
        assert_eq!(clock_window_mean(&s, 18, 22).unwrap(), 500.0);
    }

    #[test]
    fn window_mean_empty_window() {
        let s = utc(vec![1.0; 60], 60); // 00:00 - 01:00 only
        assert!(matches!(
            clock_window_mean(&s, 1, 5),
            Err(Error::EmptyWindow(_))
        ));
        assert!(matches!(clock_window_mean(&s, 5, 5), Err(Error::Argument(_))));
    }

    #[test]
    fn window_is_half_open() {
        // Hourly samples; the 05:00 sample must not count toward [1, 5).
        let vals = (0..24).map(|h| h as f64).collect();
        let s = utc(vals, 3600);
        assert_eq!(clock_window_mean(&s, 1, 5).unwrap(), 2.5);
    }

    #[test]
    fn local_days_across_dst() {
        let tz: Tz = "America/Chicago".parse().unwrap();
        // 2014-03-09 is a 23-hour day in Chicago.
        let date = NaiveDate::from_ymd_opt(2014, 3, 9).unwrap();
        let start = local_midnight(tz, date);
        let days = local_days(tz, start, start + 2 * SECONDS_PER_DAY);
        assert_eq!(days[0].end - days[0].start, 23 * 3600);
        assert_eq!(days[1].end - days[1].start, 24 * 3600);
    }

    #[test]
    fn occupancy_mark_overlap() {
        let mut o = OccupancySeries::empty_grid(0, 3600, 900).unwrap();
        assert_eq!(o.len(), 4);
        o.mark(900, 1800);
        assert_eq!(o.flags, vec![false, true, false, false]);
        o.mark(1801, 1802);
        assert_eq!(o.flags, vec![false, true, true, false]);
    }

    #[test]
    fn occupancy_from_samples_any_rule() {
        let samples = vec![(0, false), (60, true), (120, false), (900, false)];
        let holds = vec![60, 60, 780, 60];
        let o = OccupancySeries::from_samples(&samples, &holds, 900).unwrap();
        assert_eq!(o.flags, vec![true, false]);
    }

    #[test]
    fn split_lands_on_local_midnight() {
        let s = utc(vec![1.0; 4 * 24], 3600);
        let (a, b) = s.split_at_fraction(0.5).unwrap();
        assert_eq!(a.len(), 48);
        assert_eq!(b.start(), 2 * SECONDS_PER_DAY);
    }
}
