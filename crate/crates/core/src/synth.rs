//! Seeded synthetic homes with full ground truth.
//!
//! A home is a sum of independent loads on a sample-aligned grid:
//!
//! * a constant base load,
//! * a fridge and an HVAC unit that cycle day and night regardless of
//!   occupancy,
//! * occupant-driven loads arriving as a Poisson process while someone is
//!   home and awake,
//!
//! plus additive Gaussian noise on the aggregate only. No two load edges
//! ever land on the same sample, so each planted edge shows up as its own
//! step in the aggregate.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use chrono_tz::Tz;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{write_occupancy_csv, write_power_csv};
use crate::manifest::{Characteristics, DatasetManifest, HomeEntry};
use crate::series::{local_days, local_midnight, parse_timezone, OccupancySeries, PowerSeries, Timestamp};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FridgeSpec {
    pub power_w: f64,
    pub on_s: i64,
    pub off_s: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HvacSpec {
    pub power_w: f64,
    pub duty_fraction: f64,
    pub cycle_s: i64,
    pub circuits: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupantLoadSpec {
    pub rate_per_occupied_hour: f64,
    pub power_range_w: (f64, f64),
    pub duration_range_s: (i64, i64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomeSpec {
    pub home_id: String,
    pub seed: u64,
    pub days: u32,
    pub period_s: u32,
    pub start_date: NaiveDate,
    pub timezone: String,
    pub occupants: u32,
    pub area_sqft: f64,
    pub floors: u32,
    pub rooms: u32,
    pub income_usd: f64,
    pub age_years: f64,
    pub base_load_w: f64,
    pub fridge: FridgeSpec,
    pub hvac: HvacSpec,
    pub occupant_load: OccupantLoadSpec,
    pub noise_sigma_w: f64,
}

impl Default for HomeSpec {
    fn default() -> Self {
        Self {
            home_id: "home_00".into(),
            seed: 7,
            days: 14,
            period_s: 60,
            // A Monday, clear of DST switches.
            start_date: NaiveDate::from_ymd_opt(2014, 6, 2).unwrap(),
            timezone: "America/Chicago".into(),
            occupants: 2,
            area_sqft: 1600.0,
            floors: 1,
            rooms: 6,
            income_usd: 100_000.0,
            age_years: 20.0,
            base_load_w: 80.0,
            fridge: FridgeSpec {
                power_w: 150.0,
                on_s: 1200,
                off_s: 2400,
            },
            hvac: HvacSpec {
                power_w: 3000.0,
                duty_fraction: 0.4,
                cycle_s: 2700,
                circuits: 1,
            },
            occupant_load: OccupantLoadSpec {
                rate_per_occupied_hour: 3.5,
                power_range_w: (200.0, 1000.0),
                duration_range_s: (300, 1800),
            },
            noise_sigma_w: 5.0,
        }
    }
}

impl HomeSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Validation(format!("{}: {msg}", self.home_id)));
        if self.days == 0 || self.period_s == 0 {
            return bad("days and period_s must be positive");
        }
        if self.fridge.on_s <= 0 || self.fridge.off_s <= 0 || self.fridge.power_w <= 0.0 {
            return bad("fridge power and cycle durations must be positive");
        }
        if !(self.hvac.duty_fraction > 0.0 && self.hvac.duty_fraction < 1.0) {
            return bad("hvac duty_fraction must lie in (0, 1)");
        }
        if self.hvac.cycle_s <= 0 || self.hvac.power_w <= 0.0 {
            return bad("hvac power and cycle must be positive");
        }
        let ol = &self.occupant_load;
        if ol.rate_per_occupied_hour < 0.0
            || !(ol.power_range_w.0 > 0.0 && ol.power_range_w.0 <= ol.power_range_w.1)
            || !(ol.duration_range_s.0 > 0 && ol.duration_range_s.0 <= ol.duration_range_s.1)
        {
            return bad("occupant load ranges must be positive and ordered");
        }
        if !(self.noise_sigma_w >= 0.0) || self.base_load_w < 0.0 {
            return bad("noise_sigma_w and base_load_w must be non-negative");
        }
        parse_timezone(&self.timezone)?;
        Ok(())
    }

    pub fn characteristics(&self) -> Characteristics {
        Characteristics {
            age_years: Some(self.age_years),
            area_sqft: Some(self.area_sqft),
            income_usd_per_year: Some(self.income_usd),
            floors: Some(self.floors as f64),
            rooms: Some(self.rooms as f64),
            occupants: Some(self.occupants as f64),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadSource {
    Fridge,
    Hvac,
    Occupant,
}

impl LoadSource {
    pub fn is_background(self) -> bool {
        !matches!(self, LoadSource::Occupant)
    }
}

/// One planted rectangular load: on over samples `[on_index, off_index)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantedLoad {
    pub source: LoadSource,
    pub on_index: usize,
    pub off_index: usize,
    pub power_w: f64,
}

/// A planted edge in sample coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantedEdge {
    pub index: usize,
    pub time: Timestamp,
    pub delta_w: f64,
    pub source: LoadSource,
}

#[derive(Clone, Debug)]
pub struct SynthHome {
    pub spec: HomeSpec,
    pub aggregate: PowerSeries,
    /// `fridge`, `hvac`, and `other` (base load plus occupant loads).
    pub appliances: BTreeMap<String, PowerSeries>,
    /// Ground-truth occupancy per sample.
    pub occupied: Vec<bool>,
    pub loads: Vec<PlantedLoad>,
}

impl SynthHome {
    /// Every ON and OFF edge that falls inside the series, in time order.
    pub fn edges(&self) -> Vec<PlantedEdge> {
        let n = self.aggregate.len();
        let mut out = Vec::new();
        for l in &self.loads {
            if l.on_index > 0 && l.on_index < n {
                out.push(PlantedEdge {
                    index: l.on_index,
                    time: self.aggregate.time_at(l.on_index),
                    delta_w: l.power_w,
                    source: l.source,
                });
            }
            if l.off_index < n {
                out.push(PlantedEdge {
                    index: l.off_index,
                    time: self.aggregate.time_at(l.off_index),
                    delta_w: -l.power_w,
                    source: l.source,
                });
            }
        }
        out.sort_by_key(|e| e.index);
        out
    }

    pub fn occupancy(&self, window_s: u32) -> Result<OccupancySeries> {
        let p = self.aggregate.period_s() as i64;
        let mut out = OccupancySeries::empty_grid(self.aggregate.start(), self.aggregate.end(), window_s)?;
        for (i, occ) in self.occupied.iter().enumerate() {
            if *occ {
                let t = self.aggregate.time_at(i);
                out.mark(t, t + p);
            }
        }
        Ok(out)
    }

    pub fn hvac(&self) -> &PowerSeries {
        &self.appliances["hvac"]
    }

    /// Writes CSVs under `dir` and returns the manifest entry with paths
    /// relative to `relative_to`.
    pub fn write(&self, dir: &Path, relative_to: &Path) -> Result<HomeEntry> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let rel = |p: &Path| -> PathBuf { p.strip_prefix(relative_to).unwrap_or(p).to_path_buf() };
        let agg = dir.join("aggregate.csv");
        write_power_csv(&self.aggregate, &agg)?;
        let mut appliance_paths = BTreeMap::new();
        for (name, s) in &self.appliances {
            let p = dir.join(format!("{name}.csv"));
            write_power_csv(s, &p)?;
            appliance_paths.insert(name.clone(), rel(&p));
        }
        let occ = dir.join("occupancy.csv");
        let samples: Vec<(Timestamp, bool)> = self
            .occupied
            .iter()
            .enumerate()
            .map(|(i, o)| (self.aggregate.time_at(i), *o))
            .collect();
        write_occupancy_csv(&samples, &occ)?;

        let prov = dir.join("provenance.csv");
        let mut text = String::from("source,on_time,off_time,power_w\n");
        for l in &self.loads {
            let src = serde_json::to_value(l.source)?;
            text.push_str(&format!(
                "{},{},{},{}\n",
                src.as_str().unwrap_or_default(),
                self.aggregate.time_at(l.on_index),
                self.aggregate.time_at(l.off_index),
                l.power_w
            ));
        }
        fs::write(&prov, text).map_err(|e| Error::io(&prov, e))?;

        Ok(HomeEntry {
            home_id: self.spec.home_id.clone(),
            aggregate_path: rel(&agg),
            appliance_paths,
            occupancy_path: Some(rel(&occ)),
            timezone: self.spec.timezone.clone(),
            characteristics: self.spec.characteristics(),
            hvac_circuits: Some(self.spec.hvac.circuits),
            season: None,
        })
    }
}

/// Sample-index bookkeeping that keeps every edge on a distinct sample.
struct EdgeGrid {
    taken: Vec<bool>,
}

impl EdgeGrid {
    fn new(n: usize) -> Self {
        Self {
            taken: vec![false; n + 1],
        }
    }

    /// Claims the first free index at or after `idx`; indices past the end
    /// are never contended.
    fn claim(&mut self, mut idx: usize) -> usize {
        while idx < self.taken.len() && self.taken[idx] {
            idx += 1;
        }
        if idx < self.taken.len() {
            self.taken[idx] = true;
        }
        idx
    }
}

fn jitter(rng: &mut ChaCha8Rng, base: i64, frac: f64) -> i64 {
    let f = 1.0 + rng.random_range(-frac..=frac);
    ((base as f64) * f).round().max(1.0) as i64
}

/// Periodic ON/OFF cycling starting at a random phase.
fn cycling_loads(
    rng: &mut ChaCha8Rng,
    grid: &mut EdgeGrid,
    source: LoadSource,
    power_w: f64,
    on_s: i64,
    off_s: i64,
    period_s: i64,
    n: usize,
) -> Vec<PlantedLoad> {
    let mut out = Vec::new();
    let mut t = -rng.random_range(0..(on_s + off_s));
    while t < n as i64 * period_s {
        let on = jitter(rng, on_s, 0.05);
        let off = jitter(rng, off_s, 0.05);
        let a = t.max(0) / period_s;
        let b = (t + on).max(0) / period_s;
        if b > a {
            let on_index = if t <= 0 { 0 } else { grid.claim(a as usize) };
            let off_index = grid.claim((b as usize).max(on_index + 1));
            out.push(PlantedLoad {
                source,
                on_index,
                off_index,
                power_w,
            });
            t = off_index as i64 * period_s + off;
        } else {
            t += on + off;
        }
    }
    out
}

#[derive(Clone, Copy, Debug)]
struct Interval {
    start: Timestamp,
    end: Timestamp,
}

/// Per-day occupancy: home at night, weekday away block with a probability
/// that falls with the number of occupants, occasional weekend errand.
fn occupancy_schedule(rng: &mut ChaCha8Rng, spec: &HomeSpec, tz: Tz, start: Timestamp, end: Timestamp) -> (Vec<Interval>, Vec<Interval>) {
    let away_prob = (0.95 - 0.1 * (spec.occupants.saturating_sub(1)) as f64).clamp(0.4, 0.95);
    let mut away = Vec::new();
    let mut awake = Vec::new();
    for day in local_days(tz, start, end) {
        let at = |h: f64| day.start + (h * 3600.0) as i64;
        let wake = rng.random_range(6.0..7.0);
        let sleep = rng.random_range(22.5..23.5);
        awake.push(Interval {
            start: at(wake),
            end: at(sleep),
        });
        let weekend = matches!(day.date.weekday(), Weekday::Sat | Weekday::Sun);
        if !weekend && rng.random_bool(away_prob) {
            let leave = rng.random_range(7.5..9.0);
            let back = rng.random_range(16.5..18.5);
            away.push(Interval {
                start: at(leave),
                end: at(back),
            });
        } else if weekend && rng.random_bool(0.5) {
            let leave = rng.random_range(10.0..14.0);
            let len = rng.random_range(1.5..4.0);
            away.push(Interval {
                start: at(leave),
                end: at(leave + len),
            });
        }
    }
    (away, awake)
}

/// Generates one home. Identical specs give bit-identical output.
pub fn gen_home(spec: &HomeSpec) -> Result<SynthHome> {
    spec.validate()?;
    let tz = parse_timezone(&spec.timezone)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let p = spec.period_s as i64;
    let start = local_midnight(tz, spec.start_date);
    let end_date = spec.start_date + chrono::Days::new(spec.days as u64);
    let end = local_midnight(tz, end_date);
    let n = ((end - start) / p) as usize;
    let time = |i: usize| start + i as i64 * p;

    let (away, awake) = occupancy_schedule(&mut rng, spec, tz, start, end);
    let occupied: Vec<bool> = (0..n)
        .map(|i| {
            let t = time(i);
            !away.iter().any(|iv| t >= iv.start && t < iv.end)
        })
        .collect();

    let mut grid = EdgeGrid::new(n);
    let mut loads = cycling_loads(
        &mut rng,
        &mut grid,
        LoadSource::Fridge,
        spec.fridge.power_w,
        spec.fridge.on_s,
        spec.fridge.off_s,
        p,
        n,
    );
    let hvac_on = (spec.hvac.cycle_s as f64 * spec.hvac.duty_fraction).round().max(1.0) as i64;
    loads.extend(cycling_loads(
        &mut rng,
        &mut grid,
        LoadSource::Hvac,
        spec.hvac.power_w,
        hvac_on,
        (spec.hvac.cycle_s - hvac_on).max(1),
        p,
        n,
    ));

    // Active stretches: awake and at home.
    let mut active: Vec<Interval> = Vec::new();
    for aw in &awake {
        let mut cuts = vec![*aw];
        for away_iv in &away {
            cuts = cuts
                .into_iter()
                .flat_map(|iv| {
                    let mut parts = Vec::new();
                    if away_iv.end <= iv.start || away_iv.start >= iv.end {
                        parts.push(iv);
                    } else {
                        if away_iv.start > iv.start {
                            parts.push(Interval { start: iv.start, end: away_iv.start });
                        }
                        if away_iv.end < iv.end {
                            parts.push(Interval { start: away_iv.end, end: iv.end });
                        }
                    }
                    parts
                })
                .collect();
        }
        active.extend(cuts);
    }

    let ol = &spec.occupant_load;
    if ol.rate_per_occupied_hour > 0.0 {
        let gap = Exp::new(ol.rate_per_occupied_hour / 3600.0).expect("positive rate");
        for iv in &active {
            let mut t = iv.start as f64 + gap.sample(&mut rng);
            while (t as i64) < iv.end {
                let power = rng.random_range(ol.power_range_w.0..=ol.power_range_w.1).round();
                let dur = rng.random_range(ol.duration_range_s.0..=ol.duration_range_s.1);
                let on_t = t as i64;
                let off_t = (on_t + dur).min(iv.end);
                let a = ((on_t - start) / p) as usize;
                let b = ((off_t - start) / p) as usize;
                if a < n && b > a {
                    let on_index = grid.claim(a);
                    let off_index = grid.claim(b.max(on_index + 1));
                    if on_index < n {
                        loads.push(PlantedLoad {
                            source: LoadSource::Occupant,
                            on_index,
                            off_index,
                            power_w: power,
                        });
                    }
                }
                t += gap.sample(&mut rng);
            }
        }
    }

    let mut fridge = vec![0.0; n];
    let mut hvac = vec![0.0; n];
    let mut other = vec![spec.base_load_w; n];
    for l in &loads {
        let trace = match l.source {
            LoadSource::Fridge => &mut fridge,
            LoadSource::Hvac => &mut hvac,
            LoadSource::Occupant => &mut other,
        };
        for v in &mut trace[l.on_index..l.off_index.min(n)] {
            *v += l.power_w;
        }
    }
    let noise = Normal::new(0.0, spec.noise_sigma_w).map_err(|e| Error::Validation(e.to_string()))?;
    let aggregate: Vec<f64> = (0..n)
        .map(|i| {
            let e = if spec.noise_sigma_w > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            (fridge[i] + hvac[i] + other[i] + e).max(0.0)
        })
        .collect();

    loads.sort_by_key(|l| (l.on_index, l.off_index));
    let mk = |v: Vec<f64>| PowerSeries::new(start, tz, spec.period_s, v);
    let mut appliances = BTreeMap::new();
    appliances.insert("fridge".to_string(), mk(fridge)?);
    appliances.insert("hvac".to_string(), mk(hvac)?);
    appliances.insert("other".to_string(), mk(other)?);
    Ok(SynthHome {
        spec: spec.clone(),
        aggregate: mk(aggregate)?,
        appliances,
        occupied,
        loads,
    })
}

/// Class boundaries the corpus draws numeric characteristics from. Each
/// inner slice lists half-open `[lo, hi)` ranges, one per class.
const AGE_RANGES: [(f64, f64); 2] = [(30.0, 80.0), (2.0, 30.0)];
const AREA_RANGES: [(f64, f64); 2] = [(900.0, 1800.0), (1800.0, 3500.0)];
const INCOME_RANGES: [(f64, f64); 2] = [(40_000.0, 150_000.0), (150_001.0, 300_000.0)];
const FLOOR_RANGES: [(u32, u32); 2] = [(1, 1), (2, 3)];
const ROOM_RANGES: [(u32, u32); 3] = [(3, 6), (7, 8), (9, 12)];
const OCCUPANT_RANGES: [(u32, u32); 2] = [(1, 2), (3, 5)];

/// Balanced class assignment: class `i % k`, shuffled.
fn balanced_classes(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).map(|i| i % k).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        v.swap(i, j);
    }
    v
}

fn derive_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 step
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(index + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Home specs for a corpus whose characteristics drive behaviour: more
/// occupants mean more occupant loads, larger homes get bigger HVAC units,
/// more floors mean more HVAC circuits, older homes run HVAC longer.
pub fn corpus_specs(n: usize, days: u32, seed: u64) -> Result<Vec<HomeSpec>> {
    if n < 2 {
        return Err(Error::Argument("a corpus needs at least 2 homes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let age = balanced_classes(&mut rng, n, 2);
    let area = balanced_classes(&mut rng, n, 2);
    let income = balanced_classes(&mut rng, n, 2);
    let floors = balanced_classes(&mut rng, n, 2);
    let rooms = balanced_classes(&mut rng, n, 3);
    let occupants = balanced_classes(&mut rng, n, 2);

    let mut specs = Vec::with_capacity(n);
    for i in 0..n {
        let mut r = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        let pick_f = |r: &mut ChaCha8Rng, (lo, hi): (f64, f64)| r.random_range(lo..hi).round();
        let pick_u = |r: &mut ChaCha8Rng, (lo, hi): (u32, u32)| r.random_range(lo..=hi);

        let age_years = pick_f(&mut r, AGE_RANGES[age[i]]);
        let area_sqft = pick_f(&mut r, AREA_RANGES[area[i]]);
        let income_usd = pick_f(&mut r, INCOME_RANGES[income[i]]);
        let n_floors = pick_u(&mut r, FLOOR_RANGES[floors[i]]);
        let n_rooms = pick_u(&mut r, ROOM_RANGES[rooms[i]]);
        let n_occupants = pick_u(&mut r, OCCUPANT_RANGES[occupants[i]]);

        let hvac_power = (1200.0 + 1.1 * area_sqft + r.random_range(-150.0..150.0)).round();
        let duty = (0.3 + 0.25 * (age_years / 80.0) + r.random_range(-0.04..0.04)).clamp(0.1, 0.9);
        specs.push(HomeSpec {
            home_id: format!("home_{i:02}"),
            seed: derive_seed(seed ^ 0x5EED, i as u64),
            days,
            occupants: n_occupants,
            area_sqft,
            floors: n_floors,
            rooms: n_rooms,
            income_usd,
            age_years,
            base_load_w: (30.0 + 8.0 * n_rooms as f64 + r.random_range(0.0..20.0)).round(),
            fridge: FridgeSpec {
                power_w: r.random_range(100.0..180.0_f64).round(),
                on_s: r.random_range(900..1500),
                off_s: r.random_range(1800..3000),
            },
            hvac: HvacSpec {
                power_w: hvac_power,
                duty_fraction: duty,
                cycle_s: r.random_range(1800..3600),
                circuits: n_floors,
            },
            occupant_load: OccupantLoadSpec {
                rate_per_occupied_hour: 1.5 + 1.0 * n_occupants as f64,
                power_range_w: (200.0, (800.0 + income_usd / 1000.0).round()),
                duration_range_s: (300, 1800),
            },
            ..HomeSpec::default()
        });
    }
    Ok(specs)
}

/// Generates `n` homes under `out_dir` and writes `manifest.json`.
pub fn gen_corpus(n: usize, days: u32, seed: u64, out_dir: &Path) -> Result<DatasetManifest> {
    let specs = corpus_specs(n, days, seed)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut homes = Vec::with_capacity(n);
    for spec in &specs {
        let home = gen_home(spec)?;
        homes.push(home.write(&out_dir.join(&spec.home_id), out_dir)?);
    }
    let manifest = DatasetManifest {
        homes,
        base_dir: out_dir.to_path_buf(),
    };
    manifest.save(out_dir.join("manifest.json"))?;
    Ok(manifest)
}
