use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use disagg_core::classify::experiment::{characteristics_experiment, Classifier, ClassifyResults};
use disagg_core::config::{Artifact, RunConfig, DEFAULT_SEED};
use disagg_core::disagg::{disaggregate_home, score_home, DisaggAlgorithm, DisaggRow};
use disagg_core::events::{detect_events, learn_background, pair_events, remove_background};
use disagg_core::features::{extract_home_features, FeatureMatrix, FeatureSet, FeatureVector};
use disagg_core::io::{load_power_csv, write_power_csv, CsvSchema};
use disagg_core::manifest::{DatasetManifest, HomeData};
use disagg_core::occupancy::{occupancy_experiment, Algorithm, OccupancyResults, Protocol};
use disagg_core::series::parse_timezone;
use disagg_core::{report, synth, Error, Result};

#[derive(Parser)]
#[command(name = "disagg", version, about = "Energy disaggregation experiments")]
struct Cli {
    /// Worker threads for per-home work (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Random seed. Falls back to the config file, then DISAGG_SEED, then 7.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration; missing fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with manifest.
    Synth {
        #[arg(long, default_value_t = 20)]
        homes: usize,
        #[arg(long, default_value_t = 14)]
        days: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Detect edges and ON/OFF pairs in one aggregate stream.
    DetectEvents {
        #[command(flatten)]
        input: StreamInput,
        /// Drop pairs matching night-time background loads.
        #[arg(long)]
        remove_background: bool,
        /// Directory receiving events.csv and pairs.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Occupancy detection experiment.
    Occupancy {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "ours,chen")]
        algo: Vec<Algorithm>,
        #[arg(long, default_value = "split-half")]
        protocol: Protocol,
        #[arg(long)]
        out: PathBuf,
    },
    /// Appliance traces for every home, scored against submeters.
    Disaggregate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        algo: DisaggAlgorithm,
        /// Leading fraction of each home used for training and excluded from scoring.
        #[arg(long)]
        train_split: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Feature matrix for one feature source.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "both")]
        source: FeatureSet,
        /// CSV path; a JSON sidecar with provenance is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Household characteristic classification.
    Classify {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "aggregate-only,hvac-only,both")]
        source: Vec<FeatureSet>,
        #[arg(long, default_value = "knn")]
        classifier: Classifier,
        #[arg(long)]
        out: PathBuf,
    },
    /// SVG charts from a result JSON.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = true)]
struct StreamInput {
    /// Power CSV to analyse.
    #[arg(long, conflicts_with_all = ["manifest", "home"])]
    input: Option<PathBuf>,
    /// Timezone of --input.
    #[arg(long, default_value = "UTC", requires = "input")]
    timezone: String,
    #[arg(long, requires = "home")]
    manifest: Option<PathBuf>,
    /// Home id within --manifest.
    #[arg(long, requires = "manifest")]
    home: Option<String>,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    kind: &'a str,
    message: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = ErrorRecord {
                kind: e.kind(),
                message: e.to_string(),
            };
            let json = serde_json::json!({ "error": record });
            let _ = writeln!(std::io::stderr(), "{json}");
            ExitCode::from(1)
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let (mut cfg, file_has_seed) = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let raw: serde_json::Value = serde_json::from_str(&text)?;
            let has_seed = raw.get("seed").is_some();
            let cfg: RunConfig =
                serde_json::from_value(raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            (cfg, has_seed)
        }
        None => (RunConfig::default(), false),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    } else if !file_has_seed {
        cfg.seed = match std::env::var("DISAGG_SEED") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("DISAGG_SEED must be an unsigned integer, got {v:?}")))?,
            Err(_) => DEFAULT_SEED,
        };
    }
    Ok(cfg)
}

fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let m = DatasetManifest::load(path)?;
    m.validate()?;
    Ok(m)
}

fn load_homes(manifest: &DatasetManifest, window_s: u32) -> Result<Vec<HomeData>> {
    let mut homes = manifest
        .homes
        .par_iter()
        .map(|h| HomeData::load(manifest, h, window_s))
        .collect::<Result<Vec<_>>>()?;
    homes.sort_by(|a, b| a.entry.home_id.cmp(&b.entry.home_id));
    Ok(homes)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::Argument("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let mut cfg = resolve_config(&cli)?;

    match cli.command {
        Command::Synth { homes, days, out } => {
            let manifest = synth::gen_corpus(homes, days, cfg.seed, &out)?;
            log::info!("wrote {} homes to {}", manifest.homes.len(), out.display());
        }

        Command::DetectEvents {
            input,
            remove_background: drop_bg,
            out,
        } => {
            let cfg = cfg.resolve();
            let series = match (&input.input, &input.manifest, &input.home) {
                (Some(path), _, _) => load_power_csv(path, &CsvSchema::power(parse_timezone(&input.timezone)?))?.0,
                (None, Some(m), Some(id)) => {
                    let manifest = load_manifest(m)?;
                    let entry = manifest
                        .home(id)
                        .ok_or_else(|| Error::Argument(format!("home {id:?} is not in {}", m.display())))?;
                    HomeData::load(&manifest, entry, cfg.occupancy.occupancy.window_s)?.aggregate
                }
                _ => return Err(Error::Argument("give --input, or --manifest with --home".into())),
            };
            let events = detect_events(&series, &cfg.events.detector)?;
            let mut pairs = pair_events(&events, &cfg.events.pairing);
            if drop_bg {
                let profile = learn_background(&series, &cfg.events.detector, &cfg.events.background)?;
                pairs = remove_background(&pairs, &profile);
            }
            create_dir(&out)?;
            write_rows(
                &out.join("events.csv"),
                &["time", "delta_w"],
                events.iter().map(|e| [e.time.to_string(), e.delta_w.to_string()]),
            )?;
            write_rows(
                &out.join("pairs.csv"),
                &["on_time", "off_time", "magnitude_w"],
                pairs
                    .iter()
                    .map(|p| [p.on_time.to_string(), p.off_time.to_string(), p.magnitude_w.to_string()]),
            )?;
        }

        Command::Occupancy {
            manifest,
            algo,
            protocol,
            out,
        } => {
            let cfg = cfg.resolve();
            let m = load_manifest(&manifest)?;
            let results = occupancy_experiment(&m, protocol, &algo, &cfg.occupancy)?;
            write_rows(
                &out.with_extension("csv"),
                &["home_id", "algorithm", "season", "tp", "tn", "fp", "fn", "accuracy_pct", "energy_proxy", "miss_time"],
                results.rows.iter().map(|r| {
                    let mt = &r.metrics;
                    [
                        r.home_id.clone(),
                        r.algorithm.name().to_string(),
                        r.season.clone().unwrap_or_default(),
                        mt.tp.to_string(),
                        mt.tn.to_string(),
                        mt.fp.to_string(),
                        mt.fn_.to_string(),
                        mt.accuracy_pct.to_string(),
                        mt.energy_proxy.to_string(),
                        mt.miss_time.to_string(),
                    ]
                }),
            )?;
            Artifact::new("occupancy", &cfg, results).write(&out)?;
        }

        Command::Disaggregate {
            manifest,
            algo,
            train_split,
            out,
        } => {
            if let Some(f) = train_split {
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::Argument(format!("--train-split must lie in (0, 1), got {f}")));
                }
                cfg.disagg.train_fraction = f;
            }
            let cfg = cfg.resolve();
            let m = load_manifest(&manifest)?;
            let homes = load_homes(&m, cfg.occupancy.occupancy.window_s)?;
            create_dir(&out)?;
            let per_home = homes
                .par_iter()
                .map(|h| {
                    let result = disaggregate_home(h, algo, &cfg.disagg)?;
                    let dir = out.join(&h.entry.home_id);
                    create_dir(&dir)?;
                    for t in &result.traces {
                        write_power_csv(&t.power, dir.join(format!("{}.csv", t.name)))?;
                    }
                    write_power_csv(&result.residual, dir.join("residual.csv"))?;
                    score_home(h, algo, &result, &cfg.disagg)
                })
                .collect::<Result<Vec<_>>>()?;
            let rows: Vec<DisaggRow> = per_home.into_iter().flatten().collect();
            write_rows(
                &out.join("metrics.csv"),
                &["home_id", "algorithm", "appliance", "error_energy_pct", "rmse_w", "fscore"],
                rows.iter().map(|r| {
                    [
                        r.home_id.clone(),
                        r.algorithm.name().to_string(),
                        r.appliance.clone(),
                        opt(r.metrics.error_energy_pct),
                        r.metrics.rmse_w.to_string(),
                        r.metrics.fscore.to_string(),
                    ]
                }),
            )?;
            Artifact::new("disaggregate", &cfg, rows).write(&out.join("metrics.json"))?;
        }

        Command::Features { manifest, source, out } => {
            let cfg = cfg.resolve();
            let m = load_manifest(&manifest)?;
            let homes = load_homes(&m, cfg.occupancy.occupancy.window_s)?;
            let vectors = homes
                .par_iter()
                .map(|h| extract_home_features(h, source, &cfg.classify.novel, &cfg.classify.disagg))
                .collect::<Result<Vec<FeatureVector>>>()?;
            let ids: Vec<String> = homes.iter().map(|h| h.entry.home_id.clone()).collect();
            FeatureMatrix::from_vectors(ids.clone(), &vectors)?.write_csv(&out)?;
            #[derive(Serialize)]
            struct HomeFeatures {
                home_id: String,
                features: FeatureVector,
            }
            let detail: Vec<HomeFeatures> = ids
                .into_iter()
                .zip(vectors)
                .map(|(home_id, features)| HomeFeatures { home_id, features })
                .collect();
            Artifact::new("features", &cfg, detail).write(&out.with_extension("json"))?;
        }

        Command::Classify {
            manifest,
            source,
            classifier,
            out,
        } => {
            let cfg = cfg.resolve();
            let m = load_manifest(&manifest)?;
            let results = characteristics_experiment(&m, &source, classifier, &cfg.classify)?;
            write_rows(
                &out.with_extension("csv"),
                &["characteristic", "source", "classifier", "homes", "accuracy_pct", "baseline_pct"],
                results.rows.iter().map(|r| {
                    [
                        r.characteristic.name().to_string(),
                        r.source.name().to_string(),
                        r.classifier.name().to_string(),
                        r.homes.to_string(),
                        r.accuracy_pct.to_string(),
                        r.baseline_pct.to_string(),
                    ]
                }),
            )?;
            Artifact::new("classify", &cfg, results).write(&out)?;
        }

        Command::Report { input, out } => {
            let text = fs::read_to_string(&input).map_err(|e| Error::io(&input, e))?;
            let artifact: Artifact<serde_json::Value> = serde_json::from_str(&text)?;
            let charts = match artifact.command.as_str() {
                "occupancy" => report::occupancy_charts(&serde_json::from_value::<OccupancyResults>(artifact.results)?),
                "classify" => report::classify_charts(&serde_json::from_value::<ClassifyResults>(artifact.results)?),
                "disaggregate" => report::disagg_charts(&serde_json::from_value::<Vec<DisaggRow>>(artifact.results)?),
                other => {
                    return Err(Error::Argument(format!(
                        "{}: no charts for results of command {other:?}",
                        input.display()
                    )))
                }
            };
            create_dir(&out)?;
            for (name, svg) in charts {
                let path = out.join(name);
                fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    Ok(())
}
