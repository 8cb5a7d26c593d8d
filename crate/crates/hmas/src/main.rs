use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hmas::bag::{self, BagInfo, Recorder, ReplaySpeed};
use hmas::bench::{self, AnalyzeOptions};
use hmas::bus::Bus;
use hmas::csvio;
use hmas::scenario::{self, Scenario};
use hmas_core::bagfmt;
use hmas_core::rig::{ExperimentKind, ExperimentSpec};
use hmas_core::{GeodeticCoord, QosProfile};

#[derive(Parser)]
#[command(name = "hmas", version, about = "Multi-agent bus, bag tools and RTK board bench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Record, replay and inspect bag files.
    #[command(subcommand)]
    Bag(BagCmd),
    /// Run and analyze board experiments.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Agent scenarios.
    #[command(subcommand)]
    Scenario(ScenarioCmd),
}

#[derive(Subcommand)]
enum BagCmd {
    /// Record topics matching the filters while a source drives the bus.
    Record {
        /// Glob over full topic names; repeatable.
        #[arg(long = "filter", required = true)]
        filters: Vec<String>,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
        /// Run this scenario as the traffic source.
        #[arg(long, conflicts_with = "input")]
        scenario: Option<PathBuf>,
        /// Replay this bag as the traffic source.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Republish a bag on a fresh bus.
    Replay {
        file: PathBuf,
        /// Real-time factor.
        #[arg(long, conflicts_with = "fast", default_value_t = 1.0)]
        rate: f64,
        /// Ignore recorded gaps.
        #[arg(long)]
        fast: bool,
    },
    /// Record count, topics and time span.
    Info { file: PathBuf },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Simulate one of the board experiments into a bag.
    Run {
        #[arg(long, value_parser = parse_kind)]
        kind: ExperimentKind,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Zero noise, bias and disturbances.
        #[arg(long)]
        noiseless: bool,
    },
    /// Side distances and verdicts. Exits with status 2 when `within_20cm` fails.
    Analyze(AnalyzeArgs),
    /// Dump the fixes of a bag as a fix CSV log.
    ExportFixes {
        bag: PathBuf,
        #[arg(short = 'o', long = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Bag written by `bench run` or `bag record`.
    #[arg(required_unless_present = "fixes", conflicts_with = "fixes")]
    bag: Option<PathBuf>,
    /// Fix CSV log (stamp_s,rover_id,lat_deg,lon_deg,alt_m,quality).
    #[arg(long)]
    fixes: Option<PathBuf>,
    /// ENU anchor as lat,lon,alt. Defaults to the base stored in the bag.
    #[arg(long, value_parser = parse_base)]
    base: Option<GeodeticCoord>,
    /// Nominal side length in meters. Defaults to the rig stored in the bag, else 0.9.
    #[arg(long)]
    expected_side: Option<f64>,
    /// Rover ids clockwise from the top left, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    rovers: Option<Vec<String>>,
    /// Seconds skipped at the start of the series.
    #[arg(long)]
    convergence: Option<f64>,
    /// Declared disturbance window `start:end`; repeatable.
    #[arg(long = "window", value_parser = parse_window)]
    windows: Vec<(f64, f64)>,
    /// Fix rate in Hz used to pair fixes across rovers.
    #[arg(long)]
    fix_rate: Option<f64>,
    /// Per-stamp side distances.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// `key,value` summary.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Run a JSON scenario and print tracking statistics.
    Run {
        file: PathBuf,
        /// Record all topics to this bag.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Write the final transform tree as DOT.
        #[arg(long)]
        tf_dot: Option<PathBuf>,
    },
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse().map_err(|e: hmas_core::rig::RigError| e.to_string())
}

fn parse_base(s: &str) -> Result<GeodeticCoord, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [lat, lon, alt] = v[..] else {
        return Err("expected lat,lon,alt".into());
    };
    GeodeticCoord::new(lat, lon, alt).map_err(|e| e.to_string())
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected start:end")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a > b {
        return Err(format!("window start {a} after end {b}"));
    }
    Ok((a, b))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn bag_record(filters: &[String], out: &Path, scenario: Option<&Path>, input: Option<&Path>) -> Result<()> {
    let n = match (scenario, input) {
        (Some(s), _) => {
            let scn = Scenario::load(s)?;
            // Fail on an unwritable sink before simulating.
            drop(create(out)?);
            let outcome = scenario::run(&scn, Some(filters))?;
            let bytes = outcome.bag.expect("recording requested");
            std::fs::write(out, &bytes).with_context(|| format!("writing {}", out.display()))?;
            bagfmt::decode(&bytes)?.len()
        }
        (None, Some(input)) => {
            let records = bag::read_bag(input)?;
            let bus = Bus::new();
            let rec = Recorder::to_file(&bus, filters, out)?;
            bag::replay(&records, &bus, ReplaySpeed::Fast)?;
            rec.finish()?
        }
        (None, None) => bail!("the bus lives in-process: give a traffic source with --scenario or --input"),
    };
    println!("recorded {n} records to {}", out.display());
    Ok(())
}

fn bag_replay(file: &Path, rate: f64, fast: bool) -> Result<()> {
    let records = bag::read_bag(file)?;
    let bus = Bus::new();
    let watcher = bus.create_node("hmas", "bag_echo", BTreeMap::new())?;
    let sub = watcher.subscribe_pattern(&["/**"], QosProfile::lossless())?;
    let speed = if fast { ReplaySpeed::Fast } else { ReplaySpeed::Rate(rate) };
    let n = bag::replay(&records, &bus, speed)?;
    let mut per_topic: BTreeMap<String, usize> = BTreeMap::new();
    for m in sub.drain()? {
        *per_topic.entry(m.topic.to_string()).or_default() += 1;
    }
    println!("replayed {n} records");
    for (t, c) in per_topic {
        println!("  {t}  {c}");
    }
    Ok(())
}

fn bench_run(kind: ExperimentKind, seed: u64, out: &Path, noiseless: bool) -> Result<()> {
    let mut spec = ExperimentSpec::preset(kind, seed);
    if noiseless {
        spec = spec.noiseless();
    }
    let bytes = bench::run_experiment(&spec)?;
    std::fs::write(out, &bytes).with_context(|| format!("writing {}", out.display()))?;
    let info = BagInfo::of(&bagfmt::decode(&bytes)?, bytes.len());
    println!("{kind} seed {seed}: {} records, {:.3} s -> {}", info.records, info.duration(), out.display());
    Ok(())
}

fn bench_analyze(a: &AnalyzeArgs) -> Result<bool> {
    let (fixes, meta) = if let Some(path) = &a.fixes {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        (csvio::read_fixes(f)?, None)
    } else {
        let path = a.bag.as_ref().expect("clap requires bag or --fixes");
        let c = bench::read_experiment_bag(&bag::read_bag(path)?)?;
        (c.fixes, c.meta)
    };
    let mut opts = match &meta {
        Some(m) => AnalyzeOptions::from_meta(m),
        None => AnalyzeOptions::new(hmas_core::rig::default_base(), hmas_core::rig::DEFAULT_SIDE_M),
    };
    if let Some(b) = a.base {
        opts.base = b;
    } else if meta.is_none() {
        bail!("--base lat,lon,alt is required when the input carries no experiment description");
    }
    if let Some(s) = a.expected_side {
        opts.expected_side = s;
    }
    if let Some(r) = &a.rovers {
        opts.corners = [r[0].clone(), r[1].clone(), r[2].clone(), r[3].clone()];
    }
    if let Some(c) = a.convergence {
        opts.summary.convergence_s = c;
    }
    opts.summary.windows.extend(a.windows.iter().copied());
    if let Some(r) = a.fix_rate {
        opts.fix_rate_hz = r;
    }
    let analysis = bench::analyze(&fixes, &opts)?;
    if let Some(p) = &a.csv {
        csvio::write_distances(create(p)?, &analysis.distances)?;
    }
    if let Some(p) = &a.report {
        csvio::write_report(create(p)?, &analysis.report)?;
    }
    for s in &analysis.report.sides {
        println!(
            "{:<6} mean {:.4} m  error {:+.4} m  max|err| {:.4} m  peaks {}  within_20cm {}  stable {}",
            s.side.name(),
            s.mean,
            s.mean_error,
            s.max_abs_error,
            s.peaks.len(),
            s.within_20cm,
            s.stable
        );
    }
    println!(
        "within_20cm: {}  stable: {}",
        analysis.report.within_20cm, analysis.report.stable
    );
    Ok(analysis.report.within_20cm)
}

fn export_fixes(bag_path: &Path, out: &Path) -> Result<()> {
    let c = bench::read_experiment_bag(&bag::read_bag(bag_path)?)?;
    let mut all: Vec<_> = c.fixes.into_values().flatten().collect();
    all.sort_by(|a, b| a.stamp.total_cmp(&b.stamp));
    csvio::write_fixes(create(out)?, &all)?;
    println!("{} fixes -> {}", all.len(), out.display());
    Ok(())
}

fn scenario_run(file: &Path, record: Option<&Path>, tf_dot: Option<&Path>) -> Result<()> {
    let scn = Scenario::load(file)?;
    let filters = ["/**".to_string()];
    let outcome = scenario::run(&scn, record.map(|_| &filters[..]))?;
    println!("{outcome}");
    if let (Some(path), Some(bytes)) = (record, &outcome.bag) {
        std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = tf_dot {
        std::fs::write(path, &outcome.tf_dot).with_context(|| format!("writing {}", path.display()))?;
    }
    if !outcome.standoff_respected(&scn) {
        bail!("a follower came closer than its standoff");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Bag(BagCmd::Record {
            filters,
            out,
            scenario,
            input,
        }) => bag_record(&filters, &out, scenario.as_deref(), input.as_deref())?,
        Cmd::Bag(BagCmd::Replay { file, rate, fast }) => bag_replay(&file, rate, fast)?,
        Cmd::Bag(BagCmd::Info { file }) => {
            let bytes = std::fs::read(&file).with_context(|| format!("reading {}", file.display()))?;
            print!("{}", BagInfo::of(&bagfmt::decode(&bytes)?, bytes.len()));
        }
        Cmd::Bench(BenchCmd::Run {
            kind,
            seed,
            out,
            noiseless,
        }) => bench_run(kind, seed, &out, noiseless)?,
        Cmd::Bench(BenchCmd::Analyze(a)) => {
            if !bench_analyze(&a)? {
                return Ok(ExitCode::from(2));
            }
        }
        Cmd::Bench(BenchCmd::ExportFixes { bag, out }) => export_fixes(&bag, &out)?,
        Cmd::Scenario(ScenarioCmd::Run { file, record, tf_dot }) => {
            scenario_run(&file, record.as_deref(), tf_dot.as_deref())?
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
