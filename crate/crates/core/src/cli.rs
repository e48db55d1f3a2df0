//! Batch front end: JSON run configuration, sweeps to CSV, plot scripts and
//! the two validation modes.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric or validation
//! failure, 4 I/O error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::ChannelParams;
use crate::decoy::{epsilon_slack, estimate_pair, DecoyConfig, SyntheticInstance};
use crate::error::{Error, Result};
use crate::keyrate::{sweep_with_workers, KeyRatePoint, SweepGrid, SweepOutcome};
use crate::mc::{compare_with_analytic, simulate, AnalyticStats, Comparison, McConfig, McStats};
use crate::series::PhaseConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const CSV_HEADER: [&str; 13] = [
    "distance_km",
    "D",
    "l",
    "mu_opt",
    "key_rate",
    "plob",
    "p",
    "r_p",
    "r_s",
    "q11",
    "E_z",
    "e_phase",
    "F11",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Sweep,
    McValidate,
    DecoyValidate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub csv_path: Option<PathBuf>,
    pub plot_path: Option<PathBuf>,
    /// JSON report of the validation modes; stdout when absent.
    pub report_path: Option<PathBuf>,
}

/// One Monte Carlo check point; channel keys not given fall back to the
/// run's channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McPoint {
    pub mu: f64,
    #[serde(rename = "L_km")]
    pub distance_km: f64,
    pub l: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub p_d: Option<f64>,
}

fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    #[serde(default = "default_rounds")]
    pub n_rounds: u64,
    #[serde(default = "default_mc_points")]
    pub points: Vec<McPoint>,
}

fn default_rounds() -> u64 {
    10_000_000
}

fn default_mc_points() -> Vec<McPoint> {
    vec![
        McPoint { mu: 0.1, distance_km: 50.0, l: 100, seed: 42, p_d: None },
        McPoint { mu: 0.4, distance_km: 10.0, l: 10, seed: 42, p_d: None },
        McPoint { mu: 0.2, distance_km: 150.0, l: 1000, seed: 42, p_d: Some(1e-4) },
    ]
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            n_rounds: default_rounds(),
            points: default_mc_points(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoySection {
    pub instances: usize,
    pub seed: u64,
    #[serde(rename = "D_values")]
    pub phases: Vec<usize>,
    /// Signal intensities are drawn from `(0.05, mu_max)`.
    pub mu_max: f64,
}

impl Default for DecoySection {
    fn default() -> Self {
        Self {
            instances: 100,
            seed: 1,
            phases: vec![4, 8, 12],
            mu_max: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub grid: Option<SweepGrid>,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub decoy: DecoySection,
    #[serde(default)]
    pub workers: Option<usize>,
}

/// Applies `key.path=value` overrides to a JSON document. The value is
/// parsed as JSON when possible and taken as a string otherwise.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut node = &mut *doc;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            if part.is_empty() {
                return Err(Error::Config(format!("empty path segment in `{key}`")));
            }
            let obj = match node {
                Value::Object(map) => map,
                Value::Null => {
                    *node = Value::Object(Default::default());
                    node.as_object_mut().expect("just set")
                }
                _ => return Err(Error::Config(format!("`{key}`: `{part}` is not inside an object"))),
            };
            if i + 1 == parts.len() {
                obj.insert(part.to_string(), value.clone());
                break;
            }
            node = obj.entry(part.to_string()).or_insert(Value::Null);
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config JSON: {e}")))?;
        apply_overrides(&mut doc, overrides)?;
        let cfg: RunConfig =
            serde_json::from_value(doc).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.channel
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, overrides)
    }
}

#[derive(Debug, Serialize)]
struct CsvRow {
    distance_km: f64,
    #[serde(rename = "D")]
    phases: usize,
    l: u64,
    mu_opt: f64,
    key_rate: f64,
    plob: f64,
    p: f64,
    r_p: f64,
    r_s: f64,
    q11: f64,
    #[serde(rename = "E_z")]
    e_z: f64,
    e_phase: f64,
    #[serde(rename = "F11")]
    f11: f64,
}

impl From<&KeyRatePoint> for CsvRow {
    fn from(p: &KeyRatePoint) -> Self {
        let d = &p.diagnostics;
        Self {
            distance_km: p.distance_km,
            phases: p.phases,
            l: p.l,
            mu_opt: p.mu,
            key_rate: p.key_rate,
            plob: p.plob,
            p: d.p,
            r_p: d.r_p,
            r_s: d.r_s,
            q11: d.q11,
            e_z: d.e_z,
            e_phase: d.e_phase,
            f11: d.f11,
        }
    }
}

/// Sweep CSV, ordered as the points are given.
pub fn write_sweep_csv(points: &[KeyRatePoint], writer: impl std::io::Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for p in points {
        w.serialize(CsvRow::from(p))?;
    }
    w.flush()?;
    Ok(())
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// Writes a matplotlib script drawing one log-scale rate curve per `(D, l)`
/// series in `csv_path` plus the dashed PLOB bound. The script reads the CSV
/// at run time.
pub fn emit_plot_script(csv_path: &Path, plot_path: &Path) -> Result<usize> {
    let mut reader = csv::Reader::from_path(csv_path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{}: missing column {name}", csv_path.display())))
    };
    let (di, li) = (col("D")?, col("l")?);
    let mut series: Vec<(String, String)> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let key = (rec[di].to_string(), rec[li].to_string());
        if !series.contains(&key) {
            series.push(key);
        }
    }

    let mut s = String::new();
    let _ = writeln!(s, "import csv");
    let _ = writeln!(s, "import matplotlib");
    let _ = writeln!(s, "matplotlib.use(\"Agg\")");
    let _ = writeln!(s, "import matplotlib.pyplot as plt");
    let _ = writeln!(s);
    let _ = writeln!(s, "CSV = {:?}", csv_path.display().to_string());
    let _ = writeln!(s, "OUT = CSV.rsplit(\".\", 1)[0] + \".png\"");
    let _ = writeln!(s, "SERIES = [");
    for (d, l) in &series {
        let _ = writeln!(s, "    ({d}, {l}),");
    }
    let _ = writeln!(s, "]");
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        r#"rows = list(csv.DictReader(open(CSV)))

fig, ax = plt.subplots(figsize=(6, 4.5))
for d, l in SERIES:
    pts = [r for r in rows if int(r["D"]) == d and int(r["l"]) == l]
    x = [float(r["distance_km"]) for r in pts]
    y = [float(r["key_rate"]) for r in pts]
    name = "continuous" if d == 0 else "D=%d" % d
    ax.semilogy(x, y, label="%s, l=%g" % (name, l))

if SERIES:
    seen = {{}}
    for r in rows:
        seen[float(r["distance_km"])] = float(r["plob"])
    x = sorted(seen)
    ax.semilogy(x, [seen[v] for v in x], "k--", label="PLOB")

ax.set_yscale("log")
ax.set_xlabel("distance (km)")
ax.set_ylabel("key rate (bits per round)")
if SERIES:
    ax.legend()
fig.tight_layout()
fig.savefig(OUT, dpi=150)
print(OUT)"#
    );
    create_parent(plot_path)?;
    std::fs::write(plot_path, s)?;
    Ok(series.len())
}

/// Outcome of one Monte Carlo check point.
#[derive(Debug, Serialize)]
pub struct McReportEntry {
    pub config: McConfig,
    pub stats: McStats,
    pub analytic: AnalyticStats,
    pub comparison: Comparison,
}

#[derive(Debug, Serialize)]
pub struct McReport {
    pub entries: Vec<McReportEntry>,
    pub all_within: bool,
}

pub fn run_mc_validate(cfg: &RunConfig) -> Result<McReport> {
    let configs: Vec<McConfig> = cfg
        .mc
        .points
        .iter()
        .map(|p| McConfig {
            n_rounds: cfg.mc.n_rounds,
            seed: p.seed,
            l: p.l,
            mu: p.mu,
            ch: ChannelParams {
                dark_count: p.p_d.unwrap_or(cfg.channel.dark_count),
                ..cfg.channel
            }
            .at_distance(p.distance_km),
        })
        .collect();
    let entries = configs
        .into_par_iter()
        .map(|c| {
            let stats = simulate(&c)?;
            let analytic = AnalyticStats::for_config(&c);
            let comparison = compare_with_analytic(&stats, &analytic);
            Ok(McReportEntry { config: c, stats, analytic, comparison })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_within = entries.iter().all(|e| e.comparison.all_within());
    Ok(McReport { entries, all_within })
}

#[derive(Debug, Serialize)]
pub struct DecoyCase {
    pub phases: usize,
    pub mu: f64,
    pub nu: f64,
    pub eps: f64,
    pub y_true: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub ey_true: f64,
    pub ey_lo: f64,
    pub ey_hi: f64,
    pub contained: bool,
}

#[derive(Debug, Serialize)]
pub struct DecoyReport {
    pub instances: usize,
    pub contained: usize,
    pub cases: Vec<DecoyCase>,
}

/// Forward-generates random instances and checks that the `(1, 1)`
/// brackets contain the generating yields.
pub fn run_decoy_validate(cfg: &RunConfig) -> Result<DecoyReport> {
    let sec = &cfg.decoy;
    if sec.phases.is_empty() || !(sec.mu_max > 0.05 && sec.mu_max <= 1.0) {
        return Err(Error::Config("decoy section needs D_values and mu_max in (0.05, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sec.seed);
    let mut jobs = Vec::with_capacity(sec.instances);
    for i in 0..sec.instances {
        let d = sec.phases[i % sec.phases.len()];
        let mu = rng.random_range(0.05..sec.mu_max);
        let nu = mu * rng.random_range(0.05..0.9);
        jobs.push((d, mu, nu, rng.random::<u64>()));
    }
    let cases = jobs
        .into_par_iter()
        .map(|(d, mu, nu, seed)| {
            let cfg = PhaseConfig::new(d).map_err(|e| Error::Config(e.to_string()))?;
            let dc = DecoyConfig::uniform(mu, nu, cfg)?;
            let eps = epsilon_slack(&dc);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = SyntheticInstance::generate(dc, &dc.summed_intensities(), eps, &mut rng)?;
            let b = estimate_pair(&inst.gains, &dc, 1, 1, eps)?;
            let (y, ey) = inst.truth(1, 1);
            Ok(DecoyCase {
                phases: d,
                mu,
                nu,
                eps,
                y_true: y,
                y_lo: b.y.lo,
                y_hi: b.y.hi,
                ey_true: ey,
                ey_lo: b.ey.lo,
                ey_hi: b.ey.hi,
                contained: b.y.contains(y, 1e-9) && b.ey.contains(ey, 1e-9),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DecoyReport {
        instances: cases.len(),
        contained: cases.iter().filter(|c| c.contained).count(),
        cases,
    })
}

fn write_report<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match path {
        Some(p) => {
            create_parent(p)?;
            std::fs::write(p, text + "\n")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn sweep_failure_summary(out: &SweepOutcome) -> String {
    let mut s = format!("{} sweep point(s) failed:", out.failures.len());
    for f in &out.failures {
        let _ = write!(s, "\n  D={} l={} L={} km: {}", f.phases, f.l, f.distance_km, f.error);
    }
    s
}

/// Runs one configuration and returns `(exit code, diagnostic)`.
pub fn run_config(cfg: &RunConfig, workers: Option<usize>) -> Result<(i32, Option<String>)> {
    let workers = workers.or(cfg.workers).unwrap_or_else(|| {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    });
    match cfg.mode {
        Mode::Sweep => {
            let grid = cfg
                .grid
                .as_ref()
                .ok_or_else(|| Error::Config("sweep mode needs a `grid` section".into()))?;
            if grid.is_empty() {
                return Err(Error::Config("sweep grid is empty".into()));
            }
            grid.validate().map_err(|e| match e {
                Error::Config(_) => e,
                other => Error::Config(other.to_string()),
            })?;
            let out = sweep_with_workers(grid, &cfg.channel, workers)?;
            match &cfg.outputs.csv_path {
                Some(path) => {
                    create_parent(path)?;
                    write_sweep_csv(&out.points, std::fs::File::create(path)?)?;
                    if let Some(plot) = &cfg.outputs.plot_path {
                        emit_plot_script(path, plot)?;
                    }
                }
                None => write_sweep_csv(&out.points, std::io::stdout().lock())?,
            }
            if out.failures.is_empty() {
                Ok((EXIT_OK, None))
            } else {
                Ok((EXIT_NUMERIC, Some(sweep_failure_summary(&out))))
            }
        }
        Mode::McValidate => {
            let pool = pool(workers)?;
            let report = pool.install(|| run_mc_validate(cfg))?;
            write_report(&report, cfg.outputs.report_path.as_deref())?;
            if report.all_within {
                Ok((EXIT_OK, None))
            } else {
                Ok((EXIT_NUMERIC, Some("Monte Carlo disagrees with the analytic model (|z| > 3)".into())))
            }
        }
        Mode::DecoyValidate => {
            let pool = pool(workers)?;
            let report = pool.install(|| run_decoy_validate(cfg))?;
            write_report(&report, cfg.outputs.report_path.as_deref())?;
            if report.contained == report.instances {
                Ok((EXIT_OK, None))
            } else {
                Ok((
                    EXIT_NUMERIC,
                    Some(format!(
                        "{} of {} brackets miss the generating yields",
                        report.instances - report.contained,
                        report.instances
                    )),
                ))
            }
        }
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Json(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => EXIT_IO,
        Error::Stage { source, .. } => exit_code(source).max(EXIT_NUMERIC),
        _ => EXIT_NUMERIC,
    }
}

#[derive(Debug, Parser)]
#[command(name = "dprmp", version, about = "Key rates of discrete-phase-randomized mode-pairing QKD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a JSON configuration.
    Run {
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Override a config key, e.g. `--set channel.p_d=1e-7`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Write a plotting script for an existing sweep CSV.
    Plot { csv: PathBuf, script: PathBuf },
}

/// Parses `args` (program name first), runs, prints diagnostics to stderr
/// and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Run { config, mode, set, workers } => {
            RunConfig::load(&config, &set).and_then(|mut cfg| {
                if let Some(m) = mode {
                    cfg.mode = m;
                }
                run_config(&cfg, workers)
            })
        }
        Command::Plot { csv, script } => emit_plot_script(&csv, &script).map(|_| (EXIT_OK, None)),
    };
    match result {
        Ok((code, msg)) => {
            if let Some(m) = msg {
                eprintln!("dprmp: {m}");
            }
            code
        }
        Err(e) => {
            eprintln!("dprmp: {e}");
            exit_code(&e)
        }
    }
}
