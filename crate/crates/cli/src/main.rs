//! `annni`: phase diagnosis, parameter scans, critical curves, partition
//! functions and the verification suite for the competing-interaction
//! Ising model on the binary Cayley tree.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 numeric-range error,
//! 3 verification failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use annni_core::partition::{
    brute_force_partition, free_energy_density, partition_recurrence, partition_recurrence_log,
    BRUTE_FORCE_MAX_DEPTH,
};
use annni_core::scan::{
    curves_to_csv, diagnose, format_float, records_to_json, render_scan, rows_to_csv, scan,
    tabulate_critical_curves, AxisSpec, OutputFormat, ScanConfig, ScanResult,
};
use annni_core::verify::{format_outcome, run_all};
use annni_core::{Couplings, Error};
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "annni",
    version,
    about = "Phase structure of the Ising model with competing NN and prolonged NNN interactions on the binary Cayley tree"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full report for one (j1, j2, T) point.
    Diagnose(RunArgs),
    /// Phase labels on a one- or two-axis grid.
    Scan(RunArgs),
    /// Critical curves j1(j2) bounding the 2-cycle region at fixed T.
    Curves(CurveArgs),
    /// Partition function and free energy of an n-generation tree.
    Partition(PartitionArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
struct RunArgs {
    #[arg(long, allow_hyphen_values = true)]
    j1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    j2: Option<f64>,
    #[arg(long, alias = "t")]
    temperature: Option<f64>,
    /// Scan axis `name:min:max:steps` with name in j1, j2, temperature, j2_over_j1.
    #[arg(long = "axis", allow_hyphen_values = true)]
    axes: Vec<AxisSpec>,
    /// Comma-separated RNG seeds for the initial states.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Convergence tolerance between normalized iterates.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    format: Option<OutputFormat>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// JSON file with scan settings; its keys override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[arg(long, allow_hyphen_values = true, default_value_t = -2.0)]
    j2_min: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = -0.1)]
    j2_max: f64,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    #[arg(long, alias = "t", default_value_t = 1.0)]
    temperature: f64,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PartitionArgs {
    #[arg(long, allow_hyphen_values = true)]
    j1: f64,
    #[arg(long, allow_hyphen_values = true)]
    j2: f64,
    #[arg(long, alias = "t")]
    temperature: f64,
    /// Number of generations n >= 1.
    #[arg(long, default_value_t = 10)]
    depth: usize,
    #[arg(long, default_value = "json")]
    format: OutputFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// `csv` prints one PASS/FAIL line per check; `json` emits records.
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Failure of the verification suite, reported with exit code 3.
#[derive(Debug)]
struct VerificationFailed(usize);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} verification check(s) failed", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<VerificationFailed>().is_some() {
        return 3;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Range(_) | Error::MapOverflow { .. } | Error::PhiPole { .. }) => 2,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Diagnose(args) => run_diagnose(&args),
        Command::Scan(args) => run_scan(&args),
        Command::Curves(args) => run_curves(&args),
        Command::Partition(args) => run_partition(&args),
        Command::Verify(args) => run_verify(&args),
    }
}

/// Flags first, then the keys of the `--config` file on top.
fn build_config(args: &RunArgs) -> Result<ScanConfig> {
    let mut cfg = ScanConfig::default();
    if let Some(v) = args.j1 {
        cfg.j1 = v;
    }
    if let Some(v) = args.j2 {
        cfg.j2 = v;
    }
    if let Some(v) = args.temperature {
        cfg.temperature = v;
    }
    if !args.axes.is_empty() {
        cfg.axes = args.axes.clone();
    }
    if let Some(v) = &args.seeds {
        cfg.seeds = v.clone();
    }
    if let Some(v) = args.max_iter {
        cfg.iteration.max_iter = v;
    }
    if let Some(v) = args.tol {
        cfg.iteration.tol = v;
    }
    if let Some(v) = args.format {
        cfg.format = v;
    }
    if let Some(v) = args.workers {
        cfg.workers = v;
    }
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let overrides: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("config {} is not valid JSON", path.display()))?;
        let serde_json::Value::Object(overrides) = overrides else {
            anyhow::bail!(Error::Config("config file must hold a JSON object".into()));
        };
        let mut base = serde_json::to_value(&cfg)?;
        merge(&mut base, overrides);
        cfg = serde_json::from_value(base)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    }
    Ok(cfg)
}

fn merge(base: &mut serde_json::Value, overrides: serde_json::Map<String, serde_json::Value>) {
    for (k, v) in overrides {
        match (base.get_mut(&k), v) {
            (Some(slot @ serde_json::Value::Object(_)), serde_json::Value::Object(inner)) => {
                merge(slot, inner)
            }
            (_, v) => {
                base[k] = v;
            }
        }
    }
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(path) => {
            fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn run_diagnose(args: &RunArgs) -> Result<()> {
    let cfg = build_config(args)?;
    let c = Couplings::new(cfg.j1, cfg.j2, cfg.temperature)?;
    let report = diagnose(&c, &cfg.seeds, &cfg.iteration)?;
    let bytes = match cfg.format {
        OutputFormat::Json => records_to_json(&cfg, std::slice::from_ref(&report))?,
        OutputFormat::Csv => {
            let rows: Vec<ScanResult> = report.observations.iter().map(|o| o.row.clone()).collect();
            rows_to_csv(&rows)?
        }
    };
    emit(args.output.as_deref(), &bytes)
}

fn run_scan(args: &RunArgs) -> Result<()> {
    let cfg = build_config(args)?;
    let rows = scan(&cfg)?;
    emit(args.output.as_deref(), &render_scan(&cfg, &rows)?)
}

fn run_curves(args: &CurveArgs) -> Result<()> {
    let rows = tabulate_critical_curves(args.j2_min, args.j2_max, args.steps, args.temperature)?;
    let bytes = match args.format {
        OutputFormat::Csv => curves_to_csv(&rows)?,
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct Echo {
                j2_min: f64,
                j2_max: f64,
                steps: usize,
                temperature: f64,
            }
            let echo = Echo {
                j2_min: args.j2_min,
                j2_max: args.j2_max,
                steps: args.steps,
                temperature: args.temperature,
            };
            records_to_json(&echo, &rows)?
        }
    };
    emit(args.output.as_deref(), &bytes)
}

#[derive(Debug, Serialize)]
struct PartitionReport {
    j1: f64,
    j2: f64,
    temperature: f64,
    depth: usize,
    vertices: f64,
    /// Absent once `log Z_n` itself leaves the double range.
    log_z: Option<f64>,
    log_z_per_vertex: f64,
    /// `Z_n` when it fits in a double.
    z: Option<f64>,
    /// Exhaustive enumeration for shallow trees.
    z_enumerated: Option<f64>,
    free_energy_density: f64,
}

fn run_partition(args: &PartitionArgs) -> Result<()> {
    let c = Couplings::new(args.j1, args.j2, args.temperature)?;
    let p = c.params()?;
    let n = args.depth;
    let lp = partition_recurrence_log(&p, n)?;
    let z = partition_recurrence(&p, n).ok().map(|(z, _)| z);
    let z_enumerated = if n <= BRUTE_FORCE_MAX_DEPTH {
        Some(brute_force_partition(&c, n)?)
    } else {
        None
    };
    let report = PartitionReport {
        j1: c.j1,
        j2: c.j2,
        temperature: c.temperature,
        depth: n,
        vertices: 2f64.powi(n as i32 + 1) - 1.0,
        log_z: lp.log_z.is_finite().then_some(lp.log_z),
        log_z_per_vertex: lp.log_z_per_vertex,
        z,
        z_enumerated,
        free_energy_density: free_energy_density(&c, n)?,
    };
    let bytes = match args.format {
        OutputFormat::Json => records_to_json(&args.depth, std::slice::from_ref(&report))?,
        OutputFormat::Csv => {
            let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
            format!(
                "j1,j2,temperature,depth,vertices,log_z,log_z_per_vertex,z,z_enumerated,free_energy_density\n{},{},{},{},{},{},{},{},{},{}\n",
                format_float(report.j1),
                format_float(report.j2),
                format_float(report.temperature),
                report.depth,
                format_float(report.vertices),
                opt(report.log_z),
                format_float(report.log_z_per_vertex),
                opt(report.z),
                opt(report.z_enumerated),
                format_float(report.free_energy_density),
            )
            .into_bytes()
        }
    };
    emit(args.output.as_deref(), &bytes)
}

fn run_verify(args: &VerifyArgs) -> Result<()> {
    let outcomes = run_all();
    let bytes = match args.format {
        OutputFormat::Csv => {
            let mut text = String::new();
            for o in &outcomes {
                text.push_str(&format_outcome(o));
                text.push('\n');
            }
            text.into_bytes()
        }
        OutputFormat::Json => records_to_json(&"verify", &outcomes)?,
    };
    emit(args.output.as_deref(), &bytes)?;
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed > 0 {
        return Err(VerificationFailed(failed).into());
    }
    Ok(())
}
