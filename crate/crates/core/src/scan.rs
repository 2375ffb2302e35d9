//! Single-point diagnosis and parameter-plane scans.
//!
//! Grid points are independent; a bounded rayon pool evaluates them and the
//! rows are emitted in grid order, so output bytes do not depend on the
//! worker count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    classify_phase, iterate, limit_residuals, random_initial_state, IterationConfig, M1Class, Phase,
};
use crate::error::{Error, Result};
use crate::m1::{
    critical_curve, critical_temperature, phase_counts, solve_f_fixed_points, two_cycle_quadratic,
    FixedPointReport, PhaseCounts, TwoCycleReport,
};
use crate::m2::{solve_m2_report, M2Report};
use crate::model::{BoltzmannParams, Couplings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    J1,
    J2,
    Temperature,
    /// Sets `J2 = ratio * J1` after `J1` is fixed.
    J2OverJ1,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::J1 => "j1",
            AxisName::J2 => "j2",
            AxisName::Temperature => "temperature",
            AxisName::J2OverJ1 => "j2_over_j1",
        }
    }
}

impl FromStr for AxisName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "j1" => Ok(AxisName::J1),
            "j2" => Ok(AxisName::J2),
            "temperature" | "t" => Ok(AxisName::Temperature),
            "j2_over_j1" => Ok(AxisName::J2OverJ1),
            other => Err(Error::Config(format!(
                "unknown axis '{other}' (expected j1, j2, temperature or j2_over_j1)"
            ))),
        }
    }
}

/// One scan axis, written `name:min:max:steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct AxisSpec {
    pub name: AxisName,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn new(name: AxisName, min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config(format!(
                "axis {}: steps must be at least 1",
                name.as_str()
            )));
        }
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::Config(format!(
                "axis {}: bounds must be finite",
                name.as_str()
            )));
        }
        if steps > 1 && !(min < max) {
            return Err(Error::Config(format!(
                "axis {}: min ({min}) must be below max ({max})",
                name.as_str()
            )));
        }
        Ok(AxisSpec {
            name,
            min,
            max,
            steps,
        })
    }

    /// Evenly spaced value `k` of `steps`; a single step sits at `min`.
    pub fn value(&self, k: usize) -> f64 {
        if self.steps == 1 {
            self.min
        } else if k + 1 == self.steps {
            self.max
        } else {
            self.min + (self.max - self.min) * k as f64 / (self.steps - 1) as f64
        }
    }
}

impl FromStr for AxisSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [name, min, max, steps] = parts[..] else {
            return Err(Error::Config(format!(
                "axis '{s}' must have the form name:min:max:steps"
            )));
        };
        let num = |field: &str, v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("axis '{s}': bad {field} '{v}'")))
        };
        let steps = steps
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Config(format!("axis '{s}': bad steps '{steps}'")))?;
        AxisSpec::new(
            name.trim().parse()?,
            num("min", min)?,
            num("max", max)?,
            steps,
        )
    }
}

impl TryFrom<String> for AxisSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AxisSpec> for String {
    fn from(a: AxisSpec) -> String {
        a.to_string()
    }
}

impl fmt::Display for AxisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}:{}",
            self.name.as_str(),
            self.min,
            self.max,
            self.steps
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!(
                "unknown format '{other}' (csv or json)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub axes: Vec<AxisSpec>,
    /// Values for the parameters not swept by an axis.
    pub j1: f64,
    pub j2: f64,
    pub temperature: f64,
    pub seeds: Vec<u64>,
    pub iteration: IterationConfig,
    pub format: OutputFormat,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            axes: Vec::new(),
            j1: 1.0,
            j2: 0.0,
            temperature: 1.0,
            seeds: vec![0],
            iteration: IterationConfig::default(),
            format: OutputFormat::Csv,
            workers: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::Config(format!(
                "a scan needs one or two axes, got {}",
                self.axes.len()
            )));
        }
        if self.axes.len() == 2 {
            let (x, y) = (self.axes[0].name, self.axes[1].name);
            let clash = x == y
                || matches!(
                    (x, y),
                    (AxisName::J2, AxisName::J2OverJ1) | (AxisName::J2OverJ1, AxisName::J2)
                );
            if clash {
                return Err(Error::Config(format!(
                    "axes {} and {} set the same parameter",
                    x.as_str(),
                    y.as_str()
                )));
            }
        }
        for a in &self.axes {
            AxisSpec::new(a.name, a.min, a.max, a.steps)?;
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        self.iteration.validate()
    }

    fn shape(&self) -> (usize, usize) {
        (self.axes[0].steps, self.axes.get(1).map_or(1, |a| a.steps))
    }

    /// Couplings at grid point `(i, j)`.
    pub fn couplings_at(&self, i: usize, j: usize) -> Result<Couplings> {
        let (mut j1, mut j2, mut t) = (self.j1, self.j2, self.temperature);
        let mut ratio = None;
        for (axis, k) in self.axes.iter().zip([i, j]) {
            let v = axis.value(k);
            match axis.name {
                AxisName::J1 => j1 = v,
                AxisName::J2 => j2 = v,
                AxisName::Temperature => t = v,
                AxisName::J2OverJ1 => ratio = Some(v),
            }
        }
        if let Some(r) = ratio {
            j2 = r * j1;
        }
        Couplings::new(j1, j2, t)
    }
}

/// One output row: a grid point observed from one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub grid_i: usize,
    pub grid_j: usize,
    pub j1: f64,
    pub j2: f64,
    pub temperature: f64,
    pub a: f64,
    pub b: f64,
    pub phase: String,
    pub cycle_period: Option<usize>,
    pub para_count: u8,
    pub comm2_count: u8,
    pub m1_residual: f64,
    pub m2_residual: f64,
    pub iterations: usize,
    pub seed: u64,
}

pub const CSV_COLUMNS: [&str; 15] = [
    "grid_i",
    "grid_j",
    "j1",
    "j2",
    "temperature",
    "a",
    "b",
    "phase",
    "cycle_period",
    "para_count",
    "comm2_count",
    "m1_residual",
    "m2_residual",
    "iterations",
    "seed",
];

/// Seventeen significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Observation of one trajectory, with the attractor details that do not fit a CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedObservation {
    pub row: ScanResult,
    pub phase: Phase,
    pub m1_class: Option<M1Class>,
    /// `u1/u2` of each attractor state.
    pub attractor_ratios: Vec<f64>,
}

fn observe(
    grid: (usize, usize),
    c: &Couplings,
    p: &BoltzmannParams,
    counts: PhaseCounts,
    seed: u64,
    cfg: &IterationConfig,
) -> Result<SeedObservation> {
    let out = iterate(p, &random_initial_state(seed), cfg)?;
    let label = classify_phase(p, &out, cfg.classify_tol);
    let (m1, m2) = limit_residuals(p, &out);
    let cycle_period = match label.phase {
        Phase::Commensurate(k) => Some(k),
        _ => None,
    };
    Ok(SeedObservation {
        row: ScanResult {
            grid_i: grid.0,
            grid_j: grid.1,
            j1: c.j1,
            j2: c.j2,
            temperature: c.temperature,
            a: p.a(),
            b: p.b(),
            phase: label.phase.name().to_string(),
            cycle_period,
            para_count: counts.paramagnetic,
            comm2_count: counts.commensurate2,
            m1_residual: m1,
            m2_residual: m2,
            iterations: out.iterations_used,
            seed,
        },
        phase: label.phase,
        m1_class: label.m1_class,
        attractor_ratios: out.attractor.iter().map(|s| s.ratio()).collect(),
    })
}

fn evaluate_point(
    grid: (usize, usize),
    c: &Couplings,
    seeds: &[u64],
    cfg: &IterationConfig,
) -> Result<Vec<ScanResult>> {
    let p = c.params()?;
    let counts = phase_counts(c)?;
    seeds
        .iter()
        .map(|&s| observe(grid, c, &p, counts, s, cfg).map(|o| o.row))
        .collect()
}

/// Everything known about one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseReport {
    pub couplings: Couplings,
    pub a: f64,
    pub b: f64,
    pub a_tilde: f64,
    pub b_tilde: f64,
    /// `2|J2| / ln 3`, absent for `J2 = 0`.
    pub critical_temperature: Option<f64>,
    /// True when `J2 > 0` and `T < T_c`, where three paramagnetic phases can coexist.
    pub low_temperature: bool,
    /// True when `b <= sqrt(1/3)`, where 2-cycles on M1 can exist.
    pub two_cycle_active: bool,
    pub phase_counts: PhaseCounts,
    pub fixed_points: FixedPointReport,
    pub two_cycle: TwoCycleReport,
    pub ferromagnetic: M2Report,
    pub observations: Vec<SeedObservation>,
}

pub fn diagnose(c: &Couplings, seeds: &[u64], cfg: &IterationConfig) -> Result<DiagnoseReport> {
    cfg.validate()?;
    let p = c.params()?;
    let counts = phase_counts(c)?;
    let tc = critical_temperature(c.j2);
    let observations = seeds
        .iter()
        .map(|&s| observe((0, 0), c, &p, counts, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagnoseReport {
        couplings: *c,
        a: p.a(),
        b: p.b(),
        a_tilde: p.a_tilde(),
        b_tilde: p.b_tilde(),
        critical_temperature: tc,
        low_temperature: c.j2 > 0.0 && tc.is_some_and(|tc| c.temperature < tc),
        two_cycle_active: p.b() <= (1.0f64 / 3.0).sqrt(),
        phase_counts: counts,
        fixed_points: solve_f_fixed_points(&p),
        two_cycle: two_cycle_quadratic(&p),
        ferromagnetic: solve_m2_report(&p),
        observations,
    })
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Evaluates every grid point and returns the rows in grid order
/// (`grid_i` major, then `grid_j`, then seed order).
pub fn scan(cfg: &ScanConfig) -> Result<Vec<ScanResult>> {
    cfg.validate()?;
    let (ni, nj) = cfg.shape();
    let points: Vec<(usize, usize)> = (0..ni).flat_map(|i| (0..nj).map(move |j| (i, j))).collect();
    let rows: Vec<Vec<ScanResult>> = pool(cfg.workers)?.install(|| {
        points
            .par_iter()
            .map(|&(i, j)| {
                let c = cfg.couplings_at(i, j)?;
                evaluate_point((i, j), &c, &cfg.seeds, &cfg.iteration)
            })
            .collect::<Result<_>>()
    })?;
    Ok(rows.into_iter().flatten().collect())
}

fn opt_field<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[ScanResult]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(format!("CSV encoding failed: {e}"));
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for r in rows {
        w.write_record([
            r.grid_i.to_string(),
            r.grid_j.to_string(),
            format_float(r.j1),
            format_float(r.j2),
            format_float(r.temperature),
            format_float(r.a),
            format_float(r.b),
            r.phase.clone(),
            opt_field(r.cycle_period),
            r.para_count.to_string(),
            r.comm2_count.to_string(),
            format_float(r.m1_residual),
            format_float(r.m2_residual),
            r.iterations.to_string(),
            r.seed.to_string(),
        ])
        .map_err(io)?;
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("CSV encoding failed: {e}")))
}

#[derive(Serialize)]
struct JsonMetadata<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a C,
}

#[derive(Serialize)]
struct JsonDocument<'a, C: Serialize, R: Serialize> {
    metadata: JsonMetadata<'a, C>,
    records: &'a [R],
}

/// `{"metadata": {tool, version, config}, "records": [...]}`.
pub fn records_to_json<C: Serialize, R: Serialize>(config: &C, records: &[R]) -> Result<Vec<u8>> {
    let doc = JsonDocument {
        metadata: JsonMetadata {
            tool: "annni",
            version: env!("CARGO_PKG_VERSION"),
            config,
        },
        records,
    };
    let mut out = serde_json::to_vec_pretty(&doc)
        .map_err(|e| Error::Config(format!("JSON encoding failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Serialized scan output in the configured format.
pub fn render_scan(cfg: &ScanConfig, rows: &[ScanResult]) -> Result<Vec<u8>> {
    match cfg.format {
        OutputFormat::Csv => rows_to_csv(rows),
        OutputFormat::Json => records_to_json(cfg, rows),
    }
}

/// One sample of the critical curves with a round-trip check: the
/// discriminant of the 2-cycle quadratic at each returned `J1`, relative
/// to `B^2`, should vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalCurveRow {
    pub j2: f64,
    pub temperature: f64,
    pub j1_plus: Option<f64>,
    pub j1_minus: Option<f64>,
    pub d_rel_plus: Option<f64>,
    pub d_rel_minus: Option<f64>,
}

pub const CURVE_COLUMNS: [&str; 6] = [
    "j2",
    "temperature",
    "j1_plus",
    "j1_minus",
    "d_rel_plus",
    "d_rel_minus",
];

fn relative_discriminant(j1: f64, j2: f64, t: f64) -> Option<f64> {
    let p = Couplings::new(j1, j2, t).ok()?.params().ok()?;
    let r = two_cycle_quadratic(&p);
    Some(r.d_factored.abs() / (r.b_coef * r.b_coef))
}

/// Critical-curve samples at `steps` evenly spaced `J2` in `[j2_min, j2_max]`.
/// Only samples with `J2 < 0` and `T < T_c(J2)` produce rows.
pub fn tabulate_critical_curves(
    j2_min: f64,
    j2_max: f64,
    steps: usize,
    temperature: f64,
) -> Result<Vec<CriticalCurveRow>> {
    let axis = AxisSpec::new(AxisName::J2, j2_min, j2_max, steps)?;
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let mut rows = Vec::new();
    for k in 0..steps {
        let j2 = axis.value(k);
        let below_tc = critical_temperature(j2).is_some_and(|tc| temperature < tc);
        if !(j2 < 0.0 && below_tc) {
            continue;
        }
        let s = critical_curve(j2, 1.0 / temperature)?;
        rows.push(CriticalCurveRow {
            j2,
            temperature,
            j1_plus: s.j1_plus,
            j1_minus: s.j1_minus,
            d_rel_plus: s
                .j1_plus
                .and_then(|j1| relative_discriminant(j1, j2, temperature)),
            d_rel_minus: s
                .j1_minus
                .and_then(|j1| relative_discriminant(j1, j2, temperature)),
        });
    }
    Ok(rows)
}

pub fn curves_to_csv(rows: &[CriticalCurveRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Config(format!("CSV encoding failed: {e}"));
    w.write_record(CURVE_COLUMNS).map_err(io)?;
    for r in rows {
        w.write_record([
            format_float(r.j2),
            format_float(r.temperature),
            opt_field(r.j1_plus.map(format_float)),
            opt_field(r.j1_minus.map(format_float)),
            opt_field(r.d_rel_plus.map(format_float)),
            opt_field(r.d_rel_minus.map(format_float)),
        ])
        .map_err(io)?;
    }
    w.into_inner()
        .map_err(|e| Error::Config(format!("CSV encoding failed: {e}")))
}
