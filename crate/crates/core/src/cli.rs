//! Configuration, command dispatch and report files for `sdde-chart`.
//!
//! A run reads an optional TOML file, applies `--set key=value` overrides
//! (dotted keys, TOML values), validates, executes one command and writes
//! `<out>/<command>.json` plus CSV tables. Exit codes: 0 all checks passed,
//! 1 a check failed or the numerics raised an error, 2 invalid configuration,
//! 3 I/O error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chart::{ChartAtlas, InverseChart};
use crate::ddeint::{integrate, StepConfig};
use crate::delay::{in_ub, residual, DelayFunctional, IntegralDelay, ScalarField};
use crate::funcspace::{GridSpec, IntervalFunction};
use crate::manifold::{find_point, scenario_prop4, scenario_prop5, scenario_prop6, LinearFunctional, SubspaceZ};
use crate::sampling::{instance_rng, random_function, FunctionLaw};
use crate::verify::{self, Check, Counts, IntegratorRuns, Setup, SuiteReport, Tolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG_INVALID: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sdde-chart", version, about = "Charts for solution manifolds of state-dependent delay equations")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set delay.delta.rate=2`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// RNG seed, recorded in every report.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Properties of the transversal family on random (v, r).
    VerifyTransversal,
    /// Chart image of a function in U_b.
    Chart {
        /// IntervalFunction JSON; a seeded random function if absent.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Invert the chart at a point of X_0.
    InvertChart {
        /// IntervalFunction JSON; the chart image of a seeded random function if absent.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Starting delay of the fixed-point iteration.
        #[arg(long, allow_hyphen_values = true)]
        r0: Option<f64>,
    },
    /// Forward chart followed by its inverse.
    Roundtrip {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// A point of the solution manifold by bisection.
    FindPoint,
    /// Method-of-steps integration.
    Integrate,
    /// Counterexample scenarios.
    Scenario {
        #[arg(value_enum)]
        which: ScenarioKind,
    },
    /// All verification suites.
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioKind {
    Prop4,
    Prop5,
    Prop6,
}

impl Command {
    fn name(&self) -> String {
        match self {
            Command::VerifyTransversal => "verify-transversal".into(),
            Command::Chart { .. } => "chart".into(),
            Command::InvertChart { .. } => "invert-chart".into(),
            Command::Roundtrip { .. } => "roundtrip".into(),
            Command::FindPoint => "find-point".into(),
            Command::Integrate => "integrate".into(),
            Command::Scenario { which } => format!(
                "scenario-{}",
                match which {
                    ScenarioKind::Prop4 => "prop4",
                    ScenarioKind::Prop5 => "prop5",
                    ScenarioKind::Prop6 => "prop6",
                }
            ),
            Command::Selftest => "selftest".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub nodes: usize,
    pub samples: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            nodes: g.nodes,
            samples: g.samples,
        }
    }
}

/// `preset ∈ {sin, square, identity, zero, constant, polynomial}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FieldConfig {
    pub preset: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            preset: "sin".into(),
            value: None,
            coefficients: None,
        }
    }
}

/// `kind ∈ {logistic, scaled-logistic}`; the latter needs `rate` and `shift`.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DeltaConfig {
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
}

/// `kind = "log-ramp"` with `scale`.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct VConfig {
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

/// `preset = "reference"` or `"integral"` (then `delta` and `v` are required).
/// `weight` points to an IntervalFunction JSON used inside the integral.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DelayConfig {
    pub preset: String,
    pub subdivisions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<VConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<PathBuf>,
}

impl Default for DelayConfig {
    fn default() -> Self {
        Self {
            preset: "reference".into(),
            subdivisions: 1,
            delta: None,
            v: None,
            weight: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub nmax: usize,
    /// Split points `s` of the prop5 table.
    pub s_values: Vec<f64>,
    /// Field used by prop5 (must be injective).
    pub prop5_f: FieldConfig,
    /// Points `t` whose evaluation functionals define `Z` for prop6; `[-h]` if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_points: Option<Vec<f64>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            nmax: 10,
            s_values: vec![-0.9, -0.7, -0.5, -0.3, -0.1],
            prop5_f: FieldConfig {
                preset: "identity".into(),
                ..FieldConfig::default()
            },
            z_points: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ChartConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
}

/// `initial ∈ {find-point, affine, file}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct IntegrateConfig {
    pub t_end: f64,
    pub dt: f64,
    pub corrections: usize,
    pub initial: String,
    pub y0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for IntegrateConfig {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt: 1e-2,
            corrections: crate::ddeint::DEFAULT_CORRECTIONS,
            initial: "affine".into(),
            y0: 1.0,
            file: None,
        }
    }
}

/// Full run configuration; every field has a default.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub h: f64,
    pub b: f64,
    pub out: PathBuf,
    pub grid: GridConfig,
    pub f: FieldConfig,
    pub delay: DelayConfig,
    pub tolerances: Tolerances,
    pub counts: Counts,
    pub integrator: IntegratorRuns,
    pub scenario: ScenarioConfig,
    pub chart: ChartConfig,
    pub integrate: IntegrateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 20240601,
            h: 1.0,
            b: 1.0,
            out: PathBuf::from("out"),
            grid: GridConfig::default(),
            f: FieldConfig::default(),
            delay: DelayConfig::default(),
            tolerances: Tolerances::default(),
            counts: Counts::default(),
            integrator: IntegratorRuns::default(),
            scenario: ScenarioConfig::default(),
            chart: ChartConfig::default(),
            integrate: IntegrateConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Numeric(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG_INVALID,
            CliError::Io { .. } => EXIT_IO,
            CliError::Numeric(_) => EXIT_CHECK_FAILED,
        }
    }

    fn config(path: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parse `text` as TOML, apply `key=value` overrides and deserialize.
pub fn load_config(text: &str, overrides: &[String]) -> CliResult<RunConfig> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::config("(file)", e.message().to_string()))?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::config(item, "expected KEY=VALUE"))?;
        let key = key.trim();
        let value = parse_override(raw.trim());
        set_path(&mut table, key, value)?;
    }
    let config: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::config("(schema)", e.message().to_string()))?;
    config.validate()?;
    Ok(config)
}

fn parse_override(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> CliResult<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(key, "empty key segment"));
    }
    let mut cur = table;
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            cur.insert((*part).into(), value);
            return Ok(());
        }
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::config(&parts[..=i].join("."), "not a table"))?;
    }
    Ok(())
}

fn positive(path: &str, x: f64) -> CliResult<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(path, format!("must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        positive("h", self.h)?;
        positive("b", self.b)?;
        if self.grid.nodes < 8 {
            return Err(CliError::config("grid.nodes", "must be at least 8"));
        }
        if self.grid.samples < self.grid.nodes {
            return Err(CliError::config("grid.samples", "must be at least grid.nodes"));
        }
        let tol = serde_json::to_value(self.tolerances).expect("tolerances serialize");
        for (k, v) in tol.as_object().expect("object") {
            positive(&format!("tolerances.{k}"), v.as_f64().unwrap_or(f64::NAN))?;
        }
        self.field("f", &self.f)?;
        self.field("scenario.prop5_f", &self.scenario.prop5_f)?;
        self.delay_parts()?;
        positive("integrator.t_end", self.integrator.t_end)?;
        positive("integrator.dt", self.integrator.dt)?;
        positive("integrate.t_end", self.integrate.t_end)?;
        positive("integrate.dt", self.integrate.dt)?;
        match self.integrate.initial.as_str() {
            "find-point" | "affine" => {}
            "file" if self.integrate.file.is_some() => {}
            "file" => return Err(CliError::config("integrate.file", "required when initial = \"file\"")),
            other => {
                return Err(CliError::config(
                    "integrate.initial",
                    format!("unknown value `{other}` (expected find-point, affine or file)"),
                ))
            }
        }
        for (i, &s) in self.scenario.s_values.iter().enumerate() {
            if !(s > -self.h && s < 0.0) {
                return Err(CliError::config(&format!("scenario.s_values[{i}]"), "must lie in (-h, 0)"));
            }
        }
        for (i, &t) in self.scenario.z_points.iter().flatten().enumerate() {
            if !(-self.h..=0.0).contains(&t) {
                return Err(CliError::config(&format!("scenario.z_points[{i}]"), "must lie in [-h, 0]"));
            }
        }
        if let Some(r0) = self.chart.r0 {
            if !(r0 > -self.h && r0 < 0.0) {
                return Err(CliError::config("chart.r0", "must lie in (-h, 0)"));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            nodes: self.grid.nodes,
            samples: self.grid.samples,
        }
    }

    fn field(&self, path: &str, fc: &FieldConfig) -> CliResult<ScalarField> {
        Ok(match fc.preset.as_str() {
            "sin" => ScalarField::sin(),
            "square" => ScalarField::square(),
            "identity" => ScalarField::identity(),
            "zero" => ScalarField::zero(),
            "constant" => ScalarField::constant(
                fc.value
                    .ok_or_else(|| CliError::config(&format!("{path}.value"), "required for preset constant"))?,
            ),
            "polynomial" => ScalarField::polynomial(fc.coefficients.clone().ok_or_else(|| {
                CliError::config(&format!("{path}.coefficients"), "required for preset polynomial")
            })?),
            other => {
                return Err(CliError::config(
                    &format!("{path}.preset"),
                    format!("unknown preset `{other}`"),
                ))
            }
        })
    }

    /// `δ`, `v` and their derivative bounds.
    fn delay_parts(&self) -> CliResult<(ScalarField, ScalarField, f64, f64)> {
        let h = self.h;
        match self.delay.preset.as_str() {
            "reference" => Ok((ScalarField::logistic_delay(h), ScalarField::log_ramp(1.0), h / 4.0, 1.0)),
            "integral" => {
                let dc = self
                    .delay
                    .delta
                    .as_ref()
                    .ok_or_else(|| CliError::config("delay.delta", "required for preset integral"))?;
                let kind = dc
                    .kind
                    .as_deref()
                    .ok_or_else(|| CliError::config("delay.delta.kind", "missing"))?;
                let (delta, dsup) = match kind {
                    "logistic" => (ScalarField::logistic_delay(h), h / 4.0),
                    "scaled-logistic" => {
                        let rate = dc
                            .rate
                            .ok_or_else(|| CliError::config("delay.delta.rate", "missing"))?;
                        let shift = dc
                            .shift
                            .ok_or_else(|| CliError::config("delay.delta.shift", "missing"))?;
                        positive("delay.delta.rate", rate)?;
                        if !shift.is_finite() {
                            return Err(CliError::config("delay.delta.shift", "must be finite"));
                        }
                        (ScalarField::scaled_logistic_delay(h, rate, shift), h * rate / 4.0)
                    }
                    other => {
                        return Err(CliError::config(
                            "delay.delta.kind",
                            format!("unknown kind `{other}`"),
                        ))
                    }
                };
                let vc = self
                    .delay
                    .v
                    .as_ref()
                    .ok_or_else(|| CliError::config("delay.v", "required for preset integral"))?;
                match vc.kind.as_deref() {
                    Some("log-ramp") => {}
                    Some(other) => {
                        return Err(CliError::config("delay.v.kind", format!("unknown kind `{other}`")))
                    }
                    None => return Err(CliError::config("delay.v.kind", "missing")),
                }
                let scale = vc.scale.ok_or_else(|| CliError::config("delay.v.scale", "missing"))?;
                positive("delay.v.scale", scale)?;
                Ok((delta, ScalarField::log_ramp(scale), dsup, scale))
            }
            other => Err(CliError::config("delay.preset", format!("unknown preset `{other}`"))),
        }
    }

    /// Build the integral delay, reading the optional weight file.
    pub fn delay(&self) -> CliResult<IntegralDelay> {
        let (delta, v, dsup, vsup) = self.delay_parts()?;
        let mut d = IntegralDelay::new(self.h, delta, v, dsup, vsup)
            .map_err(|e| CliError::config("delay", e.to_string()))?
            .with_subdivisions(self.delay.subdivisions);
        if let Some(path) = &self.delay.weight {
            let w = read_function(path)?;
            d = d.with_weight(w).map_err(|e| CliError::config("delay.weight", e.to_string()))?;
        }
        Ok(d)
    }

    pub fn setup(&self) -> CliResult<Setup> {
        Ok(Setup {
            f: self.field("f", &self.f)?,
            delay: Arc::new(self.delay()?),
            b: self.b,
            grid: self.grid(),
            seed: self.seed,
        })
    }
}

/// Read an IntervalFunction from JSON.
pub fn read_function(path: &Path) -> CliResult<IntervalFunction> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(&path.display().to_string(), e.to_string()))
}

/// JSON report written for every command.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub passed: bool,
    pub config: RunConfig,
    pub metrics: Value,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<SuiteReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Files produced by a command, relative to the output directory.
struct Artifacts {
    dir: PathBuf,
    written: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        let mut file = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        file.write_all(bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(name.into());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    fn csv_rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row).map_err(|e| CliError::io(&self.dir.join(name), e))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io(&self.dir.join(name), e))?;
        self.write_bytes(name, &bytes)
    }

    fn function(&mut self, stem: &str, phi: &IntervalFunction) -> CliResult<()> {
        self.json(&format!("{stem}.json"), phi)?;
        let mut buf = Vec::new();
        phi.write_csv(&mut buf)
            .map_err(|e| CliError::io(&self.dir.join(stem), e))?;
        self.write_bytes(&format!("{stem}.csv"), &buf)
    }
}

struct Outcome {
    metrics: Value,
    checks: Vec<Check>,
    suites: Vec<SuiteReport>,
}

impl Outcome {
    fn new(metrics: Value, checks: Vec<Check>) -> Self {
        Self {
            metrics,
            checks,
            suites: Vec::new(),
        }
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG_INVALID } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(report) => {
            for c in report.checks.iter().chain(report.suites.iter().flat_map(|s| s.checks.iter())) {
                eprintln!(
                    "{} {} = {:e} ({} {:e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.relation,
                    c.threshold
                );
            }
            if let Some(e) = &report.error {
                eprintln!("error: {e}");
            }
            if report.passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Resolve the configuration for `cli`.
pub fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let text = match &cli.config {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        None => String::new(),
    };
    let mut config = load_config(&text, &cli.set)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    Ok(config)
}

/// Execute the command and write its artifacts. Numerical errors are
/// recorded in the report; configuration and I/O errors are returned.
pub fn run(cli: &Cli) -> CliResult<Report> {
    let config = resolve_config(cli)?;
    let name = cli.command.name();
    let mut art = Artifacts::new(&config.out)?;
    let result = execute(&cli.command, &config, &mut art);
    let (outcome, error) = match result {
        Ok(o) => (o, None),
        Err(CliError::Numeric(e)) => (Outcome::new(json!({}), Vec::new()), Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let passed = error.is_none()
        && outcome.checks.iter().all(|c| c.passed)
        && outcome.suites.iter().all(|s| s.passed);
    let report = Report {
        command: name.clone(),
        seed: config.seed,
        passed,
        config,
        metrics: outcome.metrics,
        checks: outcome.checks,
        suites: outcome.suites,
        error,
    };
    art.json(&format!("{name}.json"), &report)?;
    Ok(report)
}

fn random_phi(config: &RunConfig, index: u64) -> CliResult<IntervalFunction> {
    let mut rng = instance_rng(config.seed, index);
    Ok(random_function(
        &mut rng,
        config.h,
        config.grid(),
        FunctionLaw::with_slope(0.95 * config.b),
    )?)
}

fn input_or_random(config: &RunConfig, input: &Option<PathBuf>) -> CliResult<IntervalFunction> {
    match input.as_ref().or(config.chart.input.as_ref()) {
        Some(path) => read_function(path),
        None => random_phi(config, 0),
    }
}

fn inverse_checks(inv: &InverseChart, atlas: &ChartAtlas, tol: &Tolerances) -> CliResult<Vec<Check>> {
    let ratio = inv.step_ratios().into_iter().fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("|d(phi) - r| at exit", inv.fixed_point_residual, tol.fixed_point),
        Check::at_most(
            "max step ratio",
            ratio,
            0.5 * (1.0 + tol.contraction_slack),
        ),
        Check::equals("phi in U_b", in_ub(atlas.delay(), &inv.phi, atlas.b())? as u8 as f64, 1.0),
    ])
}

fn execute(cmd: &Command, config: &RunConfig, art: &mut Artifacts) -> CliResult<Outcome> {
    let setup = config.setup()?;
    let tol = &config.tolerances;
    match cmd {
        Command::VerifyTransversal => {
            let atlas = setup.atlas()?;
            let (suite, rows) = verify::transversal_suite(&setup, &atlas, &config.counts, tol)?;
            art.csv_rows("transversal.csv", &rows)?;
            Ok(Outcome::new(json!({ "instances": rows.len(), "c": atlas.c() }), suite.checks))
        }
        Command::Chart { input } => {
            let atlas = setup.atlas()?;
            let phi = input_or_random(config, input)?;
            let psi = atlas.chart_forward(&phi)?;
            let d_phi = atlas.delay().eval(&phi)?;
            // the same map on a grid of twice the resolution
            let fine = GridSpec {
                nodes: 2 * config.grid.nodes,
                samples: 2 * config.grid.samples,
            };
            let fine_atlas = ChartAtlas::new(setup.f.clone(), setup.delay.clone(), setup.b, fine)?;
            let fine_psi = fine_atlas.chart_forward(&phi.clone().with_samples(fine.samples))?;
            art.function("phi", &phi)?;
            art.function("psi", &psi)?;
            let res = residual(&setup.f, atlas.delay(), &phi)?;
            let checks = vec![
                Check::at_most("|psi'(0) - residual(phi)|", (psi.deriv(0.0) - res).abs(), tol.x0),
                Check::at_most(
                    "|psi - psi at doubled resolution|_C1",
                    psi.distance_c1(&fine_psi)?,
                    tol.roundtrip_c1,
                ),
            ];
            Ok(Outcome::new(
                json!({
                    "d_phi": d_phi,
                    "c": atlas.c(),
                    "residual_phi": res,
                    "max_abs_deriv_phi": phi.max_abs_deriv_on(-config.h, d_phi),
                }),
                checks,
            ))
        }
        Command::InvertChart { input, r0 } => {
            let atlas = setup.atlas()?;
            let psi = match input.as_ref().or(config.chart.input.as_ref()) {
                Some(path) => read_function(path)?,
                None => atlas.chart_forward(&random_phi(config, 0)?)?,
            };
            let inv = atlas.chart_inverse(&psi, r0.or(config.chart.r0))?;
            art.function("phi", &inv.phi)?;
            art.csv_rows("convergence.csv", &inv.log)?;
            let checks = inverse_checks(&inv, &atlas, tol)?;
            Ok(Outcome::new(
                json!({
                    "r": inv.r,
                    "iterations": inv.log.len().saturating_sub(1),
                    "residual_phi": residual(&setup.f, atlas.delay(), &inv.phi)?,
                }),
                checks,
            ))
        }
        Command::Roundtrip { input } => {
            let atlas = setup.atlas()?;
            let phi = input_or_random(config, input)?;
            let r = atlas.delay().eval(&phi)?;
            let psi = atlas.chart_forward(&phi)?;
            let inv = atlas.chart_inverse(&psi, config.chart.r0)?;
            art.function("psi", &psi)?;
            art.csv_rows("convergence.csv", &inv.log)?;
            let mut checks = vec![
                Check::at_most("C1 error of recovered phi", inv.phi.distance_c1(&phi)?, tol.roundtrip_c1),
                Check::at_most("|r - d(phi)|", (inv.r - r).abs(), tol.roundtrip_r),
            ];
            checks.extend(inverse_checks(&inv, &atlas, tol)?);
            Ok(Outcome::new(
                json!({ "d_phi": r, "r": inv.r, "iterations": inv.log.len().saturating_sub(1) }),
                checks,
            ))
        }
        Command::FindPoint => {
            let d = setup.delay.as_ref();
            let p = find_point(&setup.f, d, config.grid(), tol.find_point)?;
            art.function("phi", &p.phi)?;
            art.csv_rows("bisection.csv", &p.log)?;
            let halving = p
                .log
                .iter()
                .filter(|r| r.hi > r.lo)
                .map(|r| ((r.hi - r.lo) - 0.5f64.powi(r.k as i32)).abs())
                .fold(0.0, f64::max);
            let checks = vec![
                Check::at_most("|residual(phi)|", p.residual.abs(), tol.find_point),
                Check::at_most("|phi|_C", p.phi.norm_c(), 1.0 + 1e-12),
                Check::at_most("max deviation of bracket width from 2^-k", halving, 1e-15),
            ];
            Ok(Outcome::new(
                json!({ "s": p.s, "residual": p.residual, "bisections": p.log.len() }),
                checks,
            ))
        }
        Command::Integrate => {
            let d = setup.delay.as_ref();
            let ic = &config.integrate;
            let phi0 = match ic.initial.as_str() {
                "find-point" => find_point(&setup.f, d, config.grid(), tol.find_point)?.phi,
                "file" => read_function(ic.file.as_ref().expect("validated"))?,
                _ => verify::affine_start(&setup.f, d, config.grid(), ic.y0, tol.find_point)?,
            };
            let cfg = StepConfig {
                t_end: ic.t_end,
                dt: ic.dt,
                corrections: ic.corrections,
            };
            let traj = integrate(&setup.f, d, &phi0, cfg)?;
            let rows = traj.rows(&setup.f, d)?;
            art.csv_rows("trajectory.csv", &rows)?;
            let max_res = rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
            let checks = vec![
                Check::at_most("|residual(phi0)|", traj.initial_residual().abs(), tol.manifold_residual),
                Check::at_most("max residual along the solution", max_res, tol.manifold_residual),
            ];
            Ok(Outcome::new(
                json!({
                    "steps": traj.step_times().len(),
                    "x_end": traj.value(traj.t_end()),
                    "max_derivative_jump": traj.max_derivative_jump(),
                }),
                checks,
            ))
        }
        Command::Scenario { which } => scenario(*which, config, &setup, art),
        Command::Selftest => {
            let atlas = setup.atlas()?;
            let counts = &config.counts;
            let (transversal, _) = verify::transversal_suite(&setup, &atlas, counts, tol)?;
            let suites = vec![
                transversal,
                verify::diffeo_suite(&setup, &atlas, counts, tol)?,
                verify::contraction_suite(&setup, &atlas, counts, tol)?,
                verify::roundtrip_suite(&setup, &atlas, counts, tol)?,
                verify::manifold_chart_suite(&setup, &atlas, counts, tol)?,
                verify::derivative_suite(&setup, &atlas, counts, tol)?,
                verify::scenario_suite(&setup, &config.scenario.params(), tol)?,
                verify::integrator_suite(&setup, &config.integrator, tol)?,
            ];
            let summary: Vec<Value> = suites
                .iter()
                .map(|s| json!({ "suite": s.name, "passed": s.passed }))
                .collect();
            art.csv_rows(
                "selftest.csv",
                &suites
                    .iter()
                    .flat_map(|s| {
                        s.checks.iter().map(move |c| SelftestRow {
                            suite: &s.name,
                            check: &c.name,
                            measured: c.measured,
                            relation: c.relation,
                            threshold: c.threshold,
                            passed: c.passed,
                        })
                    })
                    .collect::<Vec<_>>(),
            )?;
            Ok(Outcome {
                metrics: json!({ "suites": summary }),
                checks: Vec::new(),
                suites,
            })
        }
    }
}

#[derive(Serialize)]
struct SelftestRow<'a> {
    suite: &'a str,
    check: &'a str,
    measured: f64,
    relation: &'a str,
    threshold: f64,
    passed: bool,
}

impl ScenarioConfig {
    fn params(&self) -> verify::ScenarioParams {
        verify::ScenarioParams {
            nmax: self.nmax,
            s: self.s_values.get(self.s_values.len() / 2).copied().unwrap_or(-0.5),
        }
    }
}

#[derive(Serialize)]
struct Prop5Row {
    s: f64,
    w_s: f64,
    c: f64,
    d_phi: f64,
    d_psi: f64,
    f_phi: f64,
    f_psi: f64,
    gap: f64,
    node_mismatch: f64,
}

#[derive(Serialize)]
struct Prop6Row {
    scale: f64,
    delay: f64,
    gap_to_next: f64,
}

fn scenario(which: ScenarioKind, config: &RunConfig, setup: &Setup, art: &mut Artifacts) -> CliResult<Outcome> {
    let tol = &config.tolerances;
    let d: &dyn DelayFunctional = setup.delay.as_ref();
    match which {
        ScenarioKind::Prop4 => {
            let rep = scenario_prop4(&setup.f, d, config.grid(), config.scenario.nmax)?;
            art.csv_rows("prop4.csv", &rep.rows)?;
            let err = rep
                .rows
                .iter()
                .map(|r| (r.extended - setup.f.deriv(r.n as f64)).abs().max((r.plain - r.extended).abs()))
                .fold(0.0, f64::max);
            let hypothesis = if rep.strictly_increasing {
                "hypothesis (7) supported: |f'(n)| increases along the table"
            } else {
                "hypothesis (7) not satisfied"
            };
            Ok(Outcome::new(
                json!({ "field": setup.f.name(), "hypothesis": hypothesis, "strictly_increasing": rep.strictly_increasing }),
                vec![Check::at_most("max |D_eF(n)1 - f'(n)|", err, tol.prop4)],
            ))
        }
        ScenarioKind::Prop5 => {
            let f = config.field("scenario.prop5_f", &config.scenario.prop5_f)?;
            let mut rows = Vec::new();
            for &s in &config.scenario.s_values {
                let r = scenario_prop5(&f, setup.delay.as_ref(), setup.b, s, config.grid())?;
                rows.push(Prop5Row {
                    s,
                    w_s: r.w_s,
                    c: r.c,
                    d_phi: r.d_phi,
                    d_psi: r.d_psi,
                    f_phi: r.f_phi,
                    f_psi: r.f_psi,
                    gap: r.gap,
                    node_mismatch: r.node_mismatch,
                });
            }
            art.csv_rows("prop5.csv", &rows)?;
            let min_gap = rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
            let mismatch = rows.iter().map(|r| r.node_mismatch).fold(0.0, f64::max);
            let d_above_s = rows.iter().all(|r| r.d_psi > r.s);
            Ok(Outcome::new(
                json!({ "field": f.name(), "min_gap": min_gap }),
                vec![
                    Check::above("min |F(phi) - F(psi)|", min_gap, tol.prop5_gap),
                    Check::equals("max |phi - psi| at nodes in [-h, s]", mismatch, 0.0),
                    Check::equals("d(psi) > s for every s", d_above_s as u8 as f64, 1.0),
                ],
            ))
        }
        ScenarioKind::Prop6 => {
            let functionals = config
                .scenario
                .z_points
                .clone()
                .unwrap_or_else(|| vec![-config.h])
                .iter()
                .map(|&t| LinearFunctional::point_value(t))
                .collect();
            let z = SubspaceZ::new(config.h, config.grid(), functionals)?;
            let rep = scenario_prop6(d, &z, setup.b, config.grid())?;
            art.function("phi", &rep.phi)?;
            let rows = [
                Prop6Row { scale: 1.0, delay: rep.d_phi, gap_to_next: (rep.d_phi - rep.d_2phi).abs() },
                Prop6Row { scale: 2.0, delay: rep.d_2phi, gap_to_next: (rep.d_2phi - rep.d_4phi).abs() },
                Prop6Row { scale: 4.0, delay: rep.d_4phi, gap_to_next: 0.0 },
            ];
            art.csv_rows("prop6.csv", &rows)?;
            Ok(Outcome::new(
                json!({
                    "d_phi": rep.d_phi,
                    "d_2phi": rep.d_2phi,
                    "d_4phi": rep.d_4phi,
                    "gap": rep.gap,
                    "codimension": z.codimension(),
                    "kernel_defect": rep.kernel_defect,
                }),
                vec![
                    Check::above("|d(phi) - d(2phi)|", rep.gap, tol.prop6_gap),
                    Check::above("|d(2phi) - d(4phi)|", (rep.d_2phi - rep.d_4phi).abs(), tol.prop6_gap),
                    Check::at_most("|phi'| / b", rep.phi.max_abs_deriv() / setup.b, 0.5),
                ],
            ))
        }
    }
}
