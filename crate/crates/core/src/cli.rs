//! Batch front end over the library: `simulate`, `sweep-beta`, `label`,
//! `calibrate` and `evaluate`.
//!
//! Every subcommand resolves its configuration from defaults, an optional
//! `--config` file, its dedicated flags and finally `--set key.path=value`
//! overrides, writes the result to `resolved_config.toml` in `--out`, then
//! runs. Failures write `error.toml` next to it.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calibrate::{calibrate, CalibrationOptions, Evaluator, ProbabilitySource};
use crate::data::{
    event_from_log, label_event, load_events, observations_from_events, save_events, write_labels, BehaviorLabel,
    LabelOptions,
};
use crate::error::{Error, Result};
use crate::payoff::Conditioning;
use crate::sim::{run_scenario, sweep_beta, BetaRow, ScenarioConfig};
use crate::types::ModelParams;

/// Caps the number of worker threads.
pub const THREADS_VAR: &str = "MERGE_GAME_THREADS";
pub const RESOLVED_CONFIG: &str = "resolved_config.toml";
pub const ERROR_RECORD: &str = "error.toml";

const SEED_MAX: u64 = i64::MAX as u64;

#[derive(Debug, Parser)]
#[command(name = "merge-game", version, about = "Game-theoretic lag-vehicle merge model: simulation, labeling and calibration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario; writes trajectory.csv and, when it has a lag agent and a merger, events.csv.
    Simulate(SimulateArgs),
    /// Replay a scenario over several β values; writes beta_sweep.csv.
    SweepBeta(SweepArgs),
    /// Segment each event's time-gap profile; writes labels.csv.
    Label(LabelArgs),
    /// Fit {φ1..φ8, τ} to labeled events; writes calibration.toml.
    Calibrate(CalibrateArgs),
    /// Score a parameter set on labeled events; writes evaluation.toml.
    Evaluate(EvaluateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::SweepBeta(_) => "sweep-beta",
            Command::Label(_) => "label",
            Command::Calibrate(_) => "calibrate",
            Command::Evaluate(_) => "evaluate",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Simulate(a) => &a.common,
            Command::SweepBeta(a) => &a.common,
            Command::Label(a) => &a.common,
            Command::Calibrate(a) => &a.common,
            Command::Evaluate(a) => &a.common,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Override any field of the resolved configuration, e.g.
    /// `vehicles.0.model.tau=3` or `calibration.n_starts=64`. VALUE is parsed
    /// as a TOML value, falling back to a plain string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (TOML).
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Master random seed (0 to 2^63 - 1).
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=SEED_MAX))]
    pub seed: u64,
    /// Simulated time (s).
    #[arg(long, value_name = "S")]
    pub duration: Option<f64>,
    /// Rationality temperature β applied to every lag agent (dimensionless, > 0).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Sampling rate of events.csv (Hz).
    #[arg(long, value_name = "HZ", default_value_t = 10.0)]
    pub sample_rate: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Scenario file (TOML); `--set` keys are relative to it.
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Master random seed (0 to 2^63 - 1); replica seeds derive from it.
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=SEED_MAX))]
    pub seed: u64,
    /// Comma-separated β values (dimensionless, > 0).
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,1,10")]
    pub betas: Vec<f64>,
    /// Replicas per β value.
    #[arg(long, default_value_t = 50)]
    pub iterations: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct LabelFlags {
    /// Savitzky-Golay smoothing window (s).
    #[arg(long, value_name = "S")]
    pub window: Option<f64>,
    /// Savitzky-Golay polynomial order.
    #[arg(long)]
    pub order: Option<usize>,
    /// Minimum average rate of time-gap change for a trend (s/s).
    #[arg(long, value_name = "S/S")]
    pub min_rate: Option<f64>,
    /// Minimum total time-gap change for a trend (s).
    #[arg(long, value_name = "S")]
    pub min_total: Option<f64>,
}

impl LabelFlags {
    fn overrides(&self, prefix: &str) -> Vec<(String, toml::Value)> {
        let mut out = Vec::new();
        if let Some(v) = self.window {
            out.push((format!("{prefix}window"), toml::Value::Float(v)));
        }
        if let Some(v) = self.order {
            out.push((format!("{prefix}order"), toml::Value::Integer(v as i64)));
        }
        if let Some(v) = self.min_rate {
            out.push((format!("{prefix}segment.min_rate"), toml::Value::Float(v)));
        }
        if let Some(v) = self.min_total {
            out.push((format!("{prefix}segment.min_total"), toml::Value::Float(v)));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceKind {
    Nash,
    Qre,
}

#[derive(Debug, Args)]
pub struct SourceFlags {
    /// Where action probabilities come from.
    #[arg(long, value_enum)]
    pub source: Option<SourceKind>,
    /// QRE temperature β (dimensionless, > 0); required with `--source qre`.
    #[arg(long, required_if_eq("source", "qre"))]
    pub beta: Option<f64>,
}

impl SourceFlags {
    fn overrides(&self, key: &str) -> Vec<(String, toml::Value)> {
        match self.source {
            Some(SourceKind::Nash) => vec![(key.to_string(), toml::Value::String("nash".into()))],
            Some(SourceKind::Qre) => {
                let mut inner = toml::Table::new();
                inner.insert("beta".into(), toml::Value::Float(self.beta.unwrap_or(f64::NAN)));
                let mut outer = toml::Table::new();
                outer.insert("qre".into(), toml::Value::Table(inner));
                vec![(key.to_string(), toml::Value::Table(outer))]
            }
            None => Vec::new(),
        }
    }
}

#[derive(Debug, Args)]
pub struct LabelArgs {
    /// Trajectory file (CSV: event_id, site_id, t, actor_role, x, y, v).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Labeling configuration (TOML), e.g. a previous resolved_config.toml.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub labeling: LabelFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeKind {
    Global,
    PerLag,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Trajectory file (CSV: event_id, site_id, t, actor_role, x, y, v).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Seed of the start-point sequence (0 to 2^63 - 1).
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=SEED_MAX))]
    pub seed: u64,
    /// Calibration configuration (TOML), e.g. a previous resolved_config.toml.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Number of multistart points.
    #[arg(long)]
    pub starts: Option<usize>,
    /// Maximum search sweeps per start.
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Fit one parameter set overall or one per lag driver.
    #[arg(long, value_enum)]
    pub mode: Option<ModeKind>,
    /// Decision points sampled per second of each event (Hz).
    #[arg(long, value_name = "HZ")]
    pub rate: Option<f64>,
    #[command(flatten)]
    pub source: SourceFlags,
    #[command(flatten)]
    pub labeling: LabelFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Model parameters (TOML): a bare parameter table or a calibration result.
    #[arg(long, value_name = "FILE")]
    pub params: PathBuf,
    /// Trajectory file (CSV: event_id, site_id, t, actor_role, x, y, v).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Evaluation configuration (TOML), e.g. a previous resolved_config.toml.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Decision points sampled per second of each event (Hz).
    #[arg(long, value_name = "HZ")]
    pub rate: Option<f64>,
    #[command(flatten)]
    pub source: SourceFlags,
    #[command(flatten)]
    pub labeling: LabelFlags,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub betas: Vec<f64>,
    pub iterations: usize,
    pub scenario: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelConfig {
    pub input: PathBuf,
    #[serde(default)]
    pub labeling: LabelOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub input: PathBuf,
    /// Decision points per second of each event (Hz).
    pub observation_rate: f64,
    #[serde(default)]
    pub labeling: LabelOptions,
    #[serde(default)]
    pub calibration: CalibrationOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    pub input: PathBuf,
    pub params_file: PathBuf,
    pub observation_rate: f64,
    #[serde(default)]
    pub source: ProbabilitySource,
    #[serde(default)]
    pub conditioning: Conditioning,
    #[serde(default)]
    pub labeling: LabelOptions,
    pub params: ModelParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mae: f64,
    pub objective: f64,
    pub n_observations: usize,
    /// Observations per ground-truth class.
    pub labels: BTreeMap<String, usize>,
}

#[derive(Debug, Serialize)]
struct ErrorRecord<'a> {
    command: &'a str,
    kind: &'a str,
    exit_code: i32,
    message: String,
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 on invalid input, 2 on runtime failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let out = cli.command.common().out.clone();
    match configure_threads().and_then(|()| execute(&cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e}");
            let record = ErrorRecord {
                command: cli.command.name(),
                kind: e.kind(),
                exit_code: code,
                message: e.to_string(),
            };
            let written = fs::create_dir_all(&out)
                .map_err(Error::from)
                .and_then(|()| Ok(toml::to_string(&record)?))
                .and_then(|text| Ok(fs::write(out.join(ERROR_RECORD), text)?));
            if let Err(w) = written {
                eprintln!("error: could not write {}: {w}", out.join(ERROR_RECORD).display());
            }
            code
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        1
    } else {
        2
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    // A pool built earlier in the same process keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::SweepBeta(a) => sweep(a),
        Command::Label(a) => label(a),
        Command::Calibrate(a) => calibrate_cmd(a),
        Command::Evaluate(a) => evaluate(a),
    }
}

fn prepare_out<T: Serialize>(common: &Common, resolved: &T) -> Result<()> {
    fs::create_dir_all(&common.out)?;
    fs::write(common.out.join(RESOLVED_CONFIG), toml::to_string(resolved)?)?;
    Ok(())
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut overrides = vec![("seed".to_string(), toml::Value::Integer(a.seed as i64))];
    if let Some(d) = a.duration {
        overrides.push(("duration".into(), toml::Value::Float(d)));
    }
    let mut config: ScenarioConfig = resolve(None::<&ScenarioConfig>, Some(&a.config), overrides, &a.common.sets)?;
    if let Some(beta) = a.beta {
        config = config.with_beta(beta);
    }
    config.validate()?;
    if !(a.sample_rate.is_finite() && a.sample_rate > 0.0) {
        return Err(Error::Config(format!("--sample-rate must be finite and > 0, got {}", a.sample_rate)));
    }
    prepare_out(&a.common, &config)?;
    let log = run_scenario(&config)?;
    log.save(a.common.out.join("trajectory.csv"))?;
    if config.merger_index().is_some() && !config.lag_indices().is_empty() {
        let stride = ((1.0 / a.sample_rate) / config.dt_dyn).round().max(1.0) as usize;
        let event = event_from_log(&log, &config, "sim", "simulation", stride)?;
        save_events(&[event], a.common.out.join("events.csv"))?;
    }
    log::info!("simulated {} s with {} vehicles", config.duration, config.vehicles.len());
    Ok(())
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let overrides = vec![("seed".to_string(), toml::Value::Integer(a.seed as i64))];
    let scenario: ScenarioConfig = resolve(None::<&ScenarioConfig>, Some(&a.config), overrides, &a.common.sets)?;
    scenario.validate()?;
    if scenario.lag_indices().is_empty() {
        return Err(Error::Config("scenario has no lag agent".into()));
    }
    for &b in &a.betas {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::Config(format!("every β must be finite and > 0, got {b}")));
        }
    }
    let resolved = SweepConfig {
        betas: a.betas.clone(),
        iterations: a.iterations,
        scenario,
    };
    prepare_out(&a.common, &resolved)?;
    let rows = sweep_beta(&resolved.scenario, &resolved.betas, resolved.iterations)?;
    write_sweep(&rows, &a.common.out.join("beta_sweep.csv"))?;
    for r in &rows {
        println!(
            "beta {:>8} mode {:<13} frequency {:.2} entropy {:.3}",
            r.beta,
            r.mode.as_str(),
            r.mode_frequency,
            r.entropy
        );
    }
    Ok(())
}

fn write_sweep(rows: &[BetaRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "beta",
        "yield_behind",
        "yield_ahead",
        "block",
        "do_nothing",
        "mode",
        "mode_frequency",
        "entropy",
    ])?;
    for r in rows {
        let mut record = vec![r.beta.to_string()];
        record.extend(r.counts.iter().map(|c| c.to_string()));
        record.push(r.mode.as_str().to_string());
        record.push(r.mode_frequency.to_string());
        record.push(r.entropy.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn label(a: &LabelArgs) -> Result<()> {
    let defaults = LabelConfig {
        input: a.input.clone(),
        labeling: LabelOptions::default(),
    };
    let mut overrides = vec![("input".to_string(), path_value(&a.input))];
    overrides.extend(a.labeling.overrides("labeling."));
    let resolved: LabelConfig = resolve(Some(&defaults), a.config.as_deref(), overrides, &a.common.sets)?;
    prepare_out(&a.common, &resolved)?;
    let events = load_events(&resolved.input)?;
    let labels = events
        .iter()
        .map(|e| label_event(e, &resolved.labeling))
        .collect::<Result<Vec<_>>>()?;
    let file = fs::File::create(a.common.out.join("labels.csv"))?;
    write_labels(events.iter().map(|e| e.event_id.as_str()).zip(labels.iter().map(Vec::as_slice)), file)?;
    log::info!("labeled {} events", events.len());
    Ok(())
}

fn calibrate_cmd(a: &CalibrateArgs) -> Result<()> {
    let defaults = CalibrateConfig {
        input: a.input.clone(),
        observation_rate: 1.0,
        labeling: LabelOptions::default(),
        calibration: CalibrationOptions::default(),
    };
    let mut overrides = vec![
        ("input".to_string(), path_value(&a.input)),
        ("calibration.seed".to_string(), toml::Value::Integer(a.seed as i64)),
    ];
    if let Some(n) = a.starts {
        overrides.push(("calibration.n_starts".into(), toml::Value::Integer(n as i64)));
    }
    if let Some(n) = a.max_iters {
        overrides.push(("calibration.max_iters".into(), toml::Value::Integer(n as i64)));
    }
    if let Some(m) = a.mode {
        let name = match m {
            ModeKind::Global => "global",
            ModeKind::PerLag => "per_lag",
        };
        overrides.push(("calibration.mode".into(), toml::Value::String(name.into())));
    }
    if let Some(r) = a.rate {
        overrides.push(("observation_rate".into(), toml::Value::Float(r)));
    }
    overrides.extend(a.source.overrides("calibration.source"));
    overrides.extend(a.labeling.overrides("labeling."));
    let resolved: CalibrateConfig = resolve(Some(&defaults), a.config.as_deref(), overrides, &a.common.sets)?;
    resolved.calibration.validate()?;
    prepare_out(&a.common, &resolved)?;
    let events = load_events(&resolved.input)?;
    let observations = observations_from_events(&events, &resolved.labeling, resolved.observation_rate)?;
    log::info!("calibrating on {} observations from {} events", observations.len(), events.len());
    let result = calibrate(&observations, &resolved.calibration)?;
    result.save(a.common.out.join("calibration.toml"))?;
    println!("objective {} mae {:.6} over {} observations", result.objective, result.mae, result.n_observations);
    Ok(())
}

/// Reads a bare parameter table, or the `params` table of a calibration result.
pub fn load_params(path: &Path) -> Result<ModelParams> {
    let mut table: toml::Table = toml::from_str(&crate::error::read_to_string(path)?)?;
    let params: ModelParams = match table.remove("params") {
        Some(inner @ toml::Value::Table(_)) => inner.try_into()?,
        Some(other) => return Err(Error::Config(format!("`params` must be a table, got {}", other.type_str()))),
        None => toml::Value::Table(table).try_into()?,
    };
    params.validate()?;
    Ok(params)
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let defaults = EvaluateConfig {
        input: a.input.clone(),
        params_file: a.params.clone(),
        observation_rate: 1.0,
        source: ProbabilitySource::Nash,
        conditioning: Conditioning::Literal,
        labeling: LabelOptions::default(),
        params: load_params(&a.params)?,
    };
    let mut overrides = vec![
        ("input".to_string(), path_value(&a.input)),
        ("params_file".to_string(), path_value(&a.params)),
    ];
    if let Some(r) = a.rate {
        overrides.push(("observation_rate".into(), toml::Value::Float(r)));
    }
    overrides.extend(a.source.overrides("source"));
    overrides.extend(a.labeling.overrides("labeling."));
    let resolved: EvaluateConfig = resolve(Some(&defaults), a.config.as_deref(), overrides, &a.common.sets)?;
    resolved.params.validate()?;
    prepare_out(&a.common, &resolved)?;
    let events = load_events(&resolved.input)?;
    let observations = observations_from_events(&events, &resolved.labeling, resolved.observation_rate)?;
    let evaluator = Evaluator::new(&resolved.params, resolved.source, resolved.conditioning)?;
    let objective = evaluator.objective(&observations)?;
    let mut labels: BTreeMap<String, usize> = BehaviorLabel::ALL.iter().map(|l| (l.as_str().to_string(), 0)).collect();
    for o in &observations {
        *labels.entry(o.label.as_str().to_string()).or_default() += 1;
    }
    let report = EvaluationReport {
        mae: objective / observations.len() as f64,
        objective,
        n_observations: observations.len(),
        labels,
    };
    fs::write(a.common.out.join("evaluation.toml"), toml::to_string(&report)?)?;
    println!("mae {:.6} over {} observations", report.mae, report.n_observations);
    Ok(())
}

fn path_value(p: &Path) -> toml::Value {
    toml::Value::String(p.to_string_lossy().into_owned())
}

/// Layers `file`, `overrides` and `sets` on top of `defaults` and
/// deserializes the result.
fn resolve<T: Serialize + DeserializeOwned>(
    defaults: Option<&T>,
    file: Option<&Path>,
    overrides: Vec<(String, toml::Value)>,
    sets: &[String],
) -> Result<T> {
    let mut root = match defaults {
        Some(d) => toml::Value::try_from(d)?,
        None => toml::Value::Table(toml::Table::new()),
    };
    if let Some(path) = file {
        let table: toml::Table = toml::from_str(&crate::error::read_to_string(path)?)?;
        merge(&mut root, toml::Value::Table(table));
    }
    for (key, value) in overrides {
        set_path(&mut root, &key, value)?;
    }
    for raw in sets {
        let (key, value) = parse_set(raw)?;
        set_path(&mut root, &key, value)?;
    }
    Ok(root.try_into()?)
}

fn merge(base: &mut toml::Value, top: toml::Value) {
    match (base, top) {
        (toml::Value::Table(b), toml::Value::Table(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

pub fn parse_set(raw: &str) -> Result<(String, toml::Value)> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("`--set {raw}` is not of the form KEY=VALUE")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("`--set {raw}` has an empty key segment")));
    }
    let value = value.trim();
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    Ok((key.to_string(), parsed))
}

/// Sets the value at a dotted path; numeric segments index arrays.
pub fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<()> {
    let segments: Vec<&str> = path.split('.').collect();
    let mut cur = root;
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        cur = match cur {
            toml::Value::Table(t) => {
                if last {
                    t.insert(seg.to_string(), value);
                    return Ok(());
                }
                t.entry(seg.to_string())
                    .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            }
            toml::Value::Array(items) => {
                let len = items.len();
                let slot = seg
                    .parse::<usize>()
                    .ok()
                    .and_then(|k| items.get_mut(k))
                    .ok_or_else(|| Error::Config(format!("`{path}`: no element `{seg}` in an array of length {len}")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            other => {
                return Err(Error::Config(format!(
                    "`{path}`: cannot descend into `{seg}` of a {}",
                    other.type_str()
                )))
            }
        };
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_values_parse_as_toml() {
        assert_eq!(parse_set("a.b=3").unwrap().1, toml::Value::Integer(3));
        assert_eq!(parse_set("a=[1.0, 2.5]").unwrap().1.as_array().unwrap().len(), 2);
        assert_eq!(parse_set("mode=per_lag").unwrap().1, toml::Value::String("per_lag".into()));
        assert!(parse_set("novalue").is_err());
        assert!(parse_set("a..b=1").is_err());
    }

    #[test]
    fn set_path_descends_tables_and_arrays() {
        let mut root: toml::Value = toml::from_str::<toml::Table>("[[v]]\nx = 1\n[[v]]\nx = 2\n").unwrap().into();
        set_path(&mut root, "v.1.x", toml::Value::Integer(9)).unwrap();
        set_path(&mut root, "new.deep", toml::Value::Boolean(true)).unwrap();
        assert_eq!(root["v"][1]["x"].as_integer(), Some(9));
        assert_eq!(root["new"]["deep"].as_bool(), Some(true));
        assert!(set_path(&mut root, "v.5.x", toml::Value::Integer(0)).is_err());
        assert!(set_path(&mut root, "v.0.x.y", toml::Value::Integer(0)).is_err());
    }

    #[test]
    fn unknown_override_is_rejected() {
        let sets = vec!["labeling.windw=3".to_string()];
        let defaults = LabelConfig {
            input: "x.csv".into(),
            labeling: LabelOptions::default(),
        };
        assert!(resolve(Some(&defaults), None, Vec::new(), &sets).is_err());
    }

    #[test]
    fn calibration_result_params_are_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.toml");
        let p = ModelParams::default().with_beta(0.5);
        fs::write(&path, toml::to_string(&p).unwrap()).unwrap();
        assert_eq!(load_params(&path).unwrap(), p);
        let wrapped = format!("objective = 1.0\n\n[params]\n{}", toml::to_string(&p).unwrap());
        fs::write(&path, wrapped).unwrap();
        assert_eq!(load_params(&path).unwrap(), p);
    }
}
