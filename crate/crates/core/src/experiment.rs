//! Experiment specifications, replicated sweeps and result files.
//!
//! An experiment is read from a TOML file whose keys carry their units:
//!
//! ```toml
//! mode = "sinr_full_traffic"
//! sweep_n = [250, 1000, 4000]
//! replications = 20
//! master_seed = 2024
//! speed_per_slot = 0.01
//! measurement_slots = 50000
//! ```
//!
//! Only `mode` and `sweep_n` are required; every other key falls back to
//! the reference parameter set. Each (n, replication) pair gets its own
//! seed from [`run_seed`], so adding replications never changes existing
//! rows. Runs execute on a worker pool and results are sorted by
//! (n, replication) before anything is written.
//!
//! Output files, all optional except the manifest:
//!
//! * `per_run.csv`: one [`PerRunRow`] per run,
//! * `summary.csv`: one [`SummaryRow`] per node count,
//! * `per_packet.csv`: one [`PerPacketRow`] per delivered packet,
//! * `manifest.json`: the resolved specification plus every run's full
//!   configuration, enough to replay each row bit for bit.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_6;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{normalize_values, scaling_factor, traffic_rate, Estimate};
use crate::channel::SinrChannel;
use crate::crb::CrbParams;
use crate::engine::{default_warmup, run, ChannelConfig, ConfigError, Mode, RunError, RunReport, TrafficParams, WorldConfig};
use crate::mobility::MobilityParams;
use crate::seed::run_seed;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("invalid configuration for n = {n}: {source}")]
    Config { n: usize, source: ConfigError },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl ExperimentError {
    /// Whether the problem lies in the user's input rather than in running
    /// or writing results.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            ExperimentError::Read { .. } | ExperimentError::Parse { .. } | ExperimentError::Invalid(_) | ExperimentError::Config { .. }
        )
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

fn read_err(path: &Path) -> impl FnOnce(io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Read { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Csv { path: path.to_path_buf(), source }
}

/// Which result files to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Output {
    PerPacket,
    PerRun,
    Summary,
}

/// A resolved, validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Template for every run. `nodes` and `seed` are replaced per run;
    /// `seed` here is the experiment's master seed.
    pub base: WorldConfig,
    pub sweep_n: Vec<usize>,
    pub replications: usize,
    pub output_dir: PathBuf,
    pub emit: BTreeSet<Output>,
    /// Worker threads; all available cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

/// The on-disk form. Absent keys take the reference values.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    mode: Mode,
    sweep_n: Vec<usize>,
    #[serde(default = "default_replications")]
    replications: usize,
    #[serde(default)]
    master_seed: u64,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
    #[serde(default = "default_emit")]
    emit: BTreeSet<Output>,
    workers: Option<usize>,
    /// Reference value depends on the mode.
    speed_per_slot: Option<f64>,
    #[serde(default = "default_turn_rate")]
    turn_rate_per_slot: f64,
    #[serde(default = "default_angle")]
    carry_angle_rad: f64,
    #[serde(default = "default_angle")]
    emission_angle_rad: f64,
    #[serde(default = "default_beta0")]
    beta0: f64,
    disk_radius: Option<f64>,
    #[serde(default = "default_beta1", with = "crate::serde_float")]
    beta1: f64,
    #[serde(default = "default_beta2")]
    beta2: f64,
    #[serde(default = "default_threshold")]
    sinr_threshold: f64,
    #[serde(default = "default_exponent")]
    path_loss_exponent: f64,
    #[serde(default)]
    noise_power: f64,
    #[serde(default = "default_power")]
    transmit_power: f64,
    /// Slots after warm-up. Disk runs stop early once their packet arrives.
    measurement_slots: Option<u64>,
    warmup_slots: Option<u64>,
    #[serde(default)]
    zero_time_handshake: bool,
    initial_distance: Option<f64>,
}

fn default_replications() -> usize {
    1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}
fn default_emit() -> BTreeSet<Output> {
    [Output::PerRun, Output::Summary].into_iter().collect()
}
fn default_turn_rate() -> f64 {
    0.1
}
fn default_angle() -> f64 {
    FRAC_PI_6
}
fn default_beta0() -> f64 {
    40.0
}
fn default_beta1() -> f64 {
    TrafficParams::default().beta1
}
fn default_beta2() -> f64 {
    TrafficParams::default().beta2
}
fn default_threshold() -> f64 {
    SinrChannel::default().threshold
}
fn default_exponent() -> f64 {
    SinrChannel::default().exponent
}
fn default_power() -> f64 {
    SinrChannel::default().power
}

impl SpecFile {
    fn resolve(self) -> Result<ExperimentSpec, ExperimentError> {
        let speed = self.speed_per_slot.unwrap_or(match self.mode {
            Mode::DiskSinglePacket => 0.005,
            Mode::SinrFullTraffic => 0.01,
        });
        let channel = match self.mode {
            Mode::DiskSinglePacket => ChannelConfig::Disk { beta0: self.beta0, radius: self.disk_radius },
            Mode::SinrFullTraffic => ChannelConfig::Sinr(SinrChannel {
                threshold: self.sinr_threshold,
                exponent: self.path_loss_exponent,
                noise: self.noise_power,
                power: self.transmit_power,
            }),
        };
        let warmup = self.warmup_slots.unwrap_or_else(|| default_warmup(speed));
        let measurement = self.measurement_slots.unwrap_or(match self.mode {
            Mode::DiskSinglePacket => (20.0 / speed) as u64,
            Mode::SinrFullTraffic => 50_000,
        });
        let base = WorldConfig {
            nodes: self.sweep_n.first().copied().unwrap_or(0),
            mode: self.mode,
            mobility: MobilityParams { speed, turn_rate: self.turn_rate_per_slot },
            crb: CrbParams { carry_angle: self.carry_angle_rad, emission_angle: self.emission_angle_rad },
            channel,
            traffic: TrafficParams { beta1: self.beta1, beta2: self.beta2 },
            max_slots: warmup.saturating_add(measurement),
            warmup_slots: warmup,
            seed: self.master_seed,
            zero_time_handshake: self.zero_time_handshake,
            initial_distance: self.initial_distance,
        };
        let spec = ExperimentSpec {
            base,
            sweep_n: self.sweep_n,
            replications: self.replications,
            output_dir: self.output_dir,
            emit: self.emit,
            workers: self.workers,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Parse and validate an experiment from TOML text. `origin` only labels
/// error messages.
pub fn parse_spec(text: &str, origin: &Path) -> Result<ExperimentSpec, ExperimentError> {
    let file: SpecFile = toml::from_str(text).map_err(|e| ExperimentError::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
    file.resolve()
}

pub fn load_spec(path: &Path) -> Result<ExperimentSpec, ExperimentError> {
    let text = fs::read_to_string(path).map_err(read_err(path))?;
    parse_spec(&text, path)
}

/// One planned run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub n: usize,
    pub replication: usize,
    pub config: WorldConfig,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.sweep_n.is_empty() {
            return Err(ExperimentError::Invalid("sweep_n must list at least one node count".into()));
        }
        if self.replications == 0 {
            return Err(ExperimentError::Invalid("replications must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(ExperimentError::Invalid("workers must be at least 1".into()));
        }
        for plan in self.plan_first_replications() {
            plan.config.validate().map_err(|source| ExperimentError::Config { n: plan.n, source })?;
        }
        Ok(())
    }

    pub fn master_seed(&self) -> u64 {
        self.base.seed
    }

    fn config_for(&self, n: usize, replication: usize) -> WorldConfig {
        WorldConfig { nodes: n, seed: run_seed(self.base.seed, n, replication), ..self.base.clone() }
    }

    fn plan_first_replications(&self) -> impl Iterator<Item = RunPlan> + '_ {
        self.sweep_n.iter().map(|&n| RunPlan { n, replication: 0, config: self.config_for(n, 0) })
    }

    /// Every run of the experiment, ordered by (n as listed, replication).
    pub fn plan(&self) -> Vec<RunPlan> {
        self.sweep_n
            .iter()
            .flat_map(|&n| (0..self.replications).map(move |r| (n, r)))
            .map(|(n, replication)| RunPlan { n, replication, config: self.config_for(n, replication) })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub plan: RunPlan,
    pub result: Result<RunReport, RunError>,
}

/// Execute `plans` on `workers` threads (all cores when `None`). The output
/// is sorted by (n, replication) whatever the scheduling.
pub fn execute(plans: Vec<RunPlan>, workers: Option<usize>) -> Vec<RunOutcome> {
    let work = move || -> Vec<RunOutcome> {
        plans
            .into_par_iter()
            .map(|plan| {
                let result = run(&plan.config);
                RunOutcome { plan, result }
            })
            .collect()
    };
    let mut outcomes = match workers {
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(work),
            Err(_) => work(),
        },
        None => work(),
    };
    outcomes.sort_by_key(|o| (o.plan.n, o.plan.replication));
    outcomes
}

/// Columns of `per_run.csv`, in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerRunRow {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    /// `ok`, or `error: ` followed by the failure.
    pub status: String,
    pub generated: u64,
    pub delivered: u64,
    pub in_flight: u64,
    pub mean_delay: Option<f64>,
    pub h_n: Option<f64>,
    pub t_n: Option<f64>,
    pub lambda_n: f64,
    pub rho_n: Option<f64>,
    pub m_rho: Option<f64>,
    pub m_lambda: Option<f64>,
    pub m_h: Option<f64>,
    pub m_t: Option<f64>,
    pub failure_rate: Option<f64>,
    pub turn_relays: u64,
    pub pass_over_relays: u64,
    pub measurement_slots: u64,
}

impl PerRunRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn from_outcome(outcome: &RunOutcome) -> Self {
        let plan = &outcome.plan;
        let mut row = PerRunRow {
            n: plan.n,
            replication: plan.replication,
            seed: plan.config.seed,
            status: "ok".into(),
            generated: 0,
            delivered: 0,
            in_flight: 0,
            mean_delay: None,
            h_n: None,
            t_n: None,
            lambda_n: 0.0,
            rho_n: None,
            m_rho: None,
            m_lambda: None,
            m_h: None,
            m_t: None,
            failure_rate: None,
            turn_relays: 0,
            pass_over_relays: 0,
            measurement_slots: 0,
        };
        let report = match &outcome.result {
            Ok(r) => r,
            Err(e) => {
                row.status = format!("error: {e}");
                return row;
            }
        };
        let traffic = &plan.config.traffic;
        let nf = plan.n as f64;
        row.generated = report.generated_count;
        row.delivered = report.delivered_count;
        row.in_flight = report.in_flight_count;
        row.mean_delay = report.mean_delay();
        row.h_n = report.mean_hops();
        row.t_n = report.mean_attempts();
        row.lambda_n = report.lambda_n;
        row.failure_rate = report.failure_rate();
        row.turn_relays = report.relay_changes.turn;
        row.pass_over_relays = report.relay_changes.pass_over;
        row.measurement_slots = report.measurement_slots;
        if let (Ok(rho), Ok(factor)) = (traffic_rate(nf, traffic.beta1, traffic.beta2), scaling_factor(nf, traffic.beta1, traffic.beta2)) {
            row.rho_n = Some(rho);
            row.m_rho = Some(rho * factor);
            row.m_lambda = Some(report.lambda_n * factor);
        }
        if let (Some(h), Some(t)) = (row.h_n, row.t_n) {
            if let Ok(d) = normalize_values(nf, traffic.beta1, traffic.beta2, report.lambda_n, h, t) {
                row.m_h = Some(d.m_h);
                row.m_t = Some(d.m_t);
            }
        }
        row
    }
}

/// Columns of `per_packet.csv`, in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerPacketRow {
    pub n: usize,
    pub replication: usize,
    pub packet_id: u64,
    pub source: usize,
    pub created_at: u64,
    pub delay: u64,
    pub hops: u32,
    pub attempts: u32,
    pub initial_distance: f64,
    pub turn_relays: u32,
    pub pass_over_relays: u32,
}

/// Columns of `summary.csv`, in file order. Each metric has its mean and
/// the bounds of a 95% normal-approximation interval; the interval is
/// empty with fewer than two successful replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub runs_ok: usize,
    pub runs_failed: usize,
    pub rho_n: Option<f64>,
    pub m_rho: Option<f64>,
    pub delay_mean: Option<f64>,
    pub delay_ci_lo: Option<f64>,
    pub delay_ci_hi: Option<f64>,
    pub h_n_mean: Option<f64>,
    pub h_n_ci_lo: Option<f64>,
    pub h_n_ci_hi: Option<f64>,
    pub t_n_mean: Option<f64>,
    pub t_n_ci_lo: Option<f64>,
    pub t_n_ci_hi: Option<f64>,
    pub lambda_n_mean: Option<f64>,
    pub lambda_n_ci_lo: Option<f64>,
    pub lambda_n_ci_hi: Option<f64>,
    pub m_lambda_mean: Option<f64>,
    pub m_lambda_ci_lo: Option<f64>,
    pub m_lambda_ci_hi: Option<f64>,
    pub m_h_mean: Option<f64>,
    pub m_h_ci_lo: Option<f64>,
    pub m_h_ci_hi: Option<f64>,
    pub m_t_mean: Option<f64>,
    pub m_t_ci_lo: Option<f64>,
    pub m_t_ci_hi: Option<f64>,
    pub failure_rate_mean: Option<f64>,
    pub failure_rate_ci_lo: Option<f64>,
    pub failure_rate_ci_hi: Option<f64>,
}

/// Mean and interval bounds over the rows where `f` is defined.
fn aggregate(rows: &[&PerRunRow], f: impl Fn(&PerRunRow) -> Option<f64>) -> (Option<f64>, Option<f64>, Option<f64>) {
    let samples: Vec<f64> = rows.iter().filter_map(|r| f(r)).collect();
    match Estimate::from_samples(&samples) {
        None => (None, None, None),
        Some(e) => match e.ci95() {
            Some((lo, hi)) => (Some(e.mean), Some(lo), Some(hi)),
            None => (Some(e.mean), None, None),
        },
    }
}

/// One row per node count, in order of first appearance.
pub fn summarize(rows: &[PerRunRow]) -> Vec<SummaryRow> {
    let mut order: Vec<usize> = Vec::new();
    for r in rows {
        if !order.contains(&r.n) {
            order.push(r.n);
        }
    }
    order
        .into_iter()
        .map(|n| {
            let all: Vec<&PerRunRow> = rows.iter().filter(|r| r.n == n).collect();
            let ok: Vec<&PerRunRow> = all.iter().copied().filter(|r| r.is_ok()).collect();
            let (delay_mean, delay_ci_lo, delay_ci_hi) = aggregate(&ok, |r| r.mean_delay);
            let (h_n_mean, h_n_ci_lo, h_n_ci_hi) = aggregate(&ok, |r| r.h_n);
            let (t_n_mean, t_n_ci_lo, t_n_ci_hi) = aggregate(&ok, |r| r.t_n);
            let (lambda_n_mean, lambda_n_ci_lo, lambda_n_ci_hi) = aggregate(&ok, |r| Some(r.lambda_n));
            let (m_lambda_mean, m_lambda_ci_lo, m_lambda_ci_hi) = aggregate(&ok, |r| r.m_lambda);
            let (m_h_mean, m_h_ci_lo, m_h_ci_hi) = aggregate(&ok, |r| r.m_h);
            let (m_t_mean, m_t_ci_lo, m_t_ci_hi) = aggregate(&ok, |r| r.m_t);
            let (failure_rate_mean, failure_rate_ci_lo, failure_rate_ci_hi) = aggregate(&ok, |r| r.failure_rate);
            SummaryRow {
                n,
                runs_ok: ok.len(),
                runs_failed: all.len() - ok.len(),
                rho_n: ok.iter().find_map(|r| r.rho_n),
                m_rho: ok.iter().find_map(|r| r.m_rho),
                delay_mean,
                delay_ci_lo,
                delay_ci_hi,
                h_n_mean,
                h_n_ci_lo,
                h_n_ci_hi,
                t_n_mean,
                t_n_ci_lo,
                t_n_ci_hi,
                lambda_n_mean,
                lambda_n_ci_lo,
                lambda_n_ci_hi,
                m_lambda_mean,
                m_lambda_ci_lo,
                m_lambda_ci_hi,
                m_h_mean,
                m_h_ci_lo,
                m_h_ci_hi,
                m_t_mean,
                m_t_ci_lo,
                m_t_ci_hi,
                failure_rate_mean,
                failure_rate_ci_lo,
                failure_rate_ci_hi,
            }
        })
        .collect()
}

/// Status of one run in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub n: usize,
    pub replication: usize,
    pub seed: u64,
    pub status: String,
    pub config: WorldConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub spec: ExperimentSpec,
    pub runs: Vec<ManifestRun>,
}

pub const MANIFEST_VERSION: u32 = 1;

/// Everything an experiment produced, in memory.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub outcomes: Vec<RunOutcome>,
    pub per_run: Vec<PerRunRow>,
    pub summary: Vec<SummaryRow>,
    pub manifest: Manifest,
}

impl ExperimentResult {
    fn from_outcomes(spec: &ExperimentSpec, outcomes: Vec<RunOutcome>) -> Self {
        let per_run: Vec<PerRunRow> = outcomes.iter().map(PerRunRow::from_outcome).collect();
        let summary = summarize(&per_run);
        let runs = outcomes
            .iter()
            .zip(&per_run)
            .map(|(o, row)| ManifestRun {
                n: o.plan.n,
                replication: o.plan.replication,
                seed: o.plan.config.seed,
                status: row.status.clone(),
                config: o.plan.config.clone(),
            })
            .collect();
        ExperimentResult { outcomes, per_run, summary, manifest: Manifest { format_version: MANIFEST_VERSION, spec: spec.clone(), runs } }
    }

    pub fn failed_runs(&self) -> usize {
        self.per_run.iter().filter(|r| !r.is_ok()).count()
    }

    pub fn per_packet(&self) -> Vec<PerPacketRow> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok().map(|r| (o, r)))
            .flat_map(|(o, r)| {
                r.delivered.iter().map(move |d| PerPacketRow {
                    n: o.plan.n,
                    replication: o.plan.replication,
                    packet_id: d.packet_id,
                    source: d.source,
                    created_at: d.created_at,
                    delay: d.delay,
                    hops: d.hops,
                    attempts: d.attempts,
                    initial_distance: d.initial_distance,
                    turn_relays: d.turn_relays,
                    pass_over_relays: d.pass_over_relays,
                })
            })
            .collect()
    }

    /// Write the selected outputs and the manifest into `dir`.
    pub fn write(&self, dir: &Path, emit: &BTreeSet<Output>) -> Result<(), ExperimentError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        if emit.contains(&Output::PerRun) {
            write_csv(&dir.join(PER_RUN_FILE), &self.per_run)?;
        }
        if emit.contains(&Output::Summary) {
            write_csv(&dir.join(SUMMARY_FILE), &self.summary)?;
        }
        if emit.contains(&Output::PerPacket) {
            write_csv(&dir.join(PER_PACKET_FILE), &self.per_packet())?;
        }
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        fs::write(&path, text + "\n").map_err(io_err(&path))
    }
}

pub const PER_RUN_FILE: &str = "per_run.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PER_PACKET_FILE: &str = "per_packet.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Run every replication of `spec` without writing anything.
pub fn run_in_memory(spec: &ExperimentSpec) -> ExperimentResult {
    let outcomes = execute(spec.plan(), spec.workers);
    ExperimentResult::from_outcomes(spec, outcomes)
}

/// Run `spec` and write its outputs into `spec.output_dir`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult, ExperimentError> {
    let result = run_in_memory(spec);
    result.write(&spec.output_dir, &spec.emit)?;
    Ok(result)
}

pub fn load_manifest(path: &Path) -> Result<Manifest, ExperimentError> {
    let text = fs::read_to_string(path).map_err(read_err(path))?;
    serde_json::from_str(&text).map_err(|e| ExperimentError::Parse { path: path.to_path_buf(), message: e.to_string() })
}

/// Re-run every configuration recorded in a manifest, exactly as recorded.
pub fn replay(manifest: &Manifest, workers: Option<usize>) -> Result<ExperimentResult, ExperimentError> {
    for r in &manifest.runs {
        r.config.validate().map_err(|source| ExperimentError::Config { n: r.n, source })?;
    }
    let plans = manifest.runs.iter().map(|r| RunPlan { n: r.n, replication: r.replication, config: r.config.clone() }).collect();
    let outcomes = execute(plans, workers.or(manifest.spec.workers));
    Ok(ExperimentResult::from_outcomes(&manifest.spec, outcomes))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ExperimentError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(csv_err(path))
}
