//! `crbsim`: run experiments, summarize results, print analytic bounds.
//!
//! Exit status is 0 on success, 1 for invalid input and 2 when at least one
//! run failed or results could not be written.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_6;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crbsim::analysis;
use crbsim::channel::disk_radius;
use crbsim::experiment::{self, ExperimentError, PerRunRow, SummaryRow, MANIFEST_FILE, PER_RUN_FILE, SUMMARY_FILE};

#[derive(Debug, Parser)]
#[command(name = "crbsim", version, about = "Monte Carlo simulator for constrained-relative-bearing routing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment from a TOML spec, or replay a manifest.json.
    Run {
        /// Experiment spec (.toml) or a manifest written by a previous run.
        path: PathBuf,
        /// Override the master seed (specs only).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Where to write results (default: the spec's output_dir).
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Recompute summary.csv from the per_run.csv in a results directory.
    Summarize { dir: PathBuf },
    /// Print closed-form bounds and rates for `key=value` parameters.
    ///
    /// Keys: r, speed, turn_rate, carry_angle, n, beta0, radius, beta1,
    /// beta2, efficiency. Unset keys take reference values.
    Bounds { params: Vec<String> },
}

const CONFIG_ERROR: u8 = 1;
const RUNTIME_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { path, seed, workers, output_dir } => run(&path, seed, workers, output_dir),
        Command::Summarize { dir } => summarize(&dir),
        Command::Bounds { params } => match BoundsQuery::parse(&params) {
            Ok(q) => {
                print!("{}", q.render());
                ExitCode::SUCCESS
            }
            Err(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(CONFIG_ERROR)
            }
        },
    }
}

fn fail(e: &ExperimentError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_config_error() { CONFIG_ERROR } else { RUNTIME_ERROR })
}

fn is_manifest(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "json")
}

fn run(path: &Path, seed: Option<u64>, workers: Option<usize>, output_dir: Option<PathBuf>) -> ExitCode {
    if workers == Some(0) {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(CONFIG_ERROR);
    }
    let (result, dir, emit) = if is_manifest(path) {
        if seed.is_some() {
            eprintln!("error: --seed cannot change a manifest replay; every run's seed is recorded");
            return ExitCode::from(CONFIG_ERROR);
        }
        let manifest = match experiment::load_manifest(path) {
            Ok(m) => m,
            Err(e) => return fail(&e),
        };
        let dir = output_dir.unwrap_or_else(|| manifest.spec.output_dir.clone());
        let emit = manifest.spec.emit.clone();
        match experiment::replay(&manifest, workers) {
            Ok(r) => (r, dir, emit),
            Err(e) => return fail(&e),
        }
    } else {
        let mut spec = match experiment::load_spec(path) {
            Ok(s) => s,
            Err(e) => return fail(&e),
        };
        if let Some(s) = seed {
            spec.base.seed = s;
        }
        if let Some(w) = workers {
            spec.workers = Some(w);
        }
        if let Some(d) = output_dir {
            spec.output_dir = d;
        }
        let dir = spec.output_dir.clone();
        let emit = spec.emit.clone();
        (experiment::run_in_memory(&spec), dir, emit)
    };

    if let Err(e) = result.write(&dir, &emit) {
        return fail(&e);
    }
    print_summary(&result.summary);
    eprintln!("wrote {} runs to {} ({})", result.per_run.len(), dir.display(), MANIFEST_FILE);
    let failed = result.failed_runs();
    if failed > 0 {
        for row in result.per_run.iter().filter(|r| !r.is_ok()) {
            eprintln!("run n={} replication={} seed={}: {}", row.n, row.replication, row.seed, row.status);
        }
        eprintln!("error: {failed} run(s) failed");
        return ExitCode::from(RUNTIME_ERROR);
    }
    ExitCode::SUCCESS
}

fn summarize(dir: &Path) -> ExitCode {
    let rows: Vec<PerRunRow> = match experiment::read_csv(&dir.join(PER_RUN_FILE)) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let summary = experiment::summarize(&rows);
    if let Err(e) = experiment::write_csv(&dir.join(SUMMARY_FILE), &summary) {
        return fail(&e);
    }
    print_summary(&summary);
    ExitCode::SUCCESS
}

fn fmt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

fn print_summary(rows: &[SummaryRow]) {
    println!("{:>8} {:>5} {:>10} {:>8} {:>8} {:>10} {:>8} {:>8}", "n", "runs", "delay", "h_n", "t_n", "m_lambda", "m_h", "fail");
    for r in rows {
        println!(
            "{:>8} {:>5} {:>10} {:>8} {:>8} {:>10} {:>8} {:>8}",
            r.n,
            r.runs_ok,
            fmt(r.delay_mean),
            fmt(r.h_n_mean),
            fmt(r.t_n_mean),
            fmt(r.m_lambda_mean),
            fmt(r.m_h_mean),
            fmt(r.failure_rate_mean)
        );
    }
}

/// Inputs of the `bounds` subcommand.
#[derive(Debug, Clone, PartialEq)]
struct BoundsQuery {
    r: f64,
    speed: f64,
    turn_rate: f64,
    carry_angle: f64,
    n: f64,
    beta0: f64,
    radius: Option<f64>,
    beta1: f64,
    beta2: f64,
    efficiency: f64,
}

impl Default for BoundsQuery {
    fn default() -> Self {
        BoundsQuery {
            r: 0.5,
            speed: 0.005,
            turn_rate: 0.1,
            carry_angle: FRAC_PI_6,
            n: 1e4,
            beta0: 40.0,
            radius: None,
            beta1: 500.0,
            beta2: 1.0,
            efficiency: 0.45,
        }
    }
}

impl BoundsQuery {
    fn parse(params: &[String]) -> Result<Self, String> {
        let mut pairs = BTreeMap::new();
        for p in params {
            let (k, v) = p.split_once('=').ok_or_else(|| format!("expected key=value, got `{p}`"))?;
            let value: f64 = v.trim().parse().map_err(|_| format!("`{k}` needs a number, got `{v}`"))?;
            pairs.insert(k.trim().to_string(), value);
        }
        let mut q = BoundsQuery::default();
        for (k, v) in pairs {
            match k.as_str() {
                "r" => q.r = v,
                "speed" => q.speed = v,
                "turn_rate" => q.turn_rate = v,
                "carry_angle" => q.carry_angle = v,
                "n" => q.n = v,
                "beta0" => q.beta0 = v,
                "radius" => q.radius = Some(v),
                "beta1" => q.beta1 = v,
                "beta2" => q.beta2 = v,
                "efficiency" => q.efficiency = v,
                other => return Err(format!("unknown parameter `{other}`")),
            }
        }
        Ok(q)
    }

    fn render(&self) -> String {
        let show = |v: Result<f64, String>| v.map_or_else(|e| format!("undefined ({e})"), |x| format!("{x:.10}"));
        let radius = match self.radius {
            Some(r) => Ok(r),
            None => disk_radius(self.n, self.beta0).map_err(|e| e.to_string()),
        };
        let e = |x: analysis::AnalysisError| x.to_string();
        let lines = [
            ("disk radius r_n", radius.clone()),
            ("delay bound (slots)", analysis::delay_bound(self.r, self.speed, self.carry_angle).map_err(e)),
            ("turn relay bound", analysis::turn_relay_bound(self.r, self.turn_rate, self.speed, self.carry_angle).map_err(e)),
            (
                "pass-over relay bound",
                radius.clone().and_then(|rn| analysis::passover_relay_bound(self.r, rn, self.carry_angle).map_err(e)),
            ),
            (
                "total relay bound",
                radius.and_then(|rn| {
                    analysis::total_relay_bound(&analysis::BoundInputs {
                        r: self.r,
                        speed: self.speed,
                        turn_rate: self.turn_rate,
                        carry_angle: self.carry_angle,
                        radius: rn,
                    })
                    .map_err(e)
                }),
            ),
            ("traffic rate rho_n", analysis::traffic_rate(self.n, self.beta1, self.beta2).map_err(e)),
            ("capacity model", analysis::capacity_model(self.n, self.efficiency, self.beta1, self.beta2).map_err(e)),
        ];
        lines.iter().map(|(name, v)| format!("{name:<24}{}\n", show(v.clone()))).collect()
    }
}
