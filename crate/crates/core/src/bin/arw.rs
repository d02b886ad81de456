use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use arw_core::coarse::build_band_chain;
use arw_core::count_chain::{CountChain, CountState, Record, RunOptions};
use arw_core::error::{Error, Result};
use arw_core::experiments::output::{out_path, write_csv, write_json};
use arw_core::experiments::suite::coarse_grain_x_hat;
use arw_core::experiments::{run_stationary_sampling, run_suite, ExperimentConfig, SuiteName, SuiteReport};
use arw_core::moments::{deviation_scan, drift_exact, drift_enumerated, second_moment_exact, DeviationFrame, DeviationExtrema};
use arw_core::rng::trial_rng;

/// Activated random walk on the complete graph: samplers and exact checks.
#[derive(Parser)]
#[command(name = "arw", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample the stationary particle count and report the window statistics.
    Stationary,
    /// Record count-chain paths from (N, N) to absorption.
    Trajectory,
    /// Kernel normalization, sum identities and stationary mass.
    Identities,
    /// Drift and second moment near the critical line.
    DriftScan,
    /// Band quantities and the birth-and-death chain.
    CoarseGrain,
    /// Rescaled drift, OU variance and first-passage dichotomy.
    OuCompare,
    /// Run one named check suite.
    Suite {
        /// identities | oracles | drift | coarse_grain | scaling | stationary
        name: String,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long, global = true)]
    n: Option<u32>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    #[arg(long, global = true)]
    burn_in: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// hitting | driven | exact
    #[arg(long, global = true)]
    mode: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    dev_const: Option<f64>,
    /// Flat key = value file; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        let pairs: [(&str, Option<String>); 11] = [
            ("n", self.n.map(|v| v.to_string())),
            ("lambda", self.lambda.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("trials", self.trials.map(|v| v.to_string())),
            ("burn-in", self.burn_in.map(|v| v.to_string())),
            ("samples", self.samples.map(|v| v.to_string())),
            ("threads", self.threads.map(|v| v.to_string())),
            ("mode", self.mode.clone()),
            ("epsilon", self.epsilon.map(|v| v.to_string())),
            ("dev-const", self.dev_const.map(|v| v.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                c.set(k, &v)?;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Serialize)]
struct PathRow {
    config_hash: String,
    seed: u64,
    trial: u64,
    t: u64,
    x: u32,
    y: u32,
    s: f64,
}

#[derive(Serialize)]
struct TrajectorySummary {
    config_hash: String,
    trial: u64,
    steps: u64,
    final_x: u32,
    truncated: bool,
    deviation: DeviationExtrema,
}

#[derive(Serialize)]
struct DriftRow {
    config_hash: String,
    x: u32,
    y: u32,
    s: f64,
    drift: f64,
    drift_enum: Option<f64>,
    second: f64,
}

fn emit<T: Serialize>(cfg: &ExperimentConfig, name: &str, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    println!("{text}");
    if let Some(dir) = &cfg.out {
        write_json(&out_path(dir, name)?, value)?;
    }
    Ok(())
}

fn csv_out<T: Serialize>(cfg: &ExperimentConfig, name: &str, rows: &[T]) -> Result<()> {
    if let Some(dir) = &cfg.out {
        write_csv(&out_path(dir, name)?, rows)?;
    }
    Ok(())
}

fn suite(cfg: &ExperimentConfig, name: SuiteName) -> Result<bool> {
    let rep: SuiteReport = run_suite(cfg, name)?;
    let file = format!("suite_{}.json", serde_json::to_string(&name).unwrap().trim_matches('"'));
    emit(cfg, &file, &rep)?;
    Ok(rep.passed)
}

fn trajectory(cfg: &ExperimentConfig) -> Result<bool> {
    let params = cfg.params()?;
    let chain = CountChain::new(params);
    let frame = DeviationFrame::new(params);
    let n = params.n_sites;
    let every = ((params.n() * params.n()) as u64 / cfg.samples.max(1)).max(1);
    let opts = RunOptions {
        max_steps: arw_core::experiments::stationary::hitting_step_cap(&params),
        record: Record::Every(every),
        rho_levels: vec![],
    };
    let hash = cfg.hash();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for trial in 0..cfg.trials {
        let tr = chain.run_until_absorbed(CountState::new(n, n), &mut trial_rng(cfg.seed, trial), &opts)?;
        summaries.push(TrajectorySummary {
            config_hash: hash.clone(),
            trial,
            steps: tr.steps,
            final_x: tr.final_state.x,
            truncated: tr.truncated,
            deviation: deviation_scan(&tr.path, &frame)?,
        });
        rows.extend(tr.path.iter().map(|p| PathRow {
            config_hash: hash.clone(),
            seed: cfg.seed,
            trial,
            t: p.t,
            x: p.x,
            y: p.y,
            s: frame.s_of(CountState::new(p.x, p.y)),
        }));
    }
    csv_out(cfg, "trajectory.csv", &rows)?;
    emit(cfg, "trajectory.json", &summaries)?;
    Ok(summaries.iter().all(|s| !s.truncated))
}

fn drift_scan(cfg: &ExperimentConfig) -> Result<bool> {
    let params = cfg.params()?;
    let frame = DeviationFrame::new(params);
    let n = params.n_sites;
    let hash = cfg.hash();
    let stride = (n / 50).max(1) as usize;
    let mut rows = Vec::new();
    for x in (1..=n).step_by(stride) {
        let line = frame.ell_at(x as f64).floor() as i64;
        for y in (line - 10).max(1)..=(line + 10).min(x as i64) {
            let s = CountState::new(x, y as u32);
            rows.push(DriftRow {
                config_hash: hash.clone(),
                x,
                y: y as u32,
                s: frame.s_of(s),
                drift: drift_exact(&params, s)?,
                drift_enum: if n <= 1000 { Some(drift_enumerated(&params, s)?) } else { None },
                second: second_moment_exact(&params, s)?,
            });
        }
    }
    csv_out(cfg, "drift_scan.csv", &rows)?;
    suite(cfg, SuiteName::Drift)
}

fn coarse_grain(cfg: &ExperimentConfig) -> Result<bool> {
    let params = cfg.params()?;
    if let Ok(rep) = build_band_chain(&params, coarse_grain_x_hat(&params), false) {
        csv_out(cfg, "bands.csv", &rep.rows)?;
    }
    suite(cfg, SuiteName::CoarseGrain)
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = cli.common.resolve()?;
    match &cli.cmd {
        Cmd::Stationary => {
            let (rep, rows) = run_stationary_sampling(&cfg)?;
            csv_out(&cfg, "stationary.csv", &rows)?;
            emit(&cfg, "stationary.json", &rep)?;
            Ok(true)
        }
        Cmd::Trajectory => trajectory(&cfg),
        Cmd::Identities => suite(&cfg, SuiteName::Identities),
        Cmd::DriftScan => drift_scan(&cfg),
        Cmd::CoarseGrain => coarse_grain(&cfg),
        Cmd::OuCompare => suite(&cfg, SuiteName::Scaling),
        Cmd::Suite { name } => suite(&cfg, name.parse()?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (Error::Config(_) | Error::InvalidParams(_))) => {
            eprintln!("arw: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("arw: {e}");
            ExitCode::from(1)
        }
    }
}
