use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::config::{ExperimentConfig, Mode};
use crate::count_chain::{CountChain, CountState};
use crate::error::Result;
use crate::exact::stationary_exact;
use crate::micro::{driven_chain_visit, MicroConfig, SelectionRule, SiteState, Stabilizer};
use crate::params::ModelParams;
use crate::rng::trial_rng;

/// Summary of stationary samples on the sqrt(N log N) scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub mode: Mode,
    pub n_sites: u32,
    pub lambda: f64,
    pub samples: u64,
    pub mean_count: f64,
    pub sd_count: f64,
    /// (mean - rho_c N) / sqrt(N log N).
    pub shift_estimate: f64,
    pub shift_se: f64,
    /// One-sided 99% lower confidence bound on the shift.
    pub shift_lower_99: f64,
    /// Fraction in [rho_c N + (a-eps) s, rho_c N + (a+eps) s], s = sqrt(N log N).
    pub in_window_fraction: f64,
    /// Fraction within rho_c N +- A s.
    pub within_deviation_fraction: f64,
    /// Fraction below rho_c N - A s.
    pub below_deviation_fraction: f64,
    pub min_count: u32,
    pub max_count: u32,
    pub truncated: u64,
}

/// One CSV row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub config_hash: String,
    pub seed: u64,
    pub trial: u64,
    /// Addition index (driven), particle count k (exact), 0 (hitting).
    pub step: u64,
    pub count: u32,
    /// mu_k in exact mode, 1 otherwise.
    pub weight: f64,
    /// T+ (hitting) or avalanche length (driven).
    pub steps: u64,
    pub truncated: bool,
}

/// `batch_means`: per-chain means for correlated samples; their spread gives the standard error.
fn summarize(
    config: &ExperimentConfig,
    params: &ModelParams,
    weighted: &[(u32, f64)],
    n_samples: u64,
    truncated: u64,
    exact: bool,
    batch_means: Option<&[f64]>,
) -> WindowReport {
    let n = params.n();
    let scale = params.window_scale();
    let total: f64 = weighted.iter().map(|(_, w)| w).sum();
    let mean = weighted.iter().map(|(k, w)| *k as f64 * w).sum::<f64>() / total;
    let var = weighted.iter().map(|(k, w)| (*k as f64 - mean).powi(2) * w).sum::<f64>() / total;
    let sd = var.sqrt();
    let center = params.rho_c() * n;
    let (lo, hi) = (center + (params.a() - config.epsilon_window) * scale, center + (params.a() + config.epsilon_window) * scale);
    let dev = config.deviation_constant * scale;
    let frac = |f: &dyn Fn(f64) -> bool| weighted.iter().filter(|(k, _)| f(*k as f64)).map(|(_, w)| w).sum::<f64>() / total + 0.0;
    let shift = (mean - center) / scale;
    let shift_se = match batch_means {
        _ if exact => 0.0,
        Some(b) if b.len() >= 2 => {
            let k = b.len() as f64;
            let m = b.iter().sum::<f64>() / k;
            (b.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt() / scale
        }
        Some(_) => f64::INFINITY,
        None if n_samples < 2 => 0.0,
        None => sd / (n_samples as f64).sqrt() / scale,
    };
    let z99 = Normal::standard().inverse_cdf(0.99);
    let support = weighted.iter().filter(|(_, w)| *w > 0.0).map(|(k, _)| *k);
    WindowReport {
        mode: config.mode,
        n_sites: params.n_sites,
        lambda: params.lambda,
        samples: n_samples,
        mean_count: mean,
        sd_count: sd,
        shift_estimate: shift,
        shift_se,
        shift_lower_99: shift - z99 * shift_se,
        in_window_fraction: frac(&|k| lo <= k && k <= hi),
        within_deviation_fraction: frac(&|k| (k - center).abs() <= dev),
        below_deviation_fraction: frac(&|k| k < center - dev),
        min_count: support.clone().min().unwrap_or(0),
        max_count: support.max().unwrap_or(0),
        truncated,
    }
}

/// Step cap for one hitting run: 100 (1+lambda) N^2.
pub fn hitting_step_cap(params: &ModelParams) -> u64 {
    (100.0 * (1.0 + params.lambda) * params.n() * params.n()).min(u64::MAX as f64 / 2.0) as u64
}

/// X at the first time Y = 0 from (N, N), one trial per stream.
pub fn hitting_samples(params: &ModelParams, seed: u64, trials: u64) -> Result<Vec<(u64, u32, u64, bool)>> {
    let chain = CountChain::new(*params);
    let n = params.n_sites;
    let cap = hitting_step_cap(params);
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let r = chain.run_to_absorption(CountState::new(n, n), &mut rng, cap)?;
            Ok((t, r.final_state.x, r.steps, r.truncated))
        })
        .collect()
}

fn driven_trial(params: &ModelParams, seed: u64, trial: u64, burn_in: u64, samples: u64) -> Result<Vec<(u64, u32, u64)>> {
    let mut rng = trial_rng(seed, trial);
    let mut config = MicroConfig { sites: vec![SiteState::Active(1); params.n_sites as usize] };
    Stabilizer::new(*params, SelectionRule::Uniform).stabilize(&mut config, &mut rng)?;
    driven_chain_visit(params, &mut config, burn_in, &mut rng, |_| {})?;
    let mut out = Vec::with_capacity(samples as usize);
    driven_chain_visit(params, &mut config, samples, &mut rng, |s| out.push((s.step_index, s.particle_count, s.avalanche_steps)))?;
    Ok(out)
}

/// Runs the configured mode; the pool size never changes the output.
pub fn run_stationary_sampling(config: &ExperimentConfig) -> Result<(WindowReport, Vec<SampleRow>)> {
    config.validate()?;
    let params = config.params()?;
    let hash = config.hash();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| crate::error::Error::Config(e.to_string()))?;
    pool.install(|| match config.mode {
        Mode::Exact => {
            let mu = stationary_exact(&params)?;
            let weighted: Vec<(u32, f64)> = mu.mass.iter().enumerate().map(|(k, &p)| (k as u32, p)).collect();
            let rows = weighted
                .iter()
                .map(|&(k, p)| SampleRow { config_hash: hash.clone(), seed: config.seed, trial: 0, step: k as u64, count: k, weight: p, steps: 0, truncated: false })
                .collect();
            Ok((summarize(config, &params, &weighted, 0, 0, true, None), rows))
        }
        Mode::Hitting => {
            let s = hitting_samples(&params, config.seed, config.trials)?;
            let truncated = s.iter().filter(|r| r.3).count() as u64;
            let weighted: Vec<(u32, f64)> = s.iter().filter(|r| !r.3).map(|r| (r.1, 1.0)).collect();
            let rows = s
                .iter()
                .map(|&(t, x, steps, tr)| SampleRow { config_hash: hash.clone(), seed: config.seed, trial: t, step: 0, count: x, weight: 1.0, steps, truncated: tr })
                .collect();
            Ok((summarize(config, &params, &weighted, weighted.len() as u64, truncated, false, None), rows))
        }
        Mode::Driven => {
            let per: Vec<Result<Vec<(u64, u32, u64)>>> = (0..config.trials)
                .into_par_iter()
                .map(|t| driven_trial(&params, config.seed, t, config.burn_in(), config.samples))
                .collect();
            let mut rows = Vec::new();
            let mut means = Vec::with_capacity(per.len());
            for (t, r) in per.into_iter().enumerate() {
                let r = r?;
                means.push(r.iter().map(|s| s.1 as f64).sum::<f64>() / r.len().max(1) as f64);
                for (step, count, aval) in r {
                    rows.push(SampleRow { config_hash: hash.clone(), seed: config.seed, trial: t as u64, step, count, weight: 1.0, steps: aval, truncated: false });
                }
            }
            let weighted: Vec<(u32, f64)> = rows.iter().map(|r| (r.count, 1.0)).collect();
            Ok((summarize(config, &params, &weighted, weighted.len() as u64, 0, false, Some(&means)), rows))
        }
    })
}

/// Empirical histogram of driven-chain counts, normalized, over `additions`.
pub fn driven_histogram(params: &ModelParams, seed: u64, burn_in: u64, additions: u64) -> Result<Vec<f64>> {
    let mut hist = vec![0.0; params.n_sites as usize + 1];
    let mut rng = trial_rng(seed, 0);
    let mut config = MicroConfig::empty(params.n_sites);
    driven_chain_visit(params, &mut config, burn_in, &mut rng, |_| {})?;
    driven_chain_visit(params, &mut config, additions, &mut rng, |s| hist[s.particle_count as usize] += 1.0)?;
    for h in &mut hist {
        *h /= additions as f64;
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_mode_one_site() {
        let cfg = ExperimentConfig { n_sites: 1, mode: Mode::Exact, ..Default::default() };
        let (rep, rows) = run_stationary_sampling(&cfg).unwrap();
        assert!((rep.mean_count - 0.5).abs() < 1e-15);
        assert!((rep.sd_count - 0.5).abs() < 1e-15);
        assert_eq!(rows.len(), 2);
        assert_eq!(rep.shift_se, 0.0);
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = ExperimentConfig { trials: 0, ..Default::default() };
        assert!(run_stationary_sampling(&cfg).is_err());
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let base = ExperimentConfig { n_sites: 40, trials: 30, ..Default::default() };
        let (a, ra) = run_stationary_sampling(&base).unwrap();
        let (b, rb) = run_stationary_sampling(&ExperimentConfig { threads: 3, ..base.clone() }).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn driven_mode_runs() {
        let cfg = ExperimentConfig { n_sites: 10, trials: 2, samples: 50, mode: Mode::Driven, ..Default::default() };
        let (rep, rows) = run_stationary_sampling(&cfg).unwrap();
        assert_eq!(rows.len(), 100);
        assert_eq!(rep.samples, 100);
        assert!(rep.max_count <= 10);
        assert!(rep.shift_se > 0.0);
    }
}
