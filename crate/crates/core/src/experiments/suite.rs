use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Mode};
use super::stationary::{driven_histogram, run_stationary_sampling};
use crate::coarse::{band_law, band_parameters, build_band_chain, exit_probability_dense, exit_probability_exact, large_jump_bound, large_jump_tail};
use crate::count_chain::{CountChain, CountState, StepOutcome};
use crate::error::{Error, Result};
use crate::exact::{stationary_exact, sum_identity_first, sum_identity_second, DEFAULT_CAP};
use crate::micro::{eta_step, MicroConfig};
use crate::moments::moment_sweep;
use crate::params::ModelParams;
use crate::rng::trial_rng;
use crate::scaling::{first_passage_compare, ou_simulate, path_moments, window_regression, PassageSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteName {
    Identities,
    Oracles,
    Drift,
    CoarseGrain,
    Scaling,
    Stationary,
}

impl SuiteName {
    pub const ALL: [SuiteName; 6] = [
        SuiteName::Identities,
        SuiteName::Oracles,
        SuiteName::Drift,
        SuiteName::CoarseGrain,
        SuiteName::Scaling,
        SuiteName::Stationary,
    ];
}

impl std::str::FromStr for SuiteName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "identities" => Ok(SuiteName::Identities),
            "oracles" => Ok(SuiteName::Oracles),
            "drift" => Ok(SuiteName::Drift),
            "coarse_grain" => Ok(SuiteName::CoarseGrain),
            "scaling" => Ok(SuiteName::Scaling),
            "stationary" => Ok(SuiteName::Stationary),
            _ => Err(Error::Config(format!(
                "unknown suite '{s}' (identities|oracles|drift|coarse_grain|scaling|stationary)"
            ))),
        }
    }
}

/// One measured quantity against its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value <= threshold, value, threshold }
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), passed: value >= threshold, value, threshold }
    }

    /// `value` in [lo, hi]; `threshold` records lo, the name carries hi.
    fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: format!("{name}_in_{lo}_{hi}"), passed: lo <= value && value <= hi, value, threshold: lo }
    }

    fn failed(name: &str) -> Self {
        Self { name: name.into(), passed: false, value: f64::NAN, threshold: f64::NAN }
    }
}

/// Timing-free, so reruns serialize to identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: SuiteName,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs one suite on a pool of `config.threads` workers.
pub fn run_suite(config: &ExperimentConfig, name: SuiteName) -> Result<SuiteReport> {
    config.validate()?;
    let params = config.params()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let checks = pool.install(|| match name {
        SuiteName::Identities => identities(&params),
        SuiteName::Oracles => oracles(config, &params),
        SuiteName::Drift => drift(&params),
        SuiteName::CoarseGrain => coarse_grain(&params),
        SuiteName::Scaling => scaling(config, &params),
        SuiteName::Stationary => stationary(config, &params),
    })?;
    Ok(SuiteReport {
        suite: name,
        config_hash: config.hash(),
        config: config.clone(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Largest |total - 1| of the one-step law over all live states.
pub fn kernel_normalization_error(params: &ModelParams) -> Result<f64> {
    let chain = CountChain::new(*params);
    let n = params.n_sites;
    let worst: Vec<f64> = (1..=n)
        .into_par_iter()
        .map(|x| {
            let mut w: f64 = 0.0;
            for y in 1..=x {
                let law = chain.increment_law(CountState::new(x, y))?;
                w = w.max((law.total() - 1.0).abs());
            }
            Ok(w)
        })
        .collect::<Result<_>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

/// Largest relative error of both sum identities over n <= n_max, n < m <= m_max.
pub fn sum_identity_error(n_max: u64, m_max: u64) -> Result<(f64, f64)> {
    let per: Vec<(f64, f64)> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let (mut e1, mut e2): (f64, f64) = (0.0, 0.0);
            for m in n + 1..=m_max {
                let (l, r) = sum_identity_first(n, m)?;
                e1 = e1.max(rel_err(l, r));
                let (l, r) = sum_identity_second(n, m)?;
                e2 = e2.max(rel_err(l, r));
            }
            Ok((e1, e2))
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().fold((0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1))))
}

fn identities(params: &ModelParams) -> Result<Vec<Check>> {
    let mut out = vec![Check::at_most("kernel_normalization", kernel_normalization_error(params)?, 1e-12)];
    let (e1, e2) = sum_identity_error(200, 1000)?;
    out.push(Check::at_most("sum_identity_first", e1, 1e-12));
    out.push(Check::at_most("sum_identity_second", e2, 1e-12));
    if params.n_sites <= DEFAULT_CAP {
        let mu = stationary_exact(params)?;
        out.push(Check::at_most("stationary_mass", (mu.total() - 1.0).abs(), 1e-10));
        let neg = mu.mass.iter().copied().fold(0.0, f64::min);
        out.push(Check::at_least("stationary_nonnegative", neg, -1e-14));
    }
    Ok(out)
}

fn outcome_index(o: StepOutcome, n: u32) -> usize {
    match o {
        StepOutcome::Sleep => 0,
        StepOutcome::Exit(k) => 1 + k as usize,
        StepOutcome::Settle(k) => 2 + n as usize + k as usize,
    }
}

/// Micro-vs-count comparison at one state: (max z-score, TV, outcome count).
pub fn eta_law_comparison(params: &ModelParams, s: CountState, samples: u64, seed: u64, stream: u64) -> Result<(f64, f64, usize)> {
    let n = params.n_sites;
    let law = CountChain::new(*params).increment_law(s)?;
    let mut expected = vec![0.0; 2 * n as usize + 3];
    for (o, p) in law.entries() {
        expected[outcome_index(o, n)] += p;
    }
    let start = MicroConfig::from_counts(n, s)?;
    let mut counts = vec![0u64; expected.len()];
    let mut rng = trial_rng(seed, stream);
    let mut config = start.clone();
    for _ in 0..samples {
        config.sites.copy_from_slice(&start.sites);
        counts[outcome_index(eta_step(params, &mut config, &mut rng)?, n)] += 1;
    }
    let m = samples as f64;
    let (mut z_max, mut tv): (f64, f64) = (0.0, 0.0);
    let mut support = 0;
    for (p, &c) in expected.iter().zip(&counts) {
        let f = c as f64 / m;
        tv += (f - p).abs();
        if *p > 0.0 {
            support += 1;
            let se = (p * (1.0 - p) / m).sqrt();
            if se > 0.0 {
                z_max = z_max.max((f - p).abs() / se);
            } else if f != *p {
                z_max = f64::INFINITY;
            }
        } else if c > 0 {
            z_max = f64::INFINITY;
        }
    }
    Ok((z_max, tv / 2.0, support))
}

/// Every live state for every site count up to `n_max`, in a fixed order.
pub fn small_states(n_max: u32) -> Vec<(u32, CountState)> {
    let mut v = Vec::new();
    for n in 1..=n_max {
        for x in 1..=n {
            for y in 1..=x {
                v.push((n, CountState::new(x, y)));
            }
        }
    }
    v
}

fn oracles(config: &ExperimentConfig, params: &ModelParams) -> Result<Vec<Check>> {
    let n_o = params.n_sites.min(6);
    let states = small_states(n_o);
    let rows: Vec<(f64, f64)> = states
        .par_iter()
        .enumerate()
        .map(|(i, &(n, s))| {
            let p = ModelParams::new(n, params.lambda)?;
            let (z, tv, k) = eta_law_comparison(&p, s, config.samples, config.seed, i as u64)?;
            Ok((z, tv / (k as f64 / config.samples as f64).sqrt()))
        })
        .collect::<Result<_>>()?;
    let z = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let tv = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let n_d = params.n_sites.min(20);
    let p_d = ModelParams::new(n_d, params.lambda)?;
    let mu = stationary_exact(&p_d)?;
    let hist = driven_histogram(&p_d, config.seed, config.burn_in(), 100 * config.samples)?;
    Ok(vec![
        Check::at_most("eta_law_max_z", z, 4.0),
        Check::at_most("eta_law_tv_over_sqrt_k_per_m", tv, 1.0),
        Check::at_most("driven_histogram_tv", mu.total_variation(&hist), 0.01),
    ])
}

fn drift(params: &ModelParams) -> Result<Vec<Check>> {
    let n_e = params.n_sites.min(60);
    let p_e = ModelParams::new(n_e, params.lambda)?;
    let rows = moment_sweep(&p_e, 1..=n_e)?;
    let d = rows.iter().map(|r| (r.drift - r.drift_enum).abs()).fold(0.0, f64::max);
    let v = rows.iter().map(|r| rel_err(r.second_enum, r.second)).fold(0.0, f64::max);
    let mut excess: f64 = f64::NEG_INFINITY;
    for x in 1..=n_e {
        for y in 1..=x {
            for m in [0u32, 1, 3] {
                let t = large_jump_tail(&p_e, CountState::new(x, y), m)?;
                excess = excess.max(t - large_jump_bound(&p_e, x, m));
            }
        }
    }
    Ok(vec![
        Check::at_most("drift_closed_form", d, 1e-12),
        Check::at_most("second_moment_closed_form", v, 1e-12),
        Check::at_most("large_jump_bound_excess", excess, 1e-15),
    ])
}

/// x-hat used by the coarse-grain suite: 1.5 a keeps ten bands valid at N = 1e4.
pub fn coarse_grain_x_hat(params: &ModelParams) -> f64 {
    1.5 * params.a()
}

fn coarse_grain(params: &ModelParams) -> Result<Vec<Check>> {
    let x_hat = coarse_grain_x_hat(params);
    let report = match build_band_chain(params, x_hat, false) {
        Ok(r) => r,
        Err(_) => return Ok(vec![Check::failed("band_chain_built")]),
    };
    let l = params.lambda;
    let quarter = params.n().powf(0.25);
    let (mut th, mut fr): (f64, f64) = (0.0, 0.0);
    let mut used = 0;
    for row in report.rows.iter().filter(|r| (1..=10).contains(&r.k)) {
        let pred = (1.0 + l) / l * row.delta_k;
        th = th.max((row.theta_star / pred - 1.0).abs());
        let ratio = (1.0 - row.f_k) / row.f_k / ((row.k as f64 + 1.5) / (l * quarter)).exp();
        fr = fr.max((ratio - 1.0).abs());
        used += 1;
    }
    let chain = &report.chain;
    let mut hit: f64 = 0.0;
    for k in chain.k_min..=chain.k_max() {
        hit = hit.max((chain.hitting_probability(k)? - chain.hitting_probability_linear(k)?).abs());
    }
    let band = band_parameters(params, 0, x_hat, false)?;
    let law = band_law(params, &band)?;
    let (lo, hi) = band.lattice();
    let mut exit: f64 = 0.0;
    if hi - lo < 4000 {
        for z in [lo, band.center(), hi] {
            let a = exit_probability_exact(&law, lo, hi, z)?;
            exit = exit.max((a - exit_probability_dense(&law, lo, hi, z)?).abs());
        }
    }
    Ok(vec![
        Check::at_least("bands_checked", used as f64, 10.0),
        Check::at_most("theta_star_rel_error", th, 0.2),
        Check::at_most("resistance_ratio_rel_error", fr, 0.1),
        Check::at_most("hitting_resistance_vs_linear", hit, 1e-10),
        Check::at_most("exit_recurrence_vs_dense", exit, 1e-10),
    ])
}

/// Stationary OU variance pooled over `paths` paths with R(0) ~ N(0, 1).
pub fn ou_stationary_variance(seed: u64, paths: u64, horizon: f64, dt: f64) -> Result<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let runs: Vec<Vec<f64>> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let r0: f64 = StandardNormal.sample(&mut rng);
            ou_simulate(r0, horizon, dt, &mut rng)
        })
        .collect::<Result<_>>()?;
    Ok(path_moments(&runs, 1).1)
}

fn scaling(config: &ExperimentConfig, params: &ModelParams) -> Result<Vec<Check>> {
    let reg = window_regression(params, params.a(), 32, 100 * params.n_sites as u64, config.seed)?;
    let var = ou_stationary_variance(config.seed, 100, 1000.0, 0.01)?;
    let set = PassageSettings {
        epsilon: config.epsilon_window,
        level_multiplier: 1.0,
        samples: config.trials.max(100),
        horizon: 20.0,
        dt: 0.01,
        seed: config.seed,
    };
    let cmp = first_passage_compare(params, &set)?;
    Ok(vec![
        Check::within("drift_coefficient", reg.drift_coefficient, -1.15, -0.85),
        Check::within("variance_coefficient", reg.variance_coefficient, 1.7, 2.3),
        Check::within("ou_stationary_variance", var, 0.98, 1.02),
        Check::at_least("passage_median_ratio", cmp.median_ratio, 5.0),
    ])
}

fn stationary(config: &ExperimentConfig, params: &ModelParams) -> Result<Vec<Check>> {
    let (rep, rows) = run_stationary_sampling(config)?;
    let mut out = vec![
        Check::at_least("within_deviation_fraction", rep.within_deviation_fraction, 1.0),
        Check::at_most("below_deviation_fraction", rep.below_deviation_fraction, 0.0),
        Check::within("shift_estimate", rep.shift_estimate, 0.2, 0.8),
        Check::at_most("truncated", rep.truncated as f64, 0.0),
    ];
    if config.mode != Mode::Exact {
        out.push(Check::at_least("shift_lower_99", rep.shift_lower_99, f64::MIN_POSITIVE));
    }
    if config.mode == Mode::Hitting {
        let cap = 0.9 * (1.0 + params.lambda) * params.n() * params.n();
        let slow = rows.iter().filter(|r| r.truncated || r.steps as f64 > cap).count();
        out.push(Check::at_most("slow_stabilization_fraction", slow as f64 / rows.len() as f64, 0.05));
    }
    Ok(out)
}
