//! Diffusive rescaling R_s = S(t0 + sN) / sqrt(lambda N) near the critical
//! line, the Ornstein-Uhlenbeck reference dR = -R ds + sqrt(2) dB, and
//! first-passage comparisons between the two.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::count_chain::{CountChain, CountState, PathPoint};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::rng::trial_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalConstants {
    pub rho_c: f64,
    pub a: f64,
}

pub fn critical_constants(lambda: f64) -> Result<CriticalConstants> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    Ok(CriticalConstants { rho_c: lambda / (1.0 + lambda), a: lambda.sqrt() / (1.0 + lambda) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledPath {
    /// (s, r) pairs, s in units of N steps.
    pub samples: Vec<(f64, f64)>,
    /// x-hat at t0.
    pub x_hat0: f64,
    /// x-hat at t0 outside [0.1, 10], i.e. not on the sqrt(N log N) scale.
    pub off_window: bool,
    /// Fewer than two samples after t0.
    pub empty: bool,
}

/// Rescales a fully recorded path from time t0 on.
pub fn rescale_trajectory(params: &ModelParams, path: &[PathPoint], t0: u64) -> Result<RescaledPath> {
    let start = path
        .iter()
        .position(|p| p.t == t0)
        .ok_or_else(|| Error::Domain(format!("t0={t0} not in trajectory")))?;
    let n = params.n();
    let l = params.lambda;
    let norm = (l * n).sqrt();
    let samples: Vec<(f64, f64)> = path[start..]
        .iter()
        .map(|p| {
            let s = p.y as f64 - (1.0 + l) * p.x as f64 + l * n;
            ((p.t - t0) as f64 / n, s / norm)
        })
        .collect();
    let x_hat0 = (path[start].x as f64 - params.rho_c() * n) / params.window_scale();
    Ok(RescaledPath {
        empty: samples.len() < 2,
        off_window: !(0.1..=10.0).contains(&x_hat0.abs()),
        x_hat0,
        samples,
    })
}

/// Running sums for regressing dR on R.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub count: u64,
    pub sum_r: f64,
    pub sum_rr: f64,
    pub sum_d: f64,
    pub sum_rd: f64,
    pub sum_dd: f64,
}

impl Regression {
    #[inline]
    pub fn push(&mut self, r: f64, d: f64) {
        self.count += 1;
        self.sum_r += r;
        self.sum_rr += r * r;
        self.sum_d += d;
        self.sum_rd += r * d;
        self.sum_dd += d * d;
    }

    pub fn merge(&mut self, o: &Regression) {
        self.count += o.count;
        self.sum_r += o.sum_r;
        self.sum_rr += o.sum_rr;
        self.sum_d += o.sum_d;
        self.sum_rd += o.sum_rd;
        self.sum_dd += o.sum_dd;
    }

    /// OLS slope of dR on R.
    pub fn slope(&self) -> f64 {
        let n = self.count as f64;
        let cov = self.sum_rd - self.sum_r * self.sum_d / n;
        let var = self.sum_rr - self.sum_r * self.sum_r / n;
        cov / var
    }

    /// Residual variance of dR after the fit.
    pub fn residual_variance(&self) -> f64 {
        let n = self.count as f64;
        let b = self.slope();
        let a = (self.sum_d - b * self.sum_r) / n;
        let rss = self.sum_dd - 2.0 * a * self.sum_d - 2.0 * b * self.sum_rd
            + n * a * a
            + 2.0 * a * b * self.sum_r
            + b * b * self.sum_rr;
        rss / n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    /// slope / ds; the OU value is -1.
    pub drift_coefficient: f64,
    /// conditional variance / ds; the OU value is 2.
    pub variance_coefficient: f64,
    pub steps: u64,
    pub segments: u64,
    pub stats: Regression,
}

/// Runs `segments` chain pieces of `segment_steps` each, every one started at
/// x-hat = `x_hat` with S in (-1, 0], and regresses dR on R.
pub fn window_regression(
    params: &ModelParams,
    x_hat: f64,
    segments: u64,
    segment_steps: u64,
    seed: u64,
) -> Result<RegressionReport> {
    let chain = CountChain::new(*params);
    let start = window_start(params, x_hat)?;
    let n = params.n();
    let l = params.lambda;
    let norm = (l * n).sqrt();
    let parts: Vec<Result<(Regression, u64)>> = (0..segments)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i);
            let mut reg = Regression::default();
            let mut prev: Option<f64> = None;
            let sum = chain.run_observed(start, &mut rng, segment_steps, |_, s| {
                let r = (s.y as f64 - (1.0 + l) * s.x as f64 + l * n) / norm;
                if let Some(p) = prev {
                    reg.push(p, r - p);
                }
                prev = Some(r);
                true
            })?;
            Ok((reg, sum.steps))
        })
        .collect();
    let mut stats = Regression::default();
    let mut steps = 0;
    for p in parts {
        let (r, s) = p?;
        stats.merge(&r);
        steps += s;
    }
    Ok(RegressionReport {
        drift_coefficient: stats.slope() * n,
        variance_coefficient: stats.residual_variance() * n,
        steps,
        segments,
        stats,
    })
}

/// State at x-hat with y = floor(l(x)), so S lies in (-1, 0].
pub fn window_start(params: &ModelParams, x_hat: f64) -> Result<CountState> {
    let n = params.n();
    let x = (params.rho_c() * n + x_hat * params.window_scale()).round();
    let y = ((1.0 + params.lambda) * x - params.lambda * n).floor();
    if !(x <= n && y >= 1.0 && y <= x) {
        return Err(Error::Domain(format!("x_hat={x_hat} gives no live state on the line")));
    }
    Ok(CountState::new(x as u32, y as u32))
}

/// Euler-Maruyama path on the grid 0, dt, ..., horizon.
pub fn ou_simulate<R: Rng + ?Sized>(r0: f64, horizon: f64, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_dt(dt)?;
    let steps = (horizon / dt).round() as usize;
    let sd = (2.0 * dt).sqrt();
    let mut path = Vec::with_capacity(steps + 1);
    let mut r = r0;
    path.push(r);
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        r += -r * dt + sd * z;
        path.push(r);
    }
    Ok(path)
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt <= 1e-2) {
        return Err(Error::Domain(format!("dt must be in (0, 0.01], got {dt}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Passage {
    Hit(f64),
    Censored,
}

impl Passage {
    /// Censored counts as +infinity.
    pub fn time_or_inf(&self) -> f64 {
        match self {
            Passage::Hit(t) => *t,
            Passage::Censored => f64::INFINITY,
        }
    }
}

/// First time the OU path started at r0 is at or below `level`.
pub fn ou_first_passage<R: Rng + ?Sized>(level: f64, r0: f64, horizon: f64, dt: f64, rng: &mut R) -> Result<Passage> {
    check_dt(dt)?;
    if r0 <= level {
        return Ok(Passage::Hit(0.0));
    }
    let steps = (horizon / dt).round() as u64;
    let sd = (2.0 * dt).sqrt();
    let mut r = r0;
    for i in 1..=steps {
        let z: f64 = rng.sample(StandardNormal);
        r += -r * dt + sd * z;
        if r <= level {
            return Ok(Passage::Hit(i as f64 * dt));
        }
    }
    Ok(Passage::Censored)
}

/// Chain passage of S to -level sqrt(lambda N), or absorption, from the
/// line at x-hat; time in units of N steps.
pub fn chain_first_passage<R: Rng + ?Sized>(
    params: &ModelParams,
    x_hat: f64,
    level: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<Passage> {
    let chain = CountChain::new(*params);
    let start = window_start(params, x_hat)?;
    let n = params.n();
    let l = params.lambda;
    let threshold = -level * (l * n).sqrt();
    let max_steps = (horizon * n).round() as u64;
    let mut hit_at = None;
    let sum = chain.run_observed(start, rng, max_steps, |t, s| {
        let dev = s.y as f64 - (1.0 + l) * s.x as f64 + l * n;
        if dev <= threshold {
            hit_at = Some(t);
            return false;
        }
        true
    })?;
    Ok(match (hit_at, sum.absorbed) {
        (Some(t), _) => Passage::Hit(t as f64 / n),
        (None, true) => Passage::Hit(sum.steps as f64 / n),
        _ => Passage::Censored,
    })
}

/// Median with censored samples as +infinity; `None` if the median is censored.
pub fn censored_median(samples: &[Passage]) -> Option<f64> {
    let mut v: Vec<f64> = samples.iter().map(Passage::time_or_inf).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return None;
    }
    let m = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    m.is_finite().then_some(m)
}

/// Two-sample Kolmogorov-Smirnov distance; censored values sit at +infinity.
pub fn ks_statistic(a: &[Passage], b: &[Passage]) -> f64 {
    let mut x: Vec<f64> = a.iter().map(Passage::time_or_inf).collect();
    let mut y: Vec<f64> = b.iter().map(Passage::time_or_inf).collect();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        if !t.is_finite() {
            break;
        }
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    // whichever sample has finite values left
    while i < x.len() && x[i].is_finite() {
        i += 1;
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    while j < y.len() && y[j].is_finite() {
        j += 1;
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassageSettings {
    pub epsilon: f64,
    pub level_multiplier: f64,
    pub samples: u64,
    /// Horizon in rescaled time.
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageComparison {
    pub level_slow: f64,
    pub level_fast: f64,
    pub chain_slow: Vec<Passage>,
    pub chain_fast: Vec<Passage>,
    pub ou_slow: Vec<Passage>,
    pub ou_fast: Vec<Passage>,
    /// `None` when the median sample is censored.
    pub median_slow: Option<f64>,
    pub median_fast: Option<f64>,
    /// median_slow / median_fast, with the horizon in place of a censored median.
    pub median_ratio: f64,
    /// The ratio used the horizon, so the true value is at least this.
    pub ratio_is_lower_bound: bool,
    pub ks_slow: f64,
    pub ks_fast: f64,
}

/// Slow side: start at a + eps, level M = (1+lambda)(a+eps) sqrt(log N)/sqrt(lambda).
/// Fast side: start at a - eps, level M' with a - eps. Both scaled by `level_multiplier`.
pub fn first_passage_compare(params: &ModelParams, set: &PassageSettings) -> Result<PassageComparison> {
    if set.samples < 100 {
        return Err(Error::Domain("need at least 100 samples".into()));
    }
    let a = params.a();
    let l = params.lambda;
    let root_log = params.n().ln().sqrt();
    let level = |b: f64| set.level_multiplier * (1.0 + l) * b * root_log / l.sqrt();
    let (b_slow, b_fast) = (a + set.epsilon, a - set.epsilon);
    let (m_slow, m_fast) = (level(b_slow), level(b_fast));

    let run = |stream: u64, f: &(dyn Fn(&mut rand_chacha::ChaCha8Rng) -> Result<Passage> + Sync)| -> Result<Vec<Passage>> {
        (0..set.samples)
            .into_par_iter()
            .map(|i| f(&mut trial_rng(set.seed, stream * set.samples + i)))
            .collect()
    };
    let chain_slow = run(0, &|r| chain_first_passage(params, b_slow, m_slow, set.horizon, r))?;
    let chain_fast = run(1, &|r| chain_first_passage(params, b_fast, m_fast, set.horizon, r))?;
    let ou_slow = run(2, &|r| ou_first_passage(-m_slow, 0.0, set.horizon, set.dt, r))?;
    let ou_fast = run(3, &|r| ou_first_passage(-m_fast, 0.0, set.horizon, set.dt, r))?;

    let median_slow = censored_median(&chain_slow);
    let median_fast = censored_median(&chain_fast);
    let num = median_slow.unwrap_or(set.horizon);
    let den = median_fast.unwrap_or(set.horizon);
    let median_ratio = if num == 0.0 && den == 0.0 { 1.0 } else { num / den };
    Ok(PassageComparison {
        level_slow: m_slow,
        level_fast: m_fast,
        ks_slow: ks_statistic(&chain_slow, &ou_slow),
        ks_fast: ks_statistic(&chain_fast, &ou_fast),
        ratio_is_lower_bound: median_slow.is_none(),
        chain_slow,
        chain_fast,
        ou_slow,
        ou_fast,
        median_slow,
        median_fast,
        median_ratio,
    })
}

/// Mean, variance and lag-`lag` autocovariance over the pooled paths.
pub fn path_moments(paths: &[Vec<f64>], lag: usize) -> (f64, f64, f64) {
    let (mut n, mut s, mut ss) = (0.0, 0.0, 0.0);
    for p in paths {
        for &r in p {
            n += 1.0;
            s += r;
            ss += r * r;
        }
    }
    let mean = s / n;
    let var = ss / n - mean * mean;
    let (mut m, mut c) = (0.0, 0.0);
    for p in paths {
        for w in p.windows(lag + 1) {
            m += 1.0;
            c += (w[0] - mean) * (w[lag] - mean);
        }
    }
    (mean, var, c / m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constants() {
        let c = critical_constants(1.0).unwrap();
        assert_eq!((c.rho_c, c.a), (0.5, 0.5));
        let c = critical_constants(4.0).unwrap();
        assert_abs_diff_eq!(c.rho_c, 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(c.a, 0.4, epsilon = 1e-15);
        let c = critical_constants(1e-12).unwrap();
        assert!(c.rho_c < 1e-11 && c.a < 1e-5);
        assert!(critical_constants(0.0).is_err());
        for l in [0.1, 1.0, 3.0, 10.0] {
            let c = critical_constants(l).unwrap();
            assert_abs_diff_eq!(c.a * c.a * (1.0 + l) * (1.0 + l), l, epsilon = 1e-12);
            assert_abs_diff_eq!(c.rho_c * (1.0 + l), l, epsilon = 1e-12);
        }
    }

    #[test]
    fn rescale_constant_path() {
        let p = ModelParams::new(100, 1.0).unwrap();
        let path: Vec<PathPoint> = (0..5).map(|t| PathPoint { t, x: 60, y: 23 }).collect();
        let r = rescale_trajectory(&p, &path, 1).unwrap();
        assert_eq!(r.samples.len(), 4);
        for (i, &(s, v)) in r.samples.iter().enumerate() {
            assert_abs_diff_eq!(s, i as f64 / 100.0, epsilon = 1e-15);
            assert_abs_diff_eq!(v, 3.0 / 10.0, epsilon = 1e-15);
        }
        assert!(!r.empty);
        assert!(rescale_trajectory(&p, &path, 4).unwrap().empty);
        assert!(rescale_trajectory(&p, &path, 9).is_err());
    }

    #[test]
    fn ou_zero_level_is_immediate() {
        let mut rng = trial_rng(0, 0);
        assert_eq!(ou_first_passage(0.0, 0.0, 1.0, 1e-3, &mut rng).unwrap(), Passage::Hit(0.0));
        assert!(ou_first_passage(-1.0, 0.0, 1.0, 0.1, &mut rng).is_err());
    }

    #[test]
    fn ou_short_run_moments() {
        let mut rng = trial_rng(1, 0);
        let paths: Vec<Vec<f64>> = (0..20)
            .map(|_| {
                let r0: f64 = rng.sample(StandardNormal);
                ou_simulate(r0, 100.0, 1e-2, &mut rng).unwrap()
            })
            .collect();
        let (m, v, c) = path_moments(&paths, 100);
        assert!(m.abs() < 0.15, "{m}");
        assert!((v - 1.0).abs() < 0.15, "{v}");
        assert!((c - (-1f64).exp()).abs() < 0.15, "{c}");
    }

    #[test]
    fn medians_and_ks() {
        let a = [Passage::Hit(1.0), Passage::Hit(2.0), Passage::Censored];
        assert_eq!(censored_median(&a), Some(2.0));
        let b = [Passage::Hit(1.0), Passage::Censored, Passage::Censored];
        assert_eq!(censored_median(&b), None);
        assert_eq!(ks_statistic(&a, &a), 0.0);
        assert_abs_diff_eq!(ks_statistic(&a, &b), 1.0 / 3.0, epsilon = 1e-15);
        let c = [Passage::Hit(5.0), Passage::Hit(6.0), Passage::Hit(7.0)];
        let d = [Passage::Hit(1.0), Passage::Hit(2.0), Passage::Hit(3.0)];
        assert_eq!(ks_statistic(&c, &d), 1.0);
    }

    #[test]
    fn zero_level_ratio_is_one() {
        let p = ModelParams::new(2000, 1.0).unwrap();
        let set = PassageSettings { epsilon: 0.3, level_multiplier: 0.0, samples: 100, horizon: 1.0, dt: 1e-3, seed: 1 };
        let c = first_passage_compare(&p, &set).unwrap();
        assert_eq!(c.median_ratio, 1.0);
        assert_eq!(c.median_slow, Some(0.0));
    }

    #[test]
    fn regression_recovers_linear_model() {
        let mut reg = Regression::default();
        let mut rng = trial_rng(2, 0);
        for _ in 0..100_000 {
            let r: f64 = rng.sample(StandardNormal);
            let e: f64 = rng.sample(StandardNormal);
            reg.push(r, 0.5 - 2.0 * r + 0.3 * e);
        }
        assert_abs_diff_eq!(reg.slope(), -2.0, epsilon = 0.01);
        assert_abs_diff_eq!(reg.residual_variance(), 0.09, epsilon = 0.003);
    }
}
