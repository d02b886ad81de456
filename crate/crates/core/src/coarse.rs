//! Coarse-graining of the deviation process into bands of width 2 N^{3/8}.
//!
//! Inside band k the increment U = -dY of Z = l(X) - Y is bounded in
//! stochastic order by the law at a fixed anchor state (x, y_k*). The
//! i.i.d. walk with that law gives an interval-exit probability f_k; the
//! f_k become up-probabilities of a birth-and-death chain over bands, whose
//! hitting probabilities are resistance ratios.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::count_chain::{CountChain, CountState, IncrementLaw};
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Mass left out when truncating the wake-count tail.
pub const SUPPORT_TAIL: f64 = 1e-15;
/// Largest lattice handled by the exit-probability recurrence.
pub const MAX_LATTICE: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub k: i64,
    pub barred: bool,
    /// Requested x-hat = (x - rho_c N) / sqrt(N log N).
    pub x_hat: f64,
    /// Integer anchor x (x_* = x - log^2 N for the barred variant).
    pub anchor_x: u32,
    /// x-hat of the anchor actually used.
    pub anchor_x_hat: f64,
    /// N^{3/8}.
    pub width_scale: f64,
    /// Open interval ((k-1) w, (k+1) w).
    pub lower: f64,
    pub upper: f64,
    pub z_star: f64,
    pub y_star: u32,
    pub delta_k: f64,
    pub k_minus: i64,
    pub k_plus: i64,
    /// log^2 N.
    pub m_jump: f64,
}

impl BandSpec {
    pub fn anchor_state(&self) -> CountState {
        CountState::new(self.anchor_x, self.y_star)
    }

    /// Integer points strictly inside the band.
    pub fn lattice(&self) -> (i64, i64) {
        (self.lower.floor() as i64 + 1, self.upper.ceil() as i64 - 1)
    }

    /// kN^{3/8}, rounded.
    pub fn center(&self) -> i64 {
        (self.k as f64 * self.width_scale).round() as i64
    }

    /// Leading-order tilt ((1+lambda)/lambda) delta_k.
    pub fn theta_prediction(&self, lambda: f64) -> f64 {
        (1.0 + lambda) / lambda * self.delta_k
    }
}

pub fn band_constants(params: &ModelParams, x_hat: f64) -> (f64, i64, i64, f64) {
    let n = params.n();
    let ln = n.ln();
    let w = n.powf(0.375);
    let k_minus = n.powf(0.125).floor() as i64;
    let k_plus = ((1.0 + params.lambda) * x_hat * n.powf(0.125) * ln.sqrt()).floor() as i64;
    (w, k_minus, k_plus, ln * ln)
}

pub fn band_parameters(params: &ModelParams, k: i64, x_hat: f64, barred: bool) -> Result<BandSpec> {
    let n = params.n();
    let scale = params.window_scale();
    if scale == 0.0 {
        return Err(Error::Domain("band geometry needs N >= 2".into()));
    }
    let m_jump = n.ln().powi(2);
    let mut x = (params.rho_c() * n + x_hat * scale).round();
    if barred {
        x = (x - m_jump).round();
    }
    if !(0.0..=n).contains(&x) {
        return Err(Error::Domain(format!("anchor x={x} outside [0, N]")));
    }
    let anchor_x_hat = (x - params.rho_c() * n) / scale;
    let (w, k_minus, k_plus, _) = band_constants(params, anchor_x_hat);
    if k < -k_minus || k > k_plus {
        return Err(Error::Domain(format!("k={k} outside [-{k_minus}, {k_plus}]")));
    }
    let offset = if barred { -1.5 } else { 1.5 };
    let z_star = (k as f64 + offset) * w;
    let ell = (1.0 + params.lambda) * x - params.lambda * n;
    let y = (ell - z_star).floor();
    // y = 0 is absorbed and has no increment law
    if y < 1.0 || y > x {
        return Err(Error::Domain(format!("y_k*={y} outside [1, {x}] for k={k}")));
    }
    let delta_k = (x - y) / (n - y) - params.rho_c();
    Ok(BandSpec {
        k,
        barred,
        x_hat,
        anchor_x: x as u32,
        anchor_x_hat,
        width_scale: w,
        lower: (k as f64 - 1.0) * w,
        upper: (k as f64 + 1.0) * w,
        z_star,
        y_star: y as u32,
        delta_k,
        k_minus,
        k_plus,
        m_jump,
    })
}

/// Distribution on consecutive integers `min..min + probs.len()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegerLaw {
    pub min: i64,
    pub probs: Vec<f64>,
}

impl IntegerLaw {
    pub fn new(min: i64, probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Domain("law needs nonnegative probabilities".into()));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("probabilities sum to {s}")));
        }
        Ok(Self { min, probs })
    }

    /// Law of U = -dY, with the wake-count tail cut at cumulative 1 - `tail`
    /// and the cut mass moved onto the largest kept wake count.
    pub fn from_increment_law(law: &IncrementLaw, tail: f64) -> Self {
        // dy[j] = P[dY = j - 1]  <=>  U = 1 - j
        let dy = law.dy_marginal();
        let mut kept = Vec::with_capacity(dy.len());
        let mut acc = 0.0;
        for &p in &dy {
            kept.push(p);
            acc += p;
            if acc >= 1.0 - tail {
                break;
            }
        }
        let last = kept.len() - 1;
        kept[last] += (1.0 - acc).max(0.0);
        kept.reverse();
        Self { min: 1 - last as i64, probs: kept }
    }

    pub fn max(&self) -> i64 {
        self.min + self.probs.len() as i64 - 1
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(i, &p)| (self.min + i as i64, p))
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(u, p)| u as f64 * p).sum()
    }

    /// E[exp(theta U)] - 1, accurate near theta = 0.
    pub fn mgf_minus_one(&self, theta: f64) -> f64 {
        self.iter().map(|(u, p)| p * (theta * u as f64).exp_m1()).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        let mut u: f64 = rng.random();
        for (i, &p) in self.probs.iter().enumerate() {
            if u < p {
                return self.min + i as i64;
            }
            u -= p;
        }
        self.max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TiltRoot {
    /// Nonzero theta with E[exp(theta U)] = 1.
    Root(f64),
    /// Zero drift: theta = 0 is the only root.
    Degenerate,
}

impl TiltRoot {
    pub fn value(&self) -> f64 {
        match self {
            TiltRoot::Root(t) => *t,
            TiltRoot::Degenerate => 0.0,
        }
    }
}

/// Nonzero root of E[exp(theta U)] = 1. The bracket starts at `prediction`
/// +-50% and widens geometrically; |theta| >= 1e-3 |prediction| keeps it
/// away from the trivial root.
pub fn theta_star_for_law(law: &IntegerLaw, prediction: Option<f64>) -> Result<TiltRoot> {
    let mu = law.mean();
    if mu.abs() < 1e-15 {
        return Ok(TiltRoot::Degenerate);
    }
    // psi is convex with psi(0) = 0, so the other root has sign opposite to the mean
    let sign = -mu.signum();
    let second: f64 = law.iter().map(|(u, p)| p * (u * u) as f64).sum();
    let guess = prediction.filter(|p| *p != 0.0).map(f64::abs).unwrap_or((2.0 * mu / second).abs());
    let psi = |t: f64| law.mgf_minus_one(sign * t);
    let floor = 1e-3 * guess;
    let (mut lo, mut hi) = (0.5 * guess, 1.5 * guess);
    while psi(lo) > 0.0 {
        lo *= 0.5;
        if lo < floor {
            return Err(Error::RootNotBracketed);
        }
    }
    let mut tries = 0;
    while psi(hi) < 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 || !psi(hi).is_finite() {
            return Err(Error::RootNotBracketed);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if psi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    if psi(t).abs() > 1e-12 {
        return Err(Error::RootNotBracketed);
    }
    Ok(TiltRoot::Root(sign * t))
}

pub fn band_law(params: &ModelParams, band: &BandSpec) -> Result<IntegerLaw> {
    let law = CountChain::new(*params).increment_law(band.anchor_state())?;
    Ok(IntegerLaw::from_increment_law(&law, SUPPORT_TAIL))
}

pub fn theta_star(params: &ModelParams, band: &BandSpec) -> Result<TiltRoot> {
    let law = band_law(params, band)?;
    theta_star_for_law(&law, Some(band.theta_prediction(params.lambda)))
}

fn check_interval(lo: i64, hi: i64, start: i64) -> Result<usize> {
    if hi < lo || start < lo || start > hi {
        return Err(Error::Domain(format!("start {start} not inside [{lo}, {hi}]")));
    }
    let size = (hi - lo + 1) as usize;
    if size > MAX_LATTICE {
        return Err(Error::Domain(format!("interval has {size} points, limit {MAX_LATTICE}")));
    }
    Ok(size)
}

/// P[walk from `start` leaves [lo, hi] above hi] for i.i.d. increments.
///
/// Laws whose largest step is +1 use a forward recurrence: up to scale, the
/// exit probability is determined from the bottom of the interval. Other
/// laws fall back to a dense solve.
pub fn exit_probability_exact(law: &IntegerLaw, lo: i64, hi: i64, start: i64) -> Result<f64> {
    let size = check_interval(lo, hi, start)?;
    if law.max() != 1 || law.probs[law.probs.len() - 1] == 0.0 {
        return exit_probability_dense(law, lo, hi, start);
    }
    let p_up = *law.probs.last().unwrap();
    let p_stay = if law.min <= 0 { law.probs[(-law.min) as usize] } else { 0.0 };
    // alpha[i] ~ h(lo + i); alpha[size] is the up-exit level
    let mut alpha = vec![0.0; size + 1];
    alpha[0] = 1.0;
    for i in 0..size {
        let mut s = alpha[i] * (1.0 - p_stay);
        for (u, p) in law.iter() {
            if u >= 0 {
                break;
            }
            let j = i as i64 + u;
            if j < 0 {
                continue;
            }
            s -= p * alpha[j as usize];
        }
        alpha[i + 1] = s / p_up;
        if alpha[i + 1] > 1e250 {
            for a in &mut alpha[..=i + 1] {
                *a *= 1e-250;
            }
        }
    }
    Ok((alpha[(start - lo) as usize] / alpha[size]).clamp(0.0, 1.0))
}

/// First-step analysis solved by LU; the oracle for the recurrence.
pub fn exit_probability_dense(law: &IntegerLaw, lo: i64, hi: i64, start: i64) -> Result<f64> {
    let size = check_interval(lo, hi, start)?;
    if size > 4000 {
        return Err(Error::Domain("dense exit solve limited to 4000 points".into()));
    }
    let mut a = DMatrix::<f64>::identity(size, size);
    let mut b = DVector::<f64>::zeros(size);
    for i in 0..size {
        let z = lo + i as i64;
        for (u, p) in law.iter() {
            let t = z + u;
            if t > hi {
                b[i] += p;
            } else if t >= lo {
                a[(i, (t - lo) as usize)] -= p;
            }
        }
    }
    let h = a.lu().solve(&b).ok_or_else(|| Error::Solver("singular exit system".into()))?;
    Ok(h[(start - lo) as usize])
}

/// f_k: the up-exit probability maximised over starts within 2M of kN^{3/8}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitReport {
    pub f_center: f64,
    pub f_max: f64,
    pub argmax_start: i64,
    /// Start window clipped to the band lattice.
    pub window: (i64, i64),
}

pub fn band_exit_probability(params: &ModelParams, band: &BandSpec) -> Result<ExitReport> {
    let law = band_law(params, band)?;
    let (lo, hi) = band.lattice();
    let c = band.center().clamp(lo, hi);
    let f_center = exit_probability_exact(&law, lo, hi, c)?;
    let m2 = (2.0 * band.m_jump).round() as i64;
    let (a, b) = ((c - m2).max(lo), (c + m2).min(hi));
    let span = (b - a) as usize;
    let stride = if 2 * span < 1000 { 1 } else { ((band.m_jump / 10.0).round() as i64).max(1) };
    let mut best = (f64::NEG_INFINITY, a);
    let mut z = a;
    while z <= b {
        let f = exit_probability_exact(&law, lo, hi, z)?;
        if f > best.0 {
            best = (f, z);
        }
        if z == b {
            break;
        }
        z = (z + stride).min(b);
    }
    Ok(ExitReport { f_center, f_max: best.0, argmax_start: best.1, window: (a, b) })
}

/// Birth-and-death chain on {k_min - 1, ..., k_min + g.len()} with absorbing ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthDeathChain {
    pub k_min: i64,
    /// Up-probability at each interior state.
    pub g: Vec<f64>,
}

impl BirthDeathChain {
    pub fn new(k_min: i64, g: Vec<f64>) -> Result<Self> {
        if g.is_empty() || g.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::Domain("need 0 < g_k < 1 for every interior state".into()));
        }
        Ok(Self { k_min, g })
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.g.len() as i64 - 1
    }

    /// log r(k, k+1) for k = k_min - 1 ..= k_max; r(k, k+1) = prod_{j=k_min}^{k} (1-g_j)/g_j.
    pub fn log_resistances(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.g.len() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for &g in &self.g {
            acc += (1.0 - g).ln() - g.ln();
            out.push(acc);
        }
        out
    }

    pub fn resistances(&self) -> Vec<f64> {
        self.log_resistances().into_iter().map(f64::exp).collect()
    }

    fn check_start(&self, start: i64) -> Result<usize> {
        if start < self.k_min || start > self.k_max() {
            return Err(Error::Domain(format!("start {start} not strictly inside the chain")));
        }
        Ok((start - self.k_min) as usize)
    }

    /// P[hit top before bottom] = R(bottom <-> start) / R(bottom <-> top).
    pub fn hitting_probability(&self, start: i64) -> Result<f64> {
        let i = self.check_start(start)?;
        let lr = self.log_resistances();
        // edges below start are indices 0..=i
        Ok((log_sum_exp(&lr[..=i]) - log_sum_exp(&lr)).exp())
    }

    /// Same probability from the tridiagonal first-step equations.
    pub fn hitting_probability_linear(&self, start: i64) -> Result<f64> {
        let i = self.check_start(start)?;
        let n = self.g.len();
        // -(1-g_k) h_{k-1} + h_k - g_k h_{k+1} = 0; h(bottom) = 0, h(top) = 1
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for k in 0..n {
            let a = if k > 0 { -(1.0 - self.g[k]) } else { 0.0 };
            let c = if k + 1 < n { -self.g[k] } else { 0.0 };
            let d = if k + 1 == n { self.g[k] } else { 0.0 };
            let denom = 1.0 - a * if k > 0 { c_prime[k - 1] } else { 0.0 };
            c_prime[k] = c / denom;
            d_prime[k] = (d - a * if k > 0 { d_prime[k - 1] } else { 0.0 }) / denom;
        }
        let mut h = vec![0.0; n];
        h[n - 1] = d_prime[n - 1];
        for k in (0..n - 1).rev() {
            h[k] = d_prime[k] - c_prime[k] * h[k + 1];
        }
        Ok(h[i])
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Per-band quantities, one CSV row each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub k: i64,
    pub delta_k: f64,
    pub theta_star: f64,
    pub f_k: f64,
    pub r_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandChainReport {
    pub chain: BirthDeathChain,
    pub rows: Vec<BandRow>,
    /// K+ from the formula.
    pub k_plus: i64,
    /// Largest band with a valid anchor; below k_plus at small N.
    pub k_plus_used: i64,
}

/// Chain with g_k = f_k (centre start) for every valid band.
pub fn build_band_chain(params: &ModelParams, x_hat: f64, barred: bool) -> Result<BandChainReport> {
    let first = band_parameters(params, 0, x_hat, barred)?;
    let (k_minus, k_plus) = (first.k_minus, first.k_plus);
    let mut bands = Vec::new();
    for k in -k_minus..=k_plus {
        match band_parameters(params, k, x_hat, barred) {
            Ok(b) => bands.push(b),
            Err(_) if k > 0 => break,
            Err(e) => return Err(e),
        }
    }
    let mut g = Vec::with_capacity(bands.len());
    let mut thetas = Vec::with_capacity(bands.len());
    for b in &bands {
        g.push(band_exit_probability(params, b)?.f_center);
        thetas.push(theta_star(params, b).map(|t| t.value()).unwrap_or(f64::NAN));
    }
    let chain = BirthDeathChain::new(-k_minus, g)?;
    let r = chain.resistances();
    let rows = bands
        .iter()
        .enumerate()
        .map(|(i, b)| BandRow { k: b.k, delta_k: b.delta_k, theta_star: thetas[i], f_k: chain.g[i], r_k: r[i + 1] })
        .collect();
    let k_plus_used = chain.k_max();
    Ok(BandChainReport { chain, rows, k_plus, k_plus_used })
}

/// exp(-(1+lambda)^2 x_hat^2 log N / (2 lambda)); equals N^{-1/2} at x_hat = a.
pub fn absorption_exponent_factor(params: &ModelParams, x_hat: f64) -> f64 {
    let l = params.lambda;
    (-(1.0 + l).powi(2) * x_hat * x_hat * params.n().ln() / (2.0 * l)).exp()
}

/// x_hat sqrt(log N) times the exponent factor (unit constant).
pub fn absorption_window_estimate(params: &ModelParams, x_hat: f64) -> Result<f64> {
    if !(x_hat > 0.0) {
        return Err(Error::Domain("x_hat must be positive".into()));
    }
    Ok(x_hat * params.n().ln().sqrt() * absorption_exponent_factor(params, x_hat))
}

/// Exact P[dY > m] at a state.
pub fn large_jump_tail(params: &ModelParams, s: CountState, m: u32) -> Result<f64> {
    let law = CountChain::new(*params).increment_law(s)?;
    Ok(law.dy_marginal().iter().skip(m as usize + 2).sum())
}

/// (1/(1+lambda)) ((N+1)/N) (x/(N+2))^{m+1}.
pub fn large_jump_bound(params: &ModelParams, x: u32, m: u32) -> f64 {
    let n = params.n();
    (n + 1.0) / n / (1.0 + params.lambda) * (x as f64 / (n + 2.0)).powi(m as i32 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(n: u32) -> ModelParams {
        ModelParams::new(n, 1.0).unwrap()
    }

    fn pm_one(up: f64) -> IntegerLaw {
        IntegerLaw::new(-1, vec![1.0 - up, 0.0, up]).unwrap()
    }

    #[test]
    fn delta_signs_and_identity() {
        let pr = p(10_000);
        for k in -3..=8 {
            let b = band_parameters(&pr, k, 1.0, false).unwrap();
            if k >= 0 {
                assert!(b.delta_k > 0.0);
            }
            if k <= -2 {
                assert!(b.delta_k < 0.0);
            }
            // exact: delta = (z + frac) / ((1+lambda)(N - y)), frac = l(x) - z - y in [0, 1)
            let ell = 2.0 * b.anchor_x as f64 - 10_000.0;
            let frac = ell - b.z_star - b.y_star as f64;
            assert!((0.0..1.0).contains(&frac));
            let exact = (b.z_star + frac) / (2.0 * (10_000.0 - b.y_star as f64));
            assert!((b.delta_k - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn delta_leading_term() {
        let pr = p(10_000);
        let b = band_parameters(&pr, 0, pr.a(), false).unwrap();
        let lead = 0.5 * 1.5 * 10_000f64.powf(0.375) / (10_000.0 - b.y_star as f64);
        assert!((b.delta_k - lead).abs() <= 1.0 / 10_000.0, "{} vs {lead}", b.delta_k);
    }

    #[test]
    fn z_star_bounded_away_from_zero() {
        for n in [1000u32, 10_000] {
            let pr = p(n);
            let (w, km, kp, _) = band_constants(&pr, 1.0);
            for k in -km..=kp {
                for barred in [false, true] {
                    if let Ok(b) = band_parameters(&pr, k, 1.0, barred) {
                        assert!(b.z_star.abs() >= 0.5 * w);
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_band_rejected() {
        let pr = p(10_000);
        assert!(band_parameters(&pr, 10, pr.a(), false).is_err());
        assert!(band_parameters(&pr, -200, pr.a(), false).is_err());
    }

    #[test]
    fn truncated_law_is_normalised() {
        let c = CountChain::new(p(10_000));
        let law = c.increment_law(CountState::new(6000, 1500)).unwrap();
        let u = IntegerLaw::from_increment_law(&law, SUPPORT_TAIL);
        assert_eq!(u.max(), 1);
        assert!(u.probs.len() < 200);
        assert_abs_diff_eq!(u.probs.iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_tilt() {
        let law = pm_one(0.5);
        assert_eq!(theta_star_for_law(&law, None).unwrap(), TiltRoot::Degenerate);
    }

    #[test]
    fn tilt_of_biased_walk() {
        // E[exp(t U)] = 1 for U = +-1 w.p. g, 1-g has root t = ln((1-g)/g)
        let law = pm_one(0.4);
        let t = theta_star_for_law(&law, Some(0.1)).unwrap().value();
        assert_abs_diff_eq!(t, (0.6f64 / 0.4).ln(), epsilon = 1e-12);
        let law = pm_one(0.7);
        let t = theta_star_for_law(&law, None).unwrap().value();
        assert_abs_diff_eq!(t, (0.3f64 / 0.7).ln(), epsilon = 1e-12);
    }

    #[test]
    fn exit_symmetric_and_gamblers_ruin() {
        let sym = pm_one(0.5);
        assert_abs_diff_eq!(exit_probability_exact(&sym, -10, 10, 0).unwrap(), 0.5, epsilon = 1e-12);
        // up-probability 2/3, absorbed at -A and B
        let law = pm_one(2.0 / 3.0);
        for (a, b) in [(3i64, 3i64), (5, 2), (1, 7)] {
            // interior -a+1 ..= b-1, absorbed at -a and b
            let got = exit_probability_exact(&law, -a + 1, b - 1, 0).unwrap();
            let want = (1.0 - 0.5f64.powi(a as i32)) / (1.0 - 0.5f64.powi((a + b) as i32));
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn recurrence_matches_dense() {
        let pr = p(10_000);
        for k in [-2, 0, 3, 7] {
            let b = band_parameters(&pr, k, 1.0, false).unwrap();
            let law = band_law(&pr, &b).unwrap();
            let (lo, hi) = b.lattice();
            for z in [lo, b.center(), hi] {
                let r = exit_probability_exact(&law, lo, hi, z).unwrap();
                let d = exit_probability_dense(&law, lo, hi, z).unwrap();
                assert!((r - d).abs() < 1e-10, "k={k} z={z}: {r} vs {d}");
            }
        }
    }

    #[test]
    fn exit_interval_checks() {
        let law = pm_one(0.5);
        assert!(exit_probability_exact(&law, 0, 5, 7).is_err());
        assert!(exit_probability_exact(&law, 0, 2_000_000, 1).is_err());
    }

    #[test]
    fn f_k_non_increasing() {
        let pr = p(10_000);
        let mut prev = 1.0;
        for k in -3..=8 {
            let b = band_parameters(&pr, k, 1.0, false).unwrap();
            let f = band_exit_probability(&pr, &b).unwrap().f_center;
            assert!(f <= prev + 1e-12, "k={k}");
            prev = f;
        }
    }

    #[test]
    fn resistances_basic() {
        let c = BirthDeathChain::new(-3, vec![0.5; 7]).unwrap();
        assert!(c.resistances().iter().all(|r| (r - 1.0).abs() < 1e-15));
        assert_abs_diff_eq!(c.hitting_probability(0).unwrap(), 0.5, epsilon = 1e-15);
        let c = BirthDeathChain::new(-2, vec![2.0 / 3.0; 5]).unwrap();
        for (i, r) in c.resistances().iter().enumerate() {
            // edge (k, k+1) with k = -3 + i
            assert_abs_diff_eq!(*r, 0.5f64.powi(i as i32), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(c.hitting_probability(0).unwrap(), 8.0 / 9.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.hitting_probability_linear(0).unwrap(), 8.0 / 9.0, epsilon = 1e-14);
        // decreasing g: the ratios r(k,k+1)/r(k-1,k) increase; r itself increases once g < 1/2
        let inc = BirthDeathChain::new(0, vec![0.6, 0.5, 0.4, 0.3]).unwrap();
        let r = inc.resistances();
        let ratios: Vec<f64> = r.windows(2).map(|w| w[1] / w[0]).collect();
        assert!(ratios.windows(2).all(|w| w[1] > w[0]));
        let low = BirthDeathChain::new(0, vec![0.45, 0.4, 0.35, 0.3]).unwrap().resistances();
        assert!(low.windows(2).all(|w| w[1] > w[0]));
        assert!(BirthDeathChain::new(0, vec![0.5, 1.0]).is_err());
        assert!(inc.hitting_probability(4).is_err());
    }

    #[test]
    fn band_chain_dual_methods() {
        let pr = p(1000);
        let rep = build_band_chain(&pr, pr.a(), false).unwrap();
        assert!(rep.k_plus_used <= rep.k_plus);
        for s in rep.chain.k_min..=rep.chain.k_max() {
            let a = rep.chain.hitting_probability(s).unwrap();
            let b = rep.chain.hitting_probability_linear(s).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn window_estimate_at_a() {
        let pr = p(10_000);
        assert_abs_diff_eq!(absorption_exponent_factor(&pr, pr.a()), 0.01, epsilon = 1e-15);
        let below = absorption_window_estimate(&pr, pr.a() - 0.1).unwrap();
        let at = absorption_window_estimate(&pr, pr.a()).unwrap();
        assert!(below > at);
        assert!(absorption_window_estimate(&pr, 0.0).is_err());
    }

    #[test]
    fn no_large_jumps() {
        let pr = p(1000);
        let m = 1000f64.ln().powi(2).floor() as u32;
        for x in (500..=700).step_by(10) {
            for y in (1..=x).step_by(37) {
                let s = CountState::new(x, y);
                assert!(large_jump_tail(&pr, s, m).unwrap() <= large_jump_bound(&pr, x, m) + 1e-300);
            }
        }
    }
}
