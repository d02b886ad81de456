//! Moments of the deviation process S = Y - l(X), l(x) = (1+lambda) x - lambda N.
//!
//! Closed forms are checked against direct summation over the increment law.

use serde::{Deserialize, Serialize};

use crate::count_chain::{CountChain, CountState, PathPoint, StepOutcome};
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Line l(x), deviation S and the band width eps_N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationFrame {
    pub params: ModelParams,
    pub eps_n: f64,
    /// sqrt(log N / N) <= eps_N <= min(1 - rho_c, 1/100). Empty at small N.
    pub in_bracket: bool,
}

impl DeviationFrame {
    /// eps_N = sqrt(log N / N).
    pub fn new(params: ModelParams) -> Self {
        let n = params.n();
        Self::with_eps(params, (n.ln().max(0.0) / n).sqrt())
    }

    pub fn with_eps(params: ModelParams, eps_n: f64) -> Self {
        let (lo, hi) = Self::bracket(&params);
        Self { params, eps_n, in_bracket: lo <= eps_n && eps_n <= hi }
    }

    pub fn bracket(params: &ModelParams) -> (f64, f64) {
        let n = params.n();
        ((n.ln().max(0.0) / n).sqrt(), (1.0 - params.rho_c()).min(0.01))
    }

    pub fn ell_at(&self, x: f64) -> f64 {
        (1.0 + self.params.lambda) * x - self.params.lambda * self.params.n()
    }

    pub fn s_of(&self, s: CountState) -> f64 {
        s.y as f64 - self.ell_at(s.x as f64)
    }
}

fn live(chain: &CountChain, s: CountState) -> Result<()> {
    s.validate(chain.n_sites())?;
    if s.is_absorbed() {
        return Err(Error::Absorbed);
    }
    Ok(())
}

/// E[dS | x, y] in closed form.
pub fn drift_exact(params: &ModelParams, s: CountState) -> Result<f64> {
    live(&CountChain::new(*params), s)?;
    let (n, l) = (params.n(), params.lambda);
    let (x, y) = (s.x as f64, s.y as f64);
    let c = (n + 1.0) / n / (1.0 + l);
    Ok(-l / (1.0 + l) + l * c / (n + 2.0 - x) + c * (x - y) / (n + 3.0 - x))
}

/// E[dS^2 | x, y] in closed form.
pub fn second_moment_exact(params: &ModelParams, s: CountState) -> Result<f64> {
    live(&CountChain::new(*params), s)?;
    let (n, l) = (params.n(), params.lambda);
    let (x, y) = (s.x as f64, s.y as f64);
    let c = (n + 1.0) / n / (1.0 + l);
    let first = (x - y) / (n + 3.0 - x);
    Ok(l / (1.0 + l) + l * l * c / (n + 2.0 - x) + 2.0 * l * c * first / (n + 2.0 - x)
        + 2.0 * c * (x - y) * (n + 3.0 - y) / ((n + 3.0 - x) * (n + 4.0 - x))
        - c * first)
}

/// E[f(dS)] by summing over the increment law.
pub fn enumerate_ds<F: Fn(f64) -> f64>(params: &ModelParams, s: CountState, f: F) -> Result<f64> {
    let law = CountChain::new(*params).increment_law(s)?;
    let l = params.lambda;
    Ok(law.expect(|o| f(o.delta_s(l))))
}

pub fn drift_enumerated(params: &ModelParams, s: CountState) -> Result<f64> {
    enumerate_ds(params, s, |d| d)
}

pub fn second_moment_enumerated(params: &ModelParams, s: CountState) -> Result<f64> {
    enumerate_ds(params, s, |d| d * d)
}

/// E[exp(theta Z')] with Z' = -dY.
pub fn mgf_exact(params: &ModelParams, s: CountState, theta: f64) -> Result<f64> {
    if theta.abs() > 0.5 {
        return Err(Error::Domain(format!("|theta| must be at most 0.5, got {theta}")));
    }
    let law = CountChain::new(*params).increment_law(s)?;
    Ok(law.expect(|o: StepOutcome| (-theta * o.delta_y() as f64).exp()))
}

/// Two-term expansion of the MGF of Z'. Singular at x = N.
pub fn mgf_expansion(params: &ModelParams, s: CountState, theta: f64) -> Result<f64> {
    live(&CountChain::new(*params), s)?;
    if s.x == params.n_sites {
        return Err(Error::Domain("expansion unavailable at x = N".into()));
    }
    let (n, l) = (params.n(), params.lambda);
    let (x, y) = (s.x as f64, s.y as f64);
    let q = 1.0 / (1.0 + l);
    let r = (x - y) / (n - x);
    let lin = l * q - q * r;
    let quad = 0.5 * l * q - 0.5 * q * r + q * (x - y) * (n - y) / ((n - x) * (n - x));
    Ok(1.0 + theta * lin + theta * theta * quad)
}

/// 1 - E[exp(-h eps dS)]; nonnegative means exp(-h eps S) is a supermartingale here.
pub fn supermartingale_margin(params: &ModelParams, s: CountState, h: f64, eps_n: f64) -> Result<f64> {
    let t = h * eps_n;
    Ok(-enumerate_ds(params, s, |d| (-t * d).exp_m1())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationExtrema {
    pub min_s: f64,
    pub max_s: f64,
    pub argmin_t: u64,
    pub argmax_t: u64,
}

pub fn deviation_scan(path: &[PathPoint], frame: &DeviationFrame) -> Result<DeviationExtrema> {
    let first = path.first().ok_or_else(|| Error::Domain("empty trajectory".into()))?;
    let s0 = frame.s_of(CountState::new(first.x, first.y));
    let mut e = DeviationExtrema { min_s: s0, max_s: s0, argmin_t: first.t, argmax_t: first.t };
    for p in &path[1..] {
        let s = frame.s_of(CountState::new(p.x, p.y));
        if s < e.min_s {
            e.min_s = s;
            e.argmin_t = p.t;
        }
        if s > e.max_s {
            e.max_s = s;
            e.argmax_t = p.t;
        }
    }
    Ok(e)
}

/// One row of a moment sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub x: u32,
    pub y: u32,
    pub s: f64,
    pub drift: f64,
    pub drift_enum: f64,
    pub second: f64,
    pub second_enum: f64,
}

/// Closed forms and enumeration over every live state with x in `xs`.
pub fn moment_sweep(params: &ModelParams, xs: impl IntoIterator<Item = u32>) -> Result<Vec<MomentRow>> {
    let frame = DeviationFrame::new(*params);
    let mut rows = Vec::new();
    for x in xs {
        for y in 1..=x {
            let s = CountState::new(x, y);
            rows.push(MomentRow {
                x,
                y,
                s: frame.s_of(s),
                drift: drift_exact(params, s)?,
                drift_enum: drift_enumerated(params, s)?,
                second: second_moment_exact(params, s)?,
                second_enum: second_moment_enumerated(params, s)?,
            });
        }
    }
    Ok(rows)
}
