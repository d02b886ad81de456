//! Exact one-step law and sampler for the particle-count chain (X, Y).
//!
//! X is the number of occupied sites, Y the number of active particles. An
//! active particle either falls asleep (Y -> Y-1) or walks, waking every
//! sleeper it visits, until it settles on an empty site or leaves through
//! the boundary vertex.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Probabilities below this are treated as zero by the sampler.
const SAMPLER_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountState {
    pub x: u32,
    pub y: u32,
}

impl CountState {
    pub fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    pub fn validate(&self, n: u32) -> Result<()> {
        if self.y > self.x || self.x > n {
            return Err(Error::InvalidState { n, x: self.x as i64, y: self.y as i64 });
        }
        Ok(())
    }

    pub fn is_absorbed(&self) -> bool {
        self.y == 0
    }

    /// Number of sleeping particles.
    pub fn sleepers(&self) -> u32 {
        self.x - self.y
    }
}

/// What one update of the count chain did. `k` is the number of sleepers woken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepOutcome {
    Sleep,
    Settle(u32),
    Exit(u32),
}

impl StepOutcome {
    pub fn delta_x(&self) -> i64 {
        match self {
            StepOutcome::Exit(_) => -1,
            _ => 0,
        }
    }

    pub fn delta_y(&self) -> i64 {
        match *self {
            StepOutcome::Sleep => -1,
            StepOutcome::Settle(k) => k as i64,
            StepOutcome::Exit(k) => k as i64 - 1,
        }
    }

    /// Increment of S = y - (1+lambda) x + lambda N.
    pub fn delta_s(&self, lambda: f64) -> f64 {
        self.delta_y() as f64 - (1.0 + lambda) * self.delta_x() as f64
    }

    pub fn apply(&self, s: CountState) -> CountState {
        match *self {
            StepOutcome::Sleep => CountState::new(s.x, s.y - 1),
            StepOutcome::Settle(k) => CountState::new(s.x, s.y + k),
            StepOutcome::Exit(k) => CountState::new(s.x - 1, s.y + k - 1),
        }
    }
}

/// Which tail: the walker settles inside (`Settle`) or leaves (`Exit`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Settle,
    Exit,
}

/// Full outcome distribution from one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementLaw {
    pub state: CountState,
    pub lambda: f64,
    pub sleep: f64,
    /// `settle[k]` = P[Settle(k)], k = 0..=x-y.
    pub settle: Vec<f64>,
    /// `exit[k]` = P[Exit(k)], k = 0..=x-y.
    pub exit: Vec<f64>,
}

impl IncrementLaw {
    pub fn total(&self) -> f64 {
        self.sleep + self.settle.iter().sum::<f64>() + self.exit.iter().sum::<f64>()
    }

    pub fn prob(&self, o: StepOutcome) -> f64 {
        match o {
            StepOutcome::Sleep => self.sleep,
            StepOutcome::Settle(k) => self.settle.get(k as usize).copied().unwrap_or(0.0),
            StepOutcome::Exit(k) => self.exit.get(k as usize).copied().unwrap_or(0.0),
        }
    }

    /// All outcomes with their probabilities, sampler order.
    pub fn entries(&self) -> Vec<(StepOutcome, f64)> {
        let mut v = vec![(StepOutcome::Sleep, self.sleep)];
        for k in 0..self.settle.len() {
            v.push((StepOutcome::Exit(k as u32), self.exit[k]));
            v.push((StepOutcome::Settle(k as u32), self.settle[k]));
        }
        v
    }

    /// Law of dY: entry `j` is P[dY = j - 1].
    pub fn dy_marginal(&self) -> Vec<f64> {
        let m = self.settle.len();
        let mut nu = vec![0.0; m + 1];
        nu[0] = self.sleep + self.exit[0];
        for k in 0..m {
            nu[k + 1] += self.settle[k];
            if k + 1 < m {
                nu[k + 1] += self.exit[k + 1];
            }
        }
        nu
    }

    pub fn expect<F: Fn(StepOutcome) -> f64>(&self, f: F) -> f64 {
        self.entries().into_iter().map(|(o, p)| p * f(o)).sum()
    }
}

/// Kernel for fixed (N, lambda) with the constants hoisted.
#[derive(Debug, Clone, Copy)]
pub struct CountChain {
    pub params: ModelParams,
    n: f64,
    p_sleep: f64,
    // (1/(1+lambda)) (N+1)/N
    c: f64,
    // 1/((1+lambda) N)
    first_exit: f64,
}

impl CountChain {
    pub fn new(params: ModelParams) -> Self {
        let n = params.n();
        let q = 1.0 / (1.0 + params.lambda);
        Self { params, n, p_sleep: params.p_sleep(), c: q * (n + 1.0) / n, first_exit: q / n }
    }

    pub fn n_sites(&self) -> u32 {
        self.params.n_sites
    }

    /// Running product prod_{i<k} (x-y-i)/(N+2-y-i).
    fn wake_product(&self, s: CountState, k: u32) -> f64 {
        let (x, y) = (s.x as f64, s.y as f64);
        let mut p = 1.0;
        for i in 0..k {
            let i = i as f64;
            p *= (x - y - i) / (self.n + 2.0 - y - i);
        }
        p
    }

    /// Probability that the walker moves and wakes at least `k` sleepers, then
    /// settles (`Branch::Settle`) or exits (`Branch::Exit`).
    pub fn pi_tail(&self, s: CountState, branch: Branch, k: u32) -> Result<f64> {
        s.validate(self.n_sites())?;
        let m = s.sleepers();
        if k > m + 1 {
            return Err(Error::Domain(format!("k={k} exceeds x-y+1={}", m + 1)));
        }
        if k == m + 1 {
            return Ok(0.0);
        }
        let x = s.x as f64;
        let base = self.c * self.wake_product(s, k);
        Ok(match branch {
            Branch::Exit => base / (self.n + 2.0 - x),
            Branch::Settle => {
                let v = base * (self.n + 1.0 - x) / (self.n + 2.0 - x);
                if k == 0 {
                    (v - self.first_exit).max(0.0)
                } else {
                    v
                }
            }
        })
    }

    pub fn increment_law(&self, s: CountState) -> Result<IncrementLaw> {
        s.validate(self.n_sites())?;
        if s.is_absorbed() {
            return Err(Error::Absorbed);
        }
        let m = s.sleepers();
        let (x, y) = (s.x as f64, s.y as f64);
        let mut settle = Vec::with_capacity(m as usize + 1);
        let mut exit = Vec::with_capacity(m as usize + 1);
        // P[wake exactly k] = c P_k (N+2-x)/(N+2-y-k), split by where the walk ends
        let mut prod = 1.0;
        for k in 0..=m {
            let kf = k as f64;
            let denom = self.n + 2.0 - y - kf;
            let e = self.c * prod / denom;
            let mut st = e * (self.n + 1.0 - x);
            if k == 0 {
                st = (st - self.first_exit).max(0.0);
            }
            exit.push(e);
            settle.push(st);
            prod *= (x - y - kf) / denom;
        }
        Ok(IncrementLaw { state: s, lambda: self.params.lambda, sleep: self.p_sleep, settle, exit })
    }

    /// Inverse-CDF draw of one outcome, ordered Sleep, Exit(0), Settle(0), Exit(1), ...
    #[inline]
    pub fn sample_outcome<R: Rng + ?Sized>(&self, s: CountState, rng: &mut R) -> StepOutcome {
        let mut u: f64 = rng.random();
        if u < self.p_sleep {
            return StepOutcome::Sleep;
        }
        u -= self.p_sleep;
        let m = s.x - s.y;
        let (x, y) = (s.x as f64, s.y as f64);
        let settle_factor = self.n + 1.0 - x;
        let mut prod = self.c;
        let mut k = 0u32;
        loop {
            let kf = k as f64;
            let denom = self.n + 2.0 - y - kf;
            let e = prod / denom;
            if u < e {
                return StepOutcome::Exit(k);
            }
            u -= e;
            let mut st = e * settle_factor;
            if k == 0 {
                st -= self.first_exit;
            }
            if u < st {
                return StepOutcome::Settle(k);
            }
            u -= st;
            if k == m {
                break;
            }
            prod *= (x - y - kf) / denom;
            if prod < SAMPLER_FLOOR {
                break;
            }
            k += 1;
        }
        // only reachable through rounding in the running subtraction
        StepOutcome::Settle(k)
    }

    pub fn sample_step<R: Rng + ?Sized>(&self, s: CountState, rng: &mut R) -> Result<(CountState, StepOutcome)> {
        s.validate(self.n_sites())?;
        if s.is_absorbed() {
            return Err(Error::Absorbed);
        }
        let o = self.sample_outcome(s, rng);
        Ok((o.apply(s), o))
    }

    /// Runs until Y = 0, `max_steps`, or the observer returns `false`.
    /// The observer sees every visited state, starting with `start` at t = 0.
    pub fn run_observed<R, F>(&self, start: CountState, rng: &mut R, max_steps: u64, mut observe: F) -> Result<RunSummary>
    where
        R: Rng + ?Sized,
        F: FnMut(u64, CountState) -> bool,
    {
        start.validate(self.n_sites())?;
        let mut s = start;
        let mut t = 0u64;
        if !observe(0, s) {
            return Ok(RunSummary { final_state: s, steps: 0, absorbed: s.is_absorbed(), stopped: true, truncated: false });
        }
        while !s.is_absorbed() {
            if t >= max_steps {
                return Ok(RunSummary { final_state: s, steps: t, absorbed: false, stopped: false, truncated: true });
            }
            s = self.sample_outcome(s, rng).apply(s);
            t += 1;
            if !observe(t, s) {
                return Ok(RunSummary { final_state: s, steps: t, absorbed: s.is_absorbed(), stopped: true, truncated: false });
            }
        }
        Ok(RunSummary { final_state: s, steps: t, absorbed: true, stopped: false, truncated: false })
    }

    /// Fast path for hitting runs: no observer, returns the absorbed state and T+.
    pub fn run_to_absorption<R: Rng + ?Sized>(&self, start: CountState, rng: &mut R, max_steps: u64) -> Result<RunSummary> {
        start.validate(self.n_sites())?;
        let mut s = start;
        let mut t = 0u64;
        while s.y > 0 {
            if t >= max_steps {
                return Ok(RunSummary { final_state: s, steps: t, absorbed: false, stopped: false, truncated: true });
            }
            s = self.sample_outcome(s, rng).apply(s);
            t += 1;
        }
        Ok(RunSummary { final_state: s, steps: t, absorbed: true, stopped: false, truncated: false })
    }

    pub fn run_until_absorbed<R: Rng + ?Sized>(
        &self,
        start: CountState,
        rng: &mut R,
        opts: &RunOptions,
    ) -> Result<Trajectory> {
        let n = self.params.n();
        let levels: Vec<f64> = opts.rho_levels.iter().map(|r| r * n).collect();
        let mut first_passage: Vec<Option<u64>> = vec![None; levels.len()];
        let mut path = Vec::new();
        let mut last = (0u64, start);
        let summary = self.run_observed(start, rng, opts.max_steps, |t, s| {
            for (fp, &lvl) in first_passage.iter_mut().zip(&levels) {
                if fp.is_none() && (s.x as f64) <= lvl {
                    *fp = Some(t);
                }
            }
            let keep = match opts.record {
                Record::Full => true,
                Record::Every(every) => t % every.max(1) == 0,
                Record::Endpoints => t == 0,
            };
            if keep {
                path.push(PathPoint { t, x: s.x, y: s.y });
            }
            last = (t, s);
            true
        })?;
        if path.last().map(|p| p.t) != Some(last.0) {
            path.push(PathPoint { t: last.0, x: last.1.x, y: last.1.y });
        }
        Ok(Trajectory {
            path,
            final_state: summary.final_state,
            absorption_time: summary.absorbed.then_some(summary.steps),
            steps: summary.steps,
            truncated: summary.truncated,
            first_passage: opts.rho_levels.iter().copied().zip(first_passage).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_state: CountState,
    pub steps: u64,
    pub absorbed: bool,
    /// The observer asked to stop.
    pub stopped: bool,
    /// `max_steps` was hit before absorption.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Record {
    Full,
    Every(u64),
    /// First and last point only.
    Endpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub max_steps: u64,
    pub record: Record,
    /// Record tau_rho = inf{t : X_t <= rho N} for each level.
    pub rho_levels: Vec<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { max_steps: u64::MAX, record: Record::Full, rho_levels: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: u64,
    pub x: u32,
    pub y: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub path: Vec<PathPoint>,
    pub final_state: CountState,
    /// T+, if reached.
    pub absorption_time: Option<u64>,
    pub steps: u64,
    pub truncated: bool,
    pub first_passage: Vec<(f64, Option<u64>)>,
}

/// True iff P_hi[dY >= j] >= P_lo[dY >= j] - 1e-12 for every j.
pub fn stochastic_dominance_check(law_hi: &IncrementLaw, law_lo: &IncrementLaw) -> bool {
    let hi = law_hi.dy_marginal();
    let lo = law_lo.dy_marginal();
    let len = hi.len().max(lo.len());
    let (mut th, mut tl) = (0.0, 0.0);
    for j in (0..len).rev() {
        th += hi.get(j).copied().unwrap_or(0.0);
        tl += lo.get(j).copied().unwrap_or(0.0);
        if th < tl - 1e-12 {
            return false;
        }
    }
    true
}
