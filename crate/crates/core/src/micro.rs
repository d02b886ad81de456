//! Site-level simulators on the complete graph with N internal vertices and
//! one boundary vertex (index N), which swallows particles.
//!
//! * `eta_step`: single-occupancy dynamics. The chosen particle sleeps or
//!   walks until it finds an empty site or the boundary; sleepers it meets
//!   wake up and the walk passes through them.
//! * `Stabilizer`: the driven chain. Sites may hold several active
//!   particles; one uniformly chosen particle acts per update.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::count_chain::{CountState, StepOutcome};
use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Hard cap on micro-updates in one stabilization.
pub const MAX_UPDATES: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SiteState {
    Empty,
    Sleeping,
    Active(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MicroConfig {
    pub sites: Vec<SiteState>,
}

impl MicroConfig {
    pub fn empty(n: u32) -> Self {
        Self { sites: vec![SiteState::Empty; n as usize] }
    }

    /// First `y` sites active, next `x - y` sleeping.
    pub fn from_counts(n: u32, s: CountState) -> Result<Self> {
        s.validate(n)?;
        let mut sites = vec![SiteState::Empty; n as usize];
        for (i, site) in sites.iter_mut().enumerate().take(s.x as usize) {
            *site = if (i as u32) < s.y { SiteState::Active(1) } else { SiteState::Sleeping };
        }
        Ok(Self { sites })
    }

    pub fn n(&self) -> u32 {
        self.sites.len() as u32
    }

    pub fn is_stable(&self) -> bool {
        !self.sites.iter().any(|s| matches!(s, SiteState::Active(_)))
    }

    pub fn particle_count(&self) -> u32 {
        self.sites
            .iter()
            .map(|s| match s {
                SiteState::Empty => 0,
                SiteState::Sleeping => 1,
                SiteState::Active(c) => *c,
            })
            .sum()
    }

    pub fn active_count(&self) -> u32 {
        self.sites.iter().map(|s| if let SiteState::Active(c) = s { *c } else { 0 }).sum()
    }
}

/// (x, y) of a single-occupancy configuration.
pub fn count_projection(config: &MicroConfig) -> Result<CountState> {
    let (mut x, mut y) = (0, 0);
    for s in &config.sites {
        match s {
            SiteState::Empty => {}
            SiteState::Sleeping => x += 1,
            SiteState::Active(1) => {
                x += 1;
                y += 1;
            }
            SiteState::Active(c) => {
                return Err(Error::Domain(format!("site holds {c} particles; projection needs single occupancy")));
            }
        }
    }
    Ok(CountState::new(x, y))
}

/// Uniform vertex other than `from`; the value N is the boundary.
#[inline]
fn jump<R: Rng + ?Sized>(n: u32, from: u32, rng: &mut R) -> u32 {
    let j = rng.random_range(0..n);
    if j >= from {
        j + 1
    } else {
        j
    }
}

/// One update of the single-occupancy chain, in place.
pub fn eta_step<R: Rng + ?Sized>(params: &ModelParams, config: &mut MicroConfig, rng: &mut R) -> Result<StepOutcome> {
    let n = config.n();
    let y = config.sites.iter().filter(|s| matches!(s, SiteState::Active(_))).count();
    if y == 0 {
        return Err(Error::NoActiveParticle);
    }
    if config.sites.iter().any(|s| matches!(s, SiteState::Active(c) if *c != 1)) {
        return Err(Error::Domain("eta_step needs single occupancy".into()));
    }
    let pick = rng.random_range(0..y);
    let origin = config
        .sites
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s, SiteState::Active(_)))
        .nth(pick)
        .map(|(i, _)| i as u32)
        .unwrap();

    if rng.random::<f64>() < params.p_sleep() {
        config.sites[origin as usize] = SiteState::Sleeping;
        return Ok(StepOutcome::Sleep);
    }
    config.sites[origin as usize] = SiteState::Empty;
    let mut at = origin;
    let mut woken = 0;
    loop {
        at = jump(n, at, rng);
        if at == n {
            return Ok(StepOutcome::Exit(woken));
        }
        match config.sites[at as usize] {
            SiteState::Empty => {
                config.sites[at as usize] = SiteState::Active(1);
                return Ok(StepOutcome::Settle(woken));
            }
            SiteState::Sleeping => {
                config.sites[at as usize] = SiteState::Active(1);
                woken += 1;
            }
            SiteState::Active(_) => {}
        }
    }
}

/// How the next acting particle is chosen during stabilization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionRule {
    /// Uniform over active particles: the embedded chain of equal-rate clocks.
    Uniform,
    /// Some particle on the lowest-index active site. Only for order-invariance tests.
    LowestSite,
}

/// Driven-chain stabilizer with a reusable particle list.
#[derive(Debug, Clone)]
pub struct Stabilizer {
    params: ModelParams,
    rule: SelectionRule,
    max_updates: u64,
    // one entry per active particle, holding its site
    active: Vec<u32>,
}

impl Stabilizer {
    pub fn new(params: ModelParams, rule: SelectionRule) -> Self {
        Self { params, rule, max_updates: MAX_UPDATES, active: Vec::new() }
    }

    pub fn with_max_updates(mut self, cap: u64) -> Self {
        self.max_updates = cap;
        self
    }

    /// Runs the configuration to a stable one; returns the number of micro-updates.
    pub fn stabilize<R: Rng + ?Sized>(&mut self, config: &mut MicroConfig, rng: &mut R) -> Result<u64> {
        let n = config.n();
        if n != self.params.n_sites {
            return Err(Error::Domain(format!("config has {n} sites, params say {}", self.params.n_sites)));
        }
        self.active.clear();
        for (i, s) in config.sites.iter().enumerate() {
            if let SiteState::Active(c) = *s {
                for _ in 0..c {
                    self.active.push(i as u32);
                }
            }
        }
        let p_sleep = self.params.p_sleep();
        let mut updates = 0u64;
        while !self.active.is_empty() {
            if updates >= self.max_updates {
                return Err(Error::Truncated(updates));
            }
            updates += 1;
            let idx = match self.rule {
                SelectionRule::Uniform => rng.random_range(0..self.active.len()),
                SelectionRule::LowestSite => {
                    let mut best = 0;
                    for (i, &s) in self.active.iter().enumerate() {
                        if s < self.active[best] {
                            best = i;
                        }
                    }
                    best
                }
            };
            let site = self.active[idx];
            let SiteState::Active(count) = config.sites[site as usize] else {
                unreachable!("particle list out of sync with sites");
            };
            if rng.random::<f64>() < p_sleep {
                // a particle sharing its site cannot fall asleep
                if count == 1 {
                    config.sites[site as usize] = SiteState::Sleeping;
                    self.active.swap_remove(idx);
                }
                continue;
            }
            config.sites[site as usize] = if count == 1 { SiteState::Empty } else { SiteState::Active(count - 1) };
            let to = jump(n, site, rng);
            if to == n {
                self.active.swap_remove(idx);
                continue;
            }
            self.active[idx] = to;
            let target = &mut config.sites[to as usize];
            *target = match *target {
                SiteState::Empty => SiteState::Active(1),
                SiteState::Sleeping => {
                    self.active.push(to);
                    SiteState::Active(2)
                }
                SiteState::Active(c) => SiteState::Active(c + 1),
            };
        }
        Ok(updates)
    }

    /// Adds an active particle at `site` of a stable configuration and stabilizes.
    /// A sleeper already there wakes, leaving two active particles.
    pub fn stabilize_driven<R: Rng + ?Sized>(&mut self, config: &mut MicroConfig, site: u32, rng: &mut R) -> Result<u64> {
        if site >= config.n() {
            return Err(Error::Domain(format!("addition site {site} out of range")));
        }
        if !config.is_stable() {
            return Err(Error::Domain("driven addition needs a stable configuration".into()));
        }
        let s = &mut config.sites[site as usize];
        *s = match *s {
            SiteState::Empty => SiteState::Active(1),
            SiteState::Sleeping => SiteState::Active(2),
            SiteState::Active(_) => unreachable!(),
        };
        self.stabilize(config, rng)
    }
}

/// Convenience wrapper with uniform selection.
pub fn stabilize_driven<R: Rng + ?Sized>(
    params: &ModelParams,
    config: &mut MicroConfig,
    site: u32,
    rng: &mut R,
) -> Result<u64> {
    Stabilizer::new(*params, SelectionRule::Uniform).stabilize_driven(config, site, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrivenSample {
    pub step_index: u64,
    pub particle_count: u32,
    pub avalanche_steps: u64,
}

/// Repeated additions at uniform sites. `visit` sees every sample in order.
pub fn driven_chain_visit<R, F>(params: &ModelParams, config: &mut MicroConfig, steps: u64, rng: &mut R, mut visit: F) -> Result<()>
where
    R: Rng + ?Sized,
    F: FnMut(DrivenSample),
{
    if !config.is_stable() {
        return Err(Error::Domain("driven chain needs a stable initial configuration".into()));
    }
    let mut stab = Stabilizer::new(*params, SelectionRule::Uniform);
    let n = config.n();
    for step_index in 0..steps {
        let site = rng.random_range(0..n);
        let avalanche_steps = stab.stabilize_driven(config, site, rng)?;
        visit(DrivenSample { step_index, particle_count: config.particle_count(), avalanche_steps });
    }
    Ok(())
}

pub fn driven_chain_run<R: Rng + ?Sized>(
    params: &ModelParams,
    initial: &MicroConfig,
    steps: u64,
    rng: &mut R,
) -> Result<Vec<DrivenSample>> {
    let mut config = initial.clone();
    let mut out = Vec::with_capacity(steps.min(1 << 24) as usize);
    driven_chain_visit(params, &mut config, steps, rng, |s| out.push(s))?;
    Ok(out)
}
