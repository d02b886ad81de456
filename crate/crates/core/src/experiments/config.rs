use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One sample per stabilization from (N, N).
    Hitting,
    /// Driven chain, correlated samples.
    Driven,
    /// Exact law from the slice solver.
    Exact,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hitting" => Ok(Mode::Hitting),
            "driven" => Ok(Mode::Driven),
            "exact" => Ok(Mode::Exact),
            _ => Err(Error::Config(format!("unknown mode '{s}' (hitting|driven|exact)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_sites: u32,
    pub lambda: f64,
    pub seed: u64,
    pub trials: u64,
    /// Driven-mode burn-in in additions; `None` means 10 N.
    pub burn_in: Option<u64>,
    pub samples: u64,
    /// Worker threads. Never affects results, so it is left out of the hash.
    #[serde(skip)]
    pub threads: usize,
    pub mode: Mode,
    /// Half-width of the shift window around a.
    pub epsilon_window: f64,
    /// Deviation window constant A in rho_c N +- A sqrt(N log N).
    pub deviation_constant: f64,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_sites: 100,
            lambda: 1.0,
            seed: 0,
            trials: 100,
            burn_in: None,
            samples: 10_000,
            threads: 1,
            mode: Mode::Hitting,
            epsilon_window: 0.3,
            deviation_constant: 6.0,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.n_sites, self.lambda).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if !(self.epsilon_window > 0.0) || !(self.deviation_constant > 0.0) {
            return Err(Error::Config("epsilon and dev-const must be positive".into()));
        }
        Ok(())
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in.unwrap_or(10 * self.n_sites as u64)
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON of the config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Applies one `key = value` setting. Keys match the CLI flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("bad value '{v}' for {k}")))
        }
        match key.trim().replace('_', "-").as_str() {
            "n" | "n-sites" => self.n_sites = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "trials" => self.trials = num(key, value)?,
            "burn-in" => self.burn_in = Some(num(key, value)?),
            "samples" => self.samples = num(key, value)?,
            "threads" => self.threads = num(key, value)?,
            "mode" => self.mode = value.parse()?,
            "epsilon" | "epsilon-window" => self.epsilon_window = num(key, value)?,
            "dev-const" | "deviation-constant" => self.deviation_constant = num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Flat `key = value` lines; `#` starts a comment.
    pub fn parse_flat(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse_flat(&text)
    }
}
