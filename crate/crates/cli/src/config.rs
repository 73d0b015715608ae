//! Flat `key = value` run configuration.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use fdlab_core::{
    derive, make_grid, CknParameters, DerivedParameters, FlowConfig, InitialKind, RadialGrid, Scheme, Spacing,
};

/// Initial datum as written in configs: `perturbed:<mode>:<amplitude>`,
/// `bump:<center>:<width>`, `heavy:<exponent>`, `random:<modes>:<amplitude>`
/// (seeded by `seed`) or `stationary`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialSpec {
    Stationary,
    Perturbed { mode: u32, amplitude: f64 },
    Bump { center: f64, width: f64 },
    Heavy { exponent: f64 },
    Random { modes: u32, amplitude: f64 },
}

impl InitialSpec {
    pub fn kind(&self, seed: u64) -> InitialKind {
        match *self {
            InitialSpec::Stationary => InitialKind::PerturbedBarenblatt {
                mode: 1,
                amplitude: 0.0,
            },
            InitialSpec::Perturbed { mode, amplitude } => InitialKind::PerturbedBarenblatt { mode, amplitude },
            InitialSpec::Bump { center, width } => InitialKind::Bump { center, width },
            InitialSpec::Heavy { exponent } => InitialKind::HeavyTail { exponent },
            InitialSpec::Random { modes, amplitude } => InitialKind::RandomModes { seed, modes, amplitude },
        }
    }
}

impl fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialSpec::Stationary => write!(f, "stationary"),
            InitialSpec::Perturbed { mode, amplitude } => write!(f, "perturbed:{mode}:{amplitude}"),
            InitialSpec::Bump { center, width } => write!(f, "bump:{center}:{width}"),
            InitialSpec::Heavy { exponent } => write!(f, "heavy:{exponent}"),
            InitialSpec::Random { modes, amplitude } => write!(f, "random:{modes}:{amplitude}"),
        }
    }
}

impl std::str::FromStr for InitialSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |k: usize| -> Result<f64> {
            let x = parts
                .get(k)
                .ok_or_else(|| anyhow!("initial datum '{s}' is missing field {k}"))?;
            x.parse()
                .map_err(|_| anyhow!("bad number '{x}' in initial datum '{s}'"))
        };
        let arity = |n: usize| -> Result<()> {
            if parts.len() != n + 1 {
                bail!("initial datum '{s}' takes {n} fields");
            }
            Ok(())
        };
        let spec = match parts[0] {
            "stationary" => {
                arity(0)?;
                InitialSpec::Stationary
            }
            "perturbed" => {
                arity(2)?;
                InitialSpec::Perturbed {
                    mode: num(1)? as u32,
                    amplitude: num(2)?,
                }
            }
            "bump" => {
                arity(2)?;
                InitialSpec::Bump {
                    center: num(1)?,
                    width: num(2)?,
                }
            }
            "heavy" => {
                arity(1)?;
                InitialSpec::Heavy { exponent: num(1)? }
            }
            "random" => {
                arity(2)?;
                InitialSpec::Random {
                    modes: num(1)? as u32,
                    amplitude: num(2)?,
                }
            }
            other => bail!("unknown initial datum '{other}' (stationary | perturbed | bump | heavy | random)"),
        };
        Ok(spec)
    }
}

/// Everything a flow-based subcommand needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub d: u32,
    pub beta: f64,
    pub gamma: f64,
    pub m: f64,
    pub rmax: f64,
    pub cells: usize,
    pub spacing: Spacing,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub record_every: usize,
    pub initial: InitialSpec,
    pub seed: u64,
    /// fit window, default `[t_end / 2, t_end]`
    pub window: Option<(f64, f64)>,
    pub epsilons: Vec<f64>,
    pub onset: f64,
    pub lmax: u32,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            d: 4,
            beta: 0.0,
            gamma: 0.0,
            m: 0.8,
            rmax: 60.0,
            cells: 1024,
            spacing: Spacing::Geometric(1.01),
            dt: 0.01,
            t_end: 3.0,
            scheme: Scheme::default(),
            record_every: 1,
            initial: InitialSpec::Perturbed {
                mode: 1,
                amplitude: 0.3,
            },
            seed: 0,
            window: None,
            epsilons: vec![0.2, 0.1, 0.05],
            onset: 0.0,
            lmax: 4,
        }
    }
}

pub const KEYS: &[&str] = &[
    "d",
    "beta",
    "gamma",
    "m",
    "p",
    "rmax",
    "N",
    "spacing",
    "dt",
    "t_end",
    "scheme",
    "record_every",
    "initial",
    "seed",
    "window",
    "epsilons",
    "onset",
    "lmax",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| anyhow!("bad value '{value}' for key '{key}'"))
}

/// `lo:hi` pair.
pub fn parse_pair(value: &str) -> Result<(f64, f64)> {
    let (lo, hi) = value
        .split_once(':')
        .ok_or_else(|| anyhow!("expected 'lo:hi', got '{value}'"))?;
    Ok((parse_num("lo", lo)?, parse_num("hi", hi)?))
}

/// `lo:hi:steps` range.
pub fn parse_range(value: &str) -> Result<fdlab_core::ScanRange> {
    let parts: Vec<&str> = value.split(':').collect();
    if parts.len() != 3 {
        bail!("expected 'lo:hi:steps', got '{value}'");
    }
    let range = fdlab_core::ScanRange::new(
        parse_num("lo", parts[0])?,
        parse_num("hi", parts[1])?,
        parse_num("steps", parts[2])?,
    );
    if range.steps < 2 || !(range.hi > range.lo) {
        bail!("empty range '{value}'");
    }
    Ok(range)
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "d" => self.d = parse_num(key, value)?,
            "beta" => self.beta = parse_num(key, value)?,
            "gamma" => self.gamma = parse_num(key, value)?,
            "m" => self.m = parse_num(key, value)?,
            "p" => {
                let p: f64 = parse_num(key, value)?;
                self.m = (p + 1.0) / (2.0 * p);
            }
            "rmax" => self.rmax = parse_num(key, value)?,
            "N" => self.cells = parse_num(key, value)?,
            "spacing" => self.spacing = value.parse()?,
            "dt" => self.dt = parse_num(key, value)?,
            "t_end" => self.t_end = parse_num(key, value)?,
            "scheme" => self.scheme = value.parse()?,
            "record_every" => self.record_every = parse_num(key, value)?,
            "initial" => self.initial = value.parse()?,
            "seed" => self.seed = parse_num(key, value)?,
            "window" => {
                self.window = if value == "default" {
                    None
                } else {
                    Some(parse_pair(value)?)
                }
            }
            "epsilons" => {
                self.epsilons = value.split(',').map(|x| parse_num(key, x)).collect::<Result<_>>()?;
            }
            "onset" => self.onset = parse_num(key, value)?,
            "lmax" => self.lmax = parse_num(key, value)?,
            other => bail!("unknown config key '{other}' (known: {})", KEYS.join(", ")),
        }
        Ok(())
    }

    /// Defaults for spectral runs: a longer, finer grid.
    pub fn spectral() -> Self {
        Self {
            rmax: 80.0,
            cells: 2048,
            spacing: Spacing::Geometric(1.003),
            ..Self::default()
        }
    }

    /// Parses a flat config on top of `base`; `#` starts a comment.
    pub fn parse_onto(base: Self, text: &str) -> Result<Self> {
        let mut cfg = base;
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected 'key = value', got '{line}'", k + 1))?;
            cfg.set(key.trim(), value).with_context(|| format!("line {}", k + 1))?;
        }
        Ok(cfg)
    }

    pub fn read_onto(base: Self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse_onto(base, &text)
    }

    pub fn params(&self) -> CknParameters {
        CknParameters::new(self.d, self.beta, self.gamma, self.m)
    }

    pub fn derived(&self) -> Result<DerivedParameters> {
        Ok(derive(&self.params())?)
    }

    pub fn grid(&self, dp: &DerivedParameters) -> Result<Arc<RadialGrid>> {
        Ok(Arc::new(make_grid(self.rmax, self.cells, self.spacing, dp)?))
    }

    pub fn flow(&self, grid: Arc<RadialGrid>, snapshots: bool) -> FlowConfig {
        let mut cfg = FlowConfig::new(grid, self.dt, self.t_end);
        cfg.scheme = self.scheme;
        cfg.record_every = self.record_every;
        cfg.keep_snapshots = snapshots;
        cfg
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "d = {}", self.d)?;
        writeln!(f, "beta = {}", self.beta)?;
        writeln!(f, "gamma = {}", self.gamma)?;
        writeln!(f, "m = {}", self.m)?;
        writeln!(f, "rmax = {}", self.rmax)?;
        writeln!(f, "N = {}", self.cells)?;
        writeln!(f, "spacing = {}", self.spacing)?;
        writeln!(f, "dt = {}", self.dt)?;
        writeln!(f, "t_end = {}", self.t_end)?;
        writeln!(f, "scheme = {}", self.scheme)?;
        writeln!(f, "record_every = {}", self.record_every)?;
        writeln!(f, "initial = {}", self.initial)?;
        writeln!(f, "seed = {}", self.seed)?;
        match self.window {
            Some((lo, hi)) => writeln!(f, "window = {lo}:{hi}")?,
            None => writeln!(f, "window = default")?,
        }
        let eps: Vec<String> = self.epsilons.iter().map(|e| e.to_string()).collect();
        writeln!(f, "epsilons = {}", eps.join(","))?;
        writeln!(f, "onset = {}", self.onset)?;
        writeln!(f, "lmax = {}", self.lmax)
    }
}
