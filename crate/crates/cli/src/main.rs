#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "fdlab",
    version,
    about = "Entropy-method experiments for weighted fast diffusion"
)]
struct Cli {
    /// Directory for every CSV and summary written by the run.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Seed for random perturbations (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Verdict tolerance; each subcommand has its own default.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify the (beta, gamma) plane into symmetry / symmetry breaking.
    Region(RegionArgs),
    /// Numeric spectral gap against the closed form.
    Gap(RunArgs),
    /// Run the flow and record entropy, Fisher information and mass.
    Evolve(RunArgs),
    /// Fit the late-time decay rate and compare with the predictions.
    Rates(RunArgs),
    /// Two-sided bounds v / B and threshold times.
    Ghp(RunArgs),
    /// GNS deficit of a radial function.
    Deficit(DeficitArgs),
    /// Differential inequality for the entropy/Fisher quotient.
    Quotient(RunArgs),
    /// Growth of the entropy power in original variables.
    Renyi(RunArgs),
}

#[derive(Args, Debug)]
struct RegionArgs {
    #[arg(long)]
    d: u32,
    /// Exponent p, or `critical` for p = p_star(beta, gamma) at each point.
    #[arg(long)]
    p: String,
    /// `lo:hi:steps`
    #[arg(long, allow_hyphen_values = true)]
    beta: String,
    /// `lo:hi:steps`
    #[arg(long, allow_hyphen_values = true)]
    gamma: String,
    /// Output CSV, relative to --out-dir.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct DeficitArgs {
    #[arg(long)]
    d: u32,
    #[arg(long)]
    p: f64,
    /// Radial field CSV on an unweighted grid; the optimizer is used when
    /// absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long = "N", default_value_t = 2048)]
    cells: usize,
    #[arg(long, default_value_t = 200.0)]
    rmax: f64,
}

/// Flags mirror the config keys and override the config file.
#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, conflicts_with = "p")]
    m: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long = "N")]
    cells: Option<usize>,
    /// `uniform` or `geometric:<ratio>`
    #[arg(long)]
    spacing: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// `be-newton:<tol>:<max_iter>` or `explicit:<cfl_safety>`
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    record_every: Option<usize>,
    /// `stationary`, `perturbed:<mode>:<amp>`, `bump:<c>:<w>`, `heavy:<k>`, `random:<modes>:<amp>`
    #[arg(long)]
    initial: Option<String>,
    /// Fit window `lo:hi`.
    #[arg(long)]
    window: Option<String>,
    /// Comma-separated, strictly decreasing.
    #[arg(long)]
    epsilons: Option<String>,
    #[arg(long)]
    onset: Option<f64>,
    #[arg(long)]
    lmax: Option<u32>,
}

impl RunArgs {
    fn resolve(&self, base: RunConfig, seed: Option<u64>) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::read_onto(base, path)?,
            None => base,
        };
        let mut set = |key: &str, value: Option<String>| -> anyhow::Result<()> {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
            Ok(())
        };
        let s = |x: Option<f64>| x.map(|v| v.to_string());
        set("d", self.d.map(|v| v.to_string()))?;
        set("beta", s(self.beta))?;
        set("gamma", s(self.gamma))?;
        set("m", s(self.m))?;
        set("p", s(self.p))?;
        set("rmax", s(self.rmax))?;
        set("N", self.cells.map(|v| v.to_string()))?;
        set("spacing", self.spacing.clone())?;
        set("dt", s(self.dt))?;
        set("t_end", s(self.t_end))?;
        set("scheme", self.scheme.clone())?;
        set("record_every", self.record_every.map(|v| v.to_string()))?;
        set("initial", self.initial.clone())?;
        set("window", self.window.clone())?;
        set("epsilons", self.epsilons.clone())?;
        set("onset", s(self.onset))?;
        set("lmax", self.lmax.map(|v| v.to_string()))?;
        set("seed", seed.map(|v| v.to_string()))?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = commands::Context {
        out_dir: cli.out_dir.clone(),
        tol: cli.tol,
    };
    let outcome = match &cli.command {
        Command::Region(a) => commands::region(&ctx, a.d, &a.p, &a.beta, &a.gamma, &a.output),
        Command::Deficit(a) => commands::deficit(&ctx, a.d, a.p, a.input.as_deref(), a.cells, a.rmax),
        Command::Gap(a) => a
            .resolve(RunConfig::spectral(), cli.seed)
            .and_then(|cfg| commands::gap(&ctx, &cfg)),
        Command::Evolve(a) => a
            .resolve(RunConfig::default(), cli.seed)
            .and_then(|cfg| commands::evolve(&ctx, &cfg)),
        Command::Rates(a) => a
            .resolve(RunConfig::default(), cli.seed)
            .and_then(|cfg| commands::rates(&ctx, &cfg)),
        Command::Ghp(a) => a
            .resolve(RunConfig::default(), cli.seed)
            .and_then(|cfg| commands::ghp(&ctx, &cfg)),
        Command::Quotient(a) => a
            .resolve(RunConfig::default(), cli.seed)
            .and_then(|cfg| commands::quotient(&ctx, &cfg)),
        Command::Renyi(a) => a
            .resolve(RunConfig::default(), cli.seed)
            .and_then(|cfg| commands::renyi(&ctx, &cfg)),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
