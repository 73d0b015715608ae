use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context as _, Result};
use fdlab_core::experiments::{
    check_entropy_production, check_quotient_ode, fit_decay_rate, ghp_sandwich, improved_rate_from_zero,
    renyi_growth_check, threshold_time, FIT_ENTROPY_FLOOR,
};
use fdlab_core::flow::evolve as evolve_series;
use fdlab_core::functionals::{gns_deficit, stability_rhs, DeficitSpec};
use fdlab_core::{
    derive, hardy_poincare_gap, initial_data, make_grid, region_scan, region_scan_critical, smallest_eigenvalue,
    CknParameters, DerivedParameters, Error, FlowSeries, RadialField, RadialGrid, Spacing, Summary,
};

use crate::config::{parse_range, RunConfig};

pub struct Context {
    pub out_dir: PathBuf,
    pub tol: Option<f64>,
}

impl Context {
    fn path(&self, name: impl AsRef<Path>) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating output directory {}", self.out_dir.display()))?;
        Ok(self.out_dir.join(name))
    }

    fn write(&self, name: impl AsRef<Path>, text: &str) -> Result<PathBuf> {
        let path = self.path(name)?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

/// Usage and precondition errors map to 2; a run that could not be carried
/// through (solver failure) maps to 1 like a failed verdict.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(
            Error::NewtonDivergence { .. }
            | Error::ExplicitNegativity { .. }
            | Error::Eigen(_)
            | Error::LineSearch(_)
            | Error::DegenerateWindow(_)
            | Error::NegativeDensity { .. },
        ) => 1,
        _ => 2,
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

/// Config echo, summary on stdout and in `<name>_summary.txt`.
fn finish(ctx: &Context, name: &str, cfg: Option<&RunConfig>, summary: &Summary, pass: bool) -> Result<bool> {
    if let Some(cfg) = cfg {
        ctx.write(format!("{name}_config.cfg"), &cfg.to_string())?;
    }
    let mut s = summary.clone();
    s.push("verdict", verdict(pass));
    ctx.write(format!("{name}_summary.txt"), &s.to_string())?;
    print!("{s}");
    Ok(pass)
}

fn spectral_grid(dp: &DerivedParameters) -> Result<Arc<RadialGrid>> {
    Ok(Arc::new(make_grid(80.0, 2048, Spacing::Geometric(1.003), dp)?))
}

fn run_flow(cfg: &RunConfig, snapshots: bool) -> Result<(DerivedParameters, FlowSeries)> {
    let dp = cfg.derived()?;
    let grid = cfg.grid(&dp)?;
    let v0 = initial_data(cfg.initial.kind(cfg.seed), &grid, &dp, None)?;
    let series = evolve_series(&v0, &cfg.flow(grid, snapshots), &dp)?;
    Ok((dp, series))
}

fn push_params(s: &mut Summary, cfg: &RunConfig, dp: &DerivedParameters) {
    s.push("d", cfg.d)
        .push("beta", cfg.beta)
        .push("gamma", cfg.gamma)
        .push("m", cfg.m);
    s.push("alpha", dp.alpha).push("n", dp.n);
}

pub fn region(ctx: &Context, d: u32, p: &str, beta: &str, gamma: &str, output: &Path) -> Result<bool> {
    let beta = parse_range(beta)?;
    let gamma = parse_range(gamma)?;
    let cells = if p.trim() == "critical" {
        region_scan_critical(d, beta, gamma)?
    } else {
        let p: f64 = p.trim().parse().with_context(|| format!("bad exponent p = '{p}'"))?;
        region_scan(d, p, beta, gamma)?
    };
    let mut csv = String::from("beta,gamma,label\n");
    for c in &cells {
        let _ = writeln!(csv, "{},{},{}", c.beta, c.gamma, c.label);
    }
    let path = ctx.write(output, &csv)?;
    let count = |label| cells.iter().filter(|c| c.label == label).count();
    let mut s = Summary::new();
    s.push("d", d)
        .push("p", p)
        .push("cells", cells.len())
        .push("output", path.display());
    for label in [
        fdlab_core::RegionLabel::Symmetry,
        fdlab_core::RegionLabel::SymmetryBreaking,
        fdlab_core::RegionLabel::FSBoundary,
        fdlab_core::RegionLabel::Inadmissible,
    ] {
        s.push(label.as_str(), count(label));
    }
    finish(ctx, "region", None, &s, true)
}

pub fn gap(ctx: &Context, cfg: &RunConfig) -> Result<bool> {
    let dp = cfg.derived()?;
    let grid = cfg.grid(&dp)?;
    let r = hardy_poincare_gap(&dp, &grid, cfg.lmax)?;
    ctx.write("gap_modes.csv", &r.to_csv())?;
    if let Some(csv) = r.eigenfunction_csv(r.gap_mode) {
        ctx.write("gap_eigenfunction.csv", &csv)?;
    }
    for m in &r.modes {
        println!("l = {:>2}  Lambda_l = {}", m.l, m.lambda);
    }
    let tol = ctx.tol(5e-3);
    let mut s = Summary::new();
    push_params(&mut s, cfg, &dp);
    s.push("N", cfg.cells).push("rmax", cfg.rmax);
    s.push("lambda_numeric", r.gap)
        .push("lambda_closed", r.closed_form)
        .push("gap_mode", r.gap_mode);
    s.push("rel_dev", r.rel_dev).push("tol", tol);
    finish(ctx, "gap", Some(cfg), &s, r.rel_dev <= tol)
}

pub fn evolve(ctx: &Context, cfg: &RunConfig) -> Result<bool> {
    let (dp, series) = run_flow(cfg, false)?;
    ctx.write("evolve_series.csv", &series.to_csv())?;
    let tol = ctx.tol(1e-12);
    let f0 = series.rows.first().map_or(0.0, |r| r.entropy);
    let monotone = series
        .rows
        .windows(2)
        .all(|w| w[1].entropy <= w[0].entropy + 1e-12 * f0 + FIT_ENTROPY_FLOOR);
    let mut s = Summary::new();
    push_params(&mut s, cfg, &dp);
    s.push("rows", series.rows.len());
    s.push("entropy_initial", f0)
        .push("entropy_final", series.rows.last().map_or(0.0, |r| r.entropy));
    s.push("max_mass_drift", series.max_mass_drift)
        .push("entropy_nonincreasing", monotone);
    s.push("entropy_production_residual", check_entropy_production(&series));
    finish(ctx, "evolve", Some(cfg), &s, series.max_mass_drift <= tol && monotone)
}

pub fn rates(ctx: &Context, cfg: &RunConfig) -> Result<bool> {
    let (dp, series) = run_flow(cfg, false)?;
    ctx.write("rates_series.csv", &series.to_csv())?;
    // radial sector only; unavailable outside the Hardy-Poincare range
    let lambda0 = smallest_eigenvalue(0, &spectral_grid(&dp)?, &dp).ok().map(|r| r.lambda);
    let fit = fit_decay_rate(&series, cfg.window, lambda0)?;
    let mut s = Summary::new();
    push_params(&mut s, cfg, &dp);
    s.push("window", format!("{}:{}", fit.window.0, fit.window.1));
    s.push("rate_baseline", fit.predictions.baseline);
    s.push("rate_improved", fit.predictions.improved);
    s.push("rate_linearized", fit.predictions.linearized);
    if let Some(l) = fit.linearized_radial {
        s.push("rate_linearized_radial", l);
    }
    s.push("slope", fit.slope)
        .push("r_squared", fit.r_squared)
        .push("points", fit.points);
    s.push("meets_baseline", fit.meets_baseline)
        .push("meets_improved", fit.meets_improved);
    if let Some(dev) = fit.linearized_rel_dev {
        s.push("linearized_rel_dev", dev);
    }
    s.push("entropy_production_residual", check_entropy_production(&series));
    match improved_rate_from_zero(&series, &dp) {
        Ok(r) => {
            s.push("improved_from_zero", r.holds)
                .push("improved_from_zero_margin", r.margin);
        }
        Err(e) => {
            s.push("improved_from_zero", format!("refused ({e})"));
        }
    }
    finish(ctx, "rates", Some(cfg), &s, fit.passed())
}

pub fn ghp(ctx: &Context, cfg: &RunConfig) -> Result<bool> {
    let (dp, series) = run_flow(cfg, true)?;
    ctx.write("ghp_series.csv", &series.to_csv())?;
    let c = ghp_sandwich(&series, cfg.onset)?;
    let th = threshold_time(&series, &cfg.epsilons)?;
    let mut csv = String::from("eps,t_star\n");
    for (e, t) in th.epsilons.iter().zip(&th.t_star) {
        let _ = writeln!(csv, "{e},{}", t.map_or("censored".to_string(), |t| t.to_string()));
    }
    ctx.write("ghp_threshold.csv", &csv)?;
    let mut s = Summary::new();
    push_params(&mut s, cfg, &dp);
    s.push("onset", c.onset)
        .push("c_under", c.c_under)
        .push("c_over", c.c_over);
    if let Some(r) = c.unbounded_at {
        s.push("unbounded_at", r);
    }
    s.push("straddles_one", c.straddles_one());
    s.push("threshold_monotone", th.monotone)
        .push("threshold_all_finite", th.all_finite());
    if let Some(a) = th.a_fit {
        s.push("a_fit", a);
    }
    finish(ctx, "ghp", Some(cfg), &s, c.straddles_one() && th.monotone)
}

pub fn quotient(ctx: &Context, cfg: &RunConfig) -> Result<bool> {
    let (dp, series) = run_flow(cfg, false)?;
    ctx.write("quotient_series.csv", &series.to_csv())?;
    let violation = check_quotient_ode(&series)?;
    let tol = ctx.tol(0.02);
    let mut s = Summary::new();
    push_params(&mut s, cfg, &dp);
    s.push("quotient_violation", violation).push("tol", tol);
    finish(ctx, "quotient", Some(cfg), &s, violation <= tol)
}

pub fn renyi(ctx: &Context, cfg: &RunConfig) -> Result<bool> {
    let (dp, series) = run_flow(cfg, true)?;
    ctx.write("renyi_series.csv", &series.to_csv())?;
    let r = renyi_growth_check(&series, &dp)?;
    let mut csv = String::from("t,E\n");
    for (t, e) in &r.energy {
        let _ = writeln!(csv, "{t},{e}");
    }
    ctx.write("renyi_energy.csv", &csv)?;
    let tol = ctx.tol(1e-6);
    let mut s = Summary::new();
    push_params(&mut s, cfg, &dp);
    s.push("exponent", r.exponent).push("slope", r.slope);
    s.push("max_violation", r.max_violation)
        .push("min_excess", r.min_excess)
        .push("tol", tol);
    finish(ctx, "renyi", Some(cfg), &s, r.max_violation <= tol)
}

pub fn deficit(ctx: &Context, d: u32, p: f64, input: Option<&Path>, cells: usize, rmax: f64) -> Result<bool> {
    let f = match input {
        Some(path) => RadialField::read_csv(path).with_context(|| format!("reading {}", path.display()))?,
        None => {
            let dp = derive(&CknParameters::from_p(d, 0.0, 0.0, p))?;
            let grid = Arc::new(make_grid(rmax, cells, Spacing::Geometric(1.005), &dp)?);
            let g = RadialField::from_fn(grid, |r| (1.0 + r * r).powf(-1.0 / (p - 1.0)))?;
            ctx.write("deficit_input.csv", &g.to_csv())?;
            g
        }
    };
    if f.values().iter().any(|v| !v.is_finite()) {
        bail!("input field has non-finite values");
    }
    let spec = DeficitSpec::calibrated(d, p, f.grid())?;
    let def = gns_deficit(&f, &spec)?;
    let (rhs, c_star) = stability_rhs(&f, &spec)?;
    let tol = ctx.tol(1e-9);
    let relative = def.value / def.positive_part;
    let mut s = Summary::new();
    s.push("d", d).push("p", p).push("cells", f.len());
    s.push("deficit", def.value).push("deficit_relative", relative);
    s.push("stability_rhs", rhs)
        .push("c_star", c_star)
        .push("k_gns", spec.k_gns)
        .push("tol", tol);
    finish(ctx, "deficit", None, &s, relative >= -tol)
}
