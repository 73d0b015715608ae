//! Conservative radial finite-volume solver for the self-similar fast
//! diffusion flow in the artificial-dimension frame,
//!
//! ```text
//! d_t v = alpha^2 s^{1-n} d_s [ s^{n-1} v d_s (s^2 - v^{m-1}) ],
//! ```
//!
//! whose stationary state is `B(s) = (1 + s^2)^{1/(m-1)}`. Fluxes live on cell
//! edges, `Phi = alpha^2 c s_e^{n-1} v_e D(s^2 - v^{m-1})` with the arithmetic
//! edge average `v_e` and the centered difference `D`; they vanish at both
//! ends of the domain, so mass is conserved up to round-off.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::constants::DerivedParameters;
use crate::error::{Error, Result};
use crate::functionals::{entropy_report, power_integral, EntropyReport};
use crate::profiles::{barenblatt_stationary, project, ProfileFamily, ProfileSpec, RadialField, RadialGrid};

/// Time integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Backward Euler, nonlinear system solved by damped Newton.
    BackwardEulerNewton { tol: f64, max_iter: usize },
    /// Forward Euler; `cfl_safety` scales the stable step quoted in errors.
    Explicit { cfl_safety: f64 },
}

impl Default for Scheme {
    fn default() -> Self {
        Scheme::BackwardEulerNewton {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::BackwardEulerNewton { tol, max_iter } => write!(f, "be-newton:{tol}:{max_iter}"),
            Scheme::Explicit { cfl_safety } => write!(f, "explicit:{cfl_safety}"),
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |k: usize, default: f64| -> Result<f64> {
            match parts.get(k) {
                None => Ok(default),
                Some(x) => x.parse().map_err(|_| Error::Parse(format!("bad scheme field '{x}'"))),
            }
        };
        match parts[0] {
            "be-newton" | "implicit" => Ok(Scheme::BackwardEulerNewton {
                tol: num(1, 1e-10)?,
                max_iter: num(2, 50.0)? as usize,
            }),
            "explicit" => Ok(Scheme::Explicit {
                cfl_safety: num(1, 0.9)?,
            }),
            other => Err(Error::Parse(format!("unknown scheme '{other}' (be-newton | explicit)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub grid: Arc<RadialGrid>,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Below this value the pressure `v^{m-1}` is continued linearly; the
    /// conserved variable itself is never modified. `None` selects
    /// [`FlowConfig::default_floor`].
    pub floor: Option<f64>,
    pub record_every: usize,
    /// Keep a copy of `v` with every recorded row.
    pub keep_snapshots: bool,
}

impl FlowConfig {
    pub fn new(grid: Arc<RadialGrid>, dt: f64, t_end: f64) -> Self {
        Self {
            grid,
            dt,
            t_end,
            scheme: Scheme::default(),
            floor: None,
            record_every: 1,
            keep_snapshots: false,
        }
    }

    /// A millionth of the stationary profile at the outer radius: below
    /// every resolved value, yet large enough for `floor^{m-2}` to stay
    /// finite.
    pub fn default_floor(&self, m: f64) -> f64 {
        1e-6 * barenblatt_stationary(self.grid.r_max(), m)
    }

    pub fn floor(&self, m: f64) -> f64 {
        self.floor.unwrap_or_else(|| self.default_floor(m))
    }

    pub fn validate(&self, v0_max: f64, m: f64) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "t_end = {} must be nonnegative",
                self.t_end
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        if let Scheme::BackwardEulerNewton { tol, max_iter } = self.scheme {
            if !(tol > 0.0 && tol <= 1e-6) {
                return Err(Error::InvalidArgument(format!(
                    "Newton tolerance {tol} must lie in (0, 1e-6]"
                )));
            }
            if max_iter == 0 {
                return Err(Error::InvalidArgument("max_iter must be positive".into()));
            }
        }
        let floor = self.floor(m);
        if !(floor > 0.0) || floor > 1e-12 * v0_max {
            return Err(Error::InvalidArgument(format!(
                "floor {floor} must be positive and at most 1e-12 times the initial maximum"
            )));
        }
        if !((1.0 - m) * floor.powf(m - 2.0)).is_finite() {
            return Err(Error::InvalidArgument(format!(
                "floor {floor} is too small: the pressure derivative overflows"
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub v: RadialField,
    pub newton_iters_last: usize,
    pub mass0: f64,
}

impl FlowState {
    pub fn new(v: RadialField) -> Result<Self> {
        v.check_nonnegative()?;
        let mass0 = v.mass();
        if !(mass0 > 0.0) {
            return Err(Error::InvalidArgument("initial datum has zero mass".into()));
        }
        Ok(Self {
            t: 0.0,
            v,
            newton_iters_last: 0,
            mass0,
        })
    }

    pub fn mass_drift(&self) -> f64 {
        (self.v.mass() - self.mass0).abs() / self.mass0
    }
}

/// Edge coefficients `alpha^2 c s_e^{n-1} / h_e` and squared node radii.
struct Stencil {
    k: Vec<f64>,
    s2: Vec<f64>,
    vol: Vec<f64>,
}

impl Stencil {
    fn new(grid: &RadialGrid, alpha: f64) -> Self {
        let a2 = alpha * alpha;
        let k = grid
            .edge_weights()
            .iter()
            .zip(grid.center_gaps())
            .map(|(w, h)| a2 * w / (h * h))
            .collect();
        let s2 = grid.nodes().iter().map(|s| s * s).collect();
        Self {
            k,
            s2,
            vol: grid.volumes().to_vec(),
        }
    }

    /// Potential `s^2 - P(v)` and its derivative in `v`, where `P(v) =
    /// v^{m-1}` above `floor` and its tangent line below.
    fn potential(&self, v: &[f64], m: f64, floor: f64) -> (Vec<f64>, Vec<f64>) {
        let p_floor = floor.powf(m - 1.0);
        let slope_floor = (1.0 - m) * p_floor / floor;
        let mut q = Vec::with_capacity(v.len());
        let mut dq = Vec::with_capacity(v.len());
        for (x, s2) in v.iter().zip(&self.s2) {
            if *x >= floor {
                let p = x.powf(m - 1.0);
                q.push(s2 - p);
                dq.push((1.0 - m) * p / x);
            } else {
                q.push(s2 - p_floor - slope_floor * (floor - x.max(0.0)));
                dq.push(slope_floor);
            }
        }
        (q, dq)
    }

    fn fluxes(&self, v: &[f64], q: &[f64]) -> Vec<f64> {
        self.k
            .iter()
            .enumerate()
            .map(|(e, k)| k * 0.5 * (v[e] + v[e + 1]) * (q[e + 1] - q[e]))
            .collect()
    }

    /// Net inflow `Phi_{i+1/2} - Phi_{i-1/2}` with no-flux ends.
    fn divergence(&self, flux: &[f64]) -> Vec<f64> {
        let n = self.vol.len();
        (0..n)
            .map(|i| {
                let out = if i + 1 < n { flux[i] } else { 0.0 };
                let inn = if i > 0 { flux[i - 1] } else { 0.0 };
                out - inn
            })
            .collect()
    }
}

/// Cells below this fraction of the maximum are excluded from Newton
/// damping.
const RESOLVED_FRACTION: f64 = 1e-10;

/// Solves a tridiagonal system in place (Thomas algorithm); `lower[0]` and
/// `upper[n-1]` are ignored.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::NewtonDivergence {
            t: f64::NAN,
            iterations: 0,
            residual: f64::NAN,
        });
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::NewtonDivergence {
                t: f64::NAN,
                iterations: 0,
                residual: f64::NAN,
            });
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Advances `state` by one time step.
pub fn step(state: &FlowState, cfg: &FlowConfig, dp: &DerivedParameters) -> Result<FlowState> {
    let grid = state.v.grid();
    let st = Stencil::new(grid, dp.alpha);
    let m = dp.m;
    let dt = cfg.dt;
    let old = state.v.values();
    let t_new = state.t + dt;
    match cfg.scheme {
        Scheme::Explicit { cfl_safety } => {
            // forward Euler, sub-stepped at cfl_safety times the local stable step
            let mut v = old.to_vec();
            let mut left = dt;
            let mut substeps = 0usize;
            while left > 0.0 {
                let (q, dq) = st.potential(&v, m, cfg.floor(m));
                let h = (cfl_safety * explicit_stable_dt(&st, &v, &q, &dq)).min(left);
                substeps += 1;
                if !(h > 0.0) || substeps > 10_000_000 {
                    return Err(Error::InvalidArgument(format!(
                        "explicit scheme needs more than {substeps} sub-steps; use the implicit scheme"
                    )));
                }
                let div = st.divergence(&st.fluxes(&v, &q));
                for i in 0..v.len() {
                    v[i] += h * div[i] / st.vol[i];
                    if v[i] < 0.0 {
                        return Err(Error::ExplicitNegativity {
                            radius: grid.nodes()[i],
                        });
                    }
                }
                left = if h >= left { 0.0 } else { left - h };
            }
            Ok(FlowState {
                t: t_new,
                v: RadialField::new(grid.clone(), v)?,
                newton_iters_last: substeps,
                mass0: state.mass0,
            })
        }
        Scheme::BackwardEulerNewton { tol, max_iter } => {
            let (v, iters) =
                implicit_substeps(&st, old, dt, m, cfg.floor(m), tol, max_iter, 0).map_err(|e| match e {
                    Error::NewtonDivergence {
                        iterations, residual, ..
                    } => Error::NewtonDivergence {
                        t: t_new,
                        iterations,
                        residual,
                    },
                    other => other,
                })?;
            Ok(FlowState {
                t: t_new,
                v: RadialField::new(grid.clone(), v)?,
                newton_iters_last: iters,
                mass0: state.mass0,
            })
        }
    }
}

/// Halvings of a failed implicit step before giving up.
const MAX_HALVINGS: u32 = 12;

/// Backward Euler over `dt`, split in two halves (recursively) whenever
/// Newton fails. Returns the new values and the total Newton iterations.
#[allow(clippy::too_many_arguments)]
fn implicit_substeps(
    st: &Stencil,
    old: &[f64],
    dt: f64,
    m: f64,
    floor: f64,
    tol: f64,
    max_iter: usize,
    depth: u32,
) -> Result<(Vec<f64>, usize)> {
    match implicit_step(st, old, dt, m, floor, tol, max_iter) {
        Ok(r) => Ok(r),
        Err(e) if depth >= MAX_HALVINGS => Err(e),
        Err(_) => {
            let (mid, i1) = implicit_substeps(st, old, 0.5 * dt, m, floor, tol, max_iter, depth + 1)?;
            let (end, i2) = implicit_substeps(st, &mid, 0.5 * dt, m, floor, tol, max_iter, depth + 1)?;
            Ok((end, i1 + i2))
        }
    }
}

/// One backward-Euler step solved by damped Newton.
fn implicit_step(
    st: &Stencil,
    old: &[f64],
    dt: f64,
    m: f64,
    floor: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = old.len();
    let mut v = old.to_vec();
    let mut last_change = f64::INFINITY;
    for it in 1..=max_iter {
        let (q, dq) = st.potential(&v, m, floor);
        let flux = st.fluxes(&v, &q);
        let div = st.divergence(&flux);
        let mut rhs: Vec<f64> = (0..n).map(|i| -(st.vol[i] * (v[i] - old[i]) / dt - div[i])).collect();
        let mut diag: Vec<f64> = st.vol.iter().map(|w| w / dt).collect();
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for e in 0..n - 1 {
            let vh = 0.5 * (v[e] + v[e + 1]);
            let dqe = q[e + 1] - q[e];
            let d_left = st.k[e] * (0.5 * dqe - vh * dq[e]);
            let d_right = st.k[e] * (0.5 * dqe + vh * dq[e + 1]);
            // row e gets -Phi_e, row e+1 gets +Phi_e
            diag[e] -= d_left;
            upper[e] -= d_right;
            lower[e + 1] += d_left;
            diag[e + 1] += d_right;
        }
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs).map_err(|_| Error::NewtonDivergence {
            t: f64::NAN,
            iterations: it,
            residual: last_change,
        })?;
        // fraction-to-boundary damping on resolved cells; cells far
        // below the maximum only keep a tenth of their value
        let vmax = v.iter().cloned().fold(0.0, f64::max);
        let cutoff = RESOLVED_FRACTION * vmax;
        let mut theta: f64 = 1.0;
        for i in 0..n {
            if rhs[i] < 0.0 && v[i] > cutoff {
                theta = theta.min(0.9 * v[i] / -rhs[i]);
            }
        }
        let mut change: f64 = 0.0;
        for i in 0..n {
            let dv = theta * rhs[i];
            change = change.max(dv.abs() / vmax);
            v[i] = (v[i] + dv).max(0.1 * v[i]);
        }
        if !change.is_finite() {
            return Err(Error::NewtonDivergence {
                t: f64::NAN,
                iterations: it,
                residual: change,
            });
        }
        last_change = change;
        if theta == 1.0 && change <= tol {
            return Ok((v, it));
        }
    }
    Err(Error::NewtonDivergence {
        t: f64::NAN,
        iterations: max_iter,
        residual: last_change,
    })
}

/// Largest forward-Euler step keeping the update diagonally dominant.
fn explicit_stable_dt(st: &Stencil, v: &[f64], q: &[f64], dq: &[f64]) -> f64 {
    let n = v.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let mut rate = 0.0;
        if i + 1 < n {
            let vh = 0.5 * (v[i] + v[i + 1]);
            rate += st.k[i] * (vh * dq[i] - 0.5 * (q[i + 1] - q[i])).abs();
        }
        if i > 0 {
            let vh = 0.5 * (v[i - 1] + v[i]);
            rate += st.k[i - 1] * (vh * dq[i] + 0.5 * (q[i] - q[i - 1])).abs();
        }
        if rate > 0.0 {
            best = best.min(st.vol[i] / rate);
        }
    }
    best
}

/// Recorded trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSeries {
    pub rows: Vec<EntropyReport>,
    /// `v` at each recorded row, when requested.
    pub snapshots: Vec<RadialField>,
    pub dp: DerivedParameters,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub record_every: usize,
    pub newton_iters: Vec<usize>,
    pub max_mass_drift: f64,
    /// Mass of the projected stationary profile on the run's grid.
    pub reference_mass: f64,
}

impl FlowSeries {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn entropies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.entropy).collect()
    }

    /// Relative deviation of the initial mass from the stationary profile's.
    pub fn mass_mismatch(&self) -> f64 {
        match self.rows.first() {
            Some(r) => (r.mass - self.reference_mass).abs() / self.reference_mass,
            None => f64::NAN,
        }
    }

    fn meta(&self) -> Vec<(String, String)> {
        let dp = &self.dp;
        vec![
            ("d".into(), dp.d.to_string()),
            ("beta".into(), dp.beta.to_string()),
            ("gamma".into(), dp.gamma.to_string()),
            ("m".into(), dp.m.to_string()),
            ("alpha".into(), dp.alpha.to_string()),
            ("n".into(), dp.n.to_string()),
            ("dt".into(), self.dt.to_string()),
            ("t_end".into(), self.t_end.to_string()),
            ("scheme".into(), self.scheme.to_string()),
            ("record_every".into(), self.record_every.to_string()),
            ("max_mass_drift".into(), self.max_mass_drift.to_string()),
            ("reference_mass".into(), self.reference_mass.to_string()),
        ]
    }

    pub fn to_csv(&self) -> String {
        crate::functionals::reports_to_csv(&self.meta(), &self.rows)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Parses a series written by [`FlowSeries::to_csv`] (snapshots are not
    /// part of the format).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut rows = Vec::new();
        let mut seen_header = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
                continue;
            }
            if !seen_header {
                if line != EntropyReport::csv_header() {
                    return Err(Error::Parse(format!("unexpected header '{line}'")));
                }
                seen_header = true;
                continue;
            }
            rows.push(EntropyReport::parse_csv_row(line)?);
        }
        let get = |k: &str| -> Result<&String> {
            meta.get(k)
                .ok_or_else(|| Error::Parse(format!("missing header field '{k}'")))
        };
        let num = |k: &str| -> Result<f64> {
            get(k)?
                .parse()
                .map_err(|_| Error::Parse(format!("bad header field '{k}'")))
        };
        let params = crate::constants::CknParameters::new(
            get("d")?
                .parse()
                .map_err(|_| Error::Parse("bad header field 'd'".into()))?,
            num("beta")?,
            num("gamma")?,
            num("m")?,
        );
        Ok(Self {
            rows,
            snapshots: Vec::new(),
            dp: crate::constants::derive(&params)?,
            dt: num("dt")?,
            t_end: num("t_end")?,
            scheme: get("scheme")?.parse()?,
            record_every: num("record_every")? as usize,
            newton_iters: Vec::new(),
            max_mass_drift: num("max_mass_drift")?,
            reference_mass: num("reference_mass")?,
        })
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Stationary profile projected on `grid`.
pub fn reference_profile(grid: &Arc<RadialGrid>, m: f64) -> Result<RadialField> {
    project(&ProfileSpec::natural(ProfileFamily::BarenblattStationary { m }), grid)
}

/// Runs the flow from `v0` up to `t_end`, recording every
/// `record_every` steps and always at the final time.
pub fn evolve(v0: &RadialField, cfg: &FlowConfig, dp: &DerivedParameters) -> Result<FlowSeries> {
    if v0.grid().as_ref() != cfg.grid.as_ref() {
        return Err(Error::GridMismatch(
            "initial datum is not on the configured grid".into(),
        ));
    }
    let vmax = v0.values().iter().cloned().fold(0.0, f64::max);
    cfg.validate(vmax, dp.m)?;
    let reference = reference_profile(v0.grid(), dp.m)?;
    let mut state = FlowState::new(v0.clone())?;
    let mut series = FlowSeries {
        rows: vec![entropy_report(0.0, &state.v, &reference, dp)?],
        snapshots: if cfg.keep_snapshots {
            vec![state.v.clone()]
        } else {
            Vec::new()
        },
        dp: *dp,
        dt: cfg.dt,
        t_end: cfg.t_end,
        scheme: cfg.scheme,
        record_every: cfg.record_every,
        newton_iters: Vec::new(),
        max_mass_drift: 0.0,
        reference_mass: reference.mass(),
    };
    let steps = cfg.steps();
    for k in 1..=steps {
        state = step(&state, cfg, dp)?;
        // exact multiple of dt to avoid drift in recorded times
        state.t = k as f64 * cfg.dt;
        series.newton_iters.push(state.newton_iters_last);
        series.max_mass_drift = series.max_mass_drift.max(state.mass_drift());
        if k % cfg.record_every == 0 || k == steps {
            series.rows.push(entropy_report(state.t, &state.v, &reference, dp)?);
            if cfg.keep_snapshots {
                series.snapshots.push(state.v.clone());
            }
        }
    }
    Ok(series)
}

/// Solution of the original-variable flow recovered from a self-similar
/// snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Original time `t` with `R(t) = e^{2 alpha^2 tau}`.
    pub t: f64,
    /// `R(t)`
    pub scale: f64,
    /// `U(t, s) = lambda^n R^{-n} V(tau, lambda s / R)` on the dilated grid;
    /// `u(t, r) = U(t, r^alpha)`, see [`RadialGrid::original_radii`].
    pub field: RadialField,
    /// `int u^m |x|^{-gamma} dx`
    pub energy: f64,
}

/// Original time reached at self-similar time `tau`.
pub fn original_time(tau: f64, dp: &DerivedParameters) -> f64 {
    let a2 = dp.alpha * dp.alpha;
    (2.0 * a2 * dp.xi_n * tau).exp_m1() / (a2 * dp.xi_n)
}

/// Undoes the self-similar change of variables for a snapshot `v` taken at
/// self-similar time `tau`.
pub fn reconstruct_original(tau: f64, v: &RadialField, dp: &DerivedParameters) -> Result<Reconstruction> {
    if !(dp.xi_n > 0.0) {
        return Err(Error::Inadmissible("reconstruction needs m > m_c".into()));
    }
    let scale = (2.0 * dp.alpha * dp.alpha * tau).exp();
    let t = original_time(tau, dp);
    let lam = dp.lambda_scale;
    let dil = scale / lam;
    let grid = Arc::new(v.grid().dilated(dil)?);
    let amp = dil.powf(-v.grid().n_eff());
    let field = RadialField::new(grid, v.values().iter().map(|x| amp * x).collect())?;
    let energy = power_integral(&field, dp.m);
    Ok(Reconstruction {
        t,
        scale,
        field,
        energy,
    })
}

/// Initial data families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialKind {
    /// `B (1 + a cos(k pi s^2 / (1 + s^2)))`, bounded relative perturbation.
    PerturbedBarenblatt { mode: u32, amplitude: f64 },
    /// Compactly supported `(1 - ((s - c) / w)^2)_+^2`.
    Bump { center: f64, width: f64 },
    /// `(1 + s^2)^{-exponent / 2}`.
    HeavyTail { exponent: f64 },
    /// `B (1 + sum_k a_k cos(k pi s^2 / (1 + s^2)))`, `k = 1..=modes`, with
    /// random coefficients scaled to `sum |a_k| = amplitude`.
    RandomModes { seed: u64, modes: u32, amplitude: f64 },
}

/// Builds a nonnegative initial datum with weighted mass `mass_target`
/// (default: the discrete mass of the projected stationary profile, so that
/// the grid steady state is the reference).
pub fn initial_data(
    kind: InitialKind,
    grid: &Arc<RadialGrid>,
    dp: &DerivedParameters,
    mass_target: Option<f64>,
) -> Result<RadialField> {
    let m = dp.m;
    let raw = match kind {
        InitialKind::PerturbedBarenblatt { mode, amplitude } => {
            if !(amplitude.abs() < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "amplitude {amplitude} would make the datum negative"
                )));
            }
            let k = mode as f64;
            RadialField::from_fn(grid.clone(), |s| {
                let u = s * s / (1.0 + s * s);
                barenblatt_stationary(s, m) * (1.0 + amplitude * (k * std::f64::consts::PI * u).cos())
            })?
        }
        InitialKind::Bump { center, width } => {
            if !(width > 0.0) || !(center >= 0.0) {
                return Err(Error::InvalidArgument("bump needs width > 0 and center >= 0".into()));
            }
            RadialField::from_fn(grid.clone(), |s| {
                let z = (s - center) / width;
                if z.abs() < 1.0 {
                    (1.0 - z * z).powi(2)
                } else {
                    0.0
                }
            })?
        }
        InitialKind::HeavyTail { exponent } => {
            RadialField::from_fn(grid.clone(), |s| (1.0 + s * s).powf(-exponent / 2.0))?
        }
        InitialKind::RandomModes { seed, modes, amplitude } => {
            if !(amplitude.abs() < 1.0) || modes == 0 {
                return Err(Error::InvalidArgument(format!(
                    "need 0 < modes and |amplitude| < 1, got {modes} and {amplitude}"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let total: f64 = raw.iter().map(|a| a.abs()).sum();
            let coeffs: Vec<f64> = raw.iter().map(|a| amplitude * a / total).collect();
            RadialField::from_fn(grid.clone(), |s| {
                let u = s * s / (1.0 + s * s);
                let h: f64 = coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * u).cos())
                    .sum();
                barenblatt_stationary(s, m) * (1.0 + h)
            })?
        }
    };
    raw.check_nonnegative()?;
    let target = match mass_target {
        Some(t) => t,
        None => reference_profile(grid, m)?.mass(),
    };
    let mass = raw.mass();
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument("initial datum has no mass on the grid".into()));
    }
    Ok(raw.scaled(target / mass))
}

/// Whether the tail functional of `(1 + s^2)^{-exponent/2}` stays bounded as
/// the domain grows: the decay must be at least `s^{-2 delta}`.
pub fn heavy_tail_has_finite_a(exponent: f64, dp: &DerivedParameters) -> bool {
    exponent >= 2.0 * dp.delta
}

/// Comment-header CSV of a snapshot.
pub fn snapshot_csv(t: f64, v: &RadialField) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# t = {t}");
    s.push_str(&v.to_csv());
    s
}
