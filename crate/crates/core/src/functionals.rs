//! Scalar functionals on radial fields: weighted norms, relative entropy and
//! Fisher information, the GNS deficit, tail and moment diagnostics, and the
//! quadratic forms of the linearized problem.
//!
//! Gradients live on interior cell edges and are centered differences of
//! cell values, with arithmetic edge averages for the density factor. This is
//! the same stencil as the finite-volume flux in [`crate::flow`], so that the
//! discrete entropy identity `dF/dt = -I` is exact in semi-discrete form.

use std::fmt::Write as _;
use std::sync::Arc;

use statrs::function::beta::ln_beta;

use crate::constants::DerivedParameters;
use crate::error::{Error, Result};
use crate::profiles::{barenblatt_stationary, sphere_area, RadialField, RadialGrid};
use crate::quadrature::golden_section;

/// Column order of [`EntropyReport`] rows.
pub const REPORT_COLUMNS: [&str; 8] = ["t", "F", "I", "Q", "mass", "second_moment", "tail_A", "relerr_sup"];

/// Diagnostics of one field against the stationary profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    pub t: f64,
    pub entropy: f64,
    pub fisher: f64,
    /// `I / F`; `None` when `F` vanishes.
    pub quotient: Option<f64>,
    pub mass: f64,
    /// `int |x|^{sigma - gamma} v`, i.e. `int s^2 v dmu` in the artificial frame.
    pub second_moment: f64,
    pub tail_a: f64,
    /// `sup |v / B - 1|` over the grid.
    pub relerr_sup: f64,
}

impl EntropyReport {
    pub fn csv_header() -> String {
        REPORT_COLUMNS.join(",")
    }

    pub fn csv_row(&self) -> String {
        let q = self.quotient.map_or_else(|| "NaN".to_string(), |q| q.to_string());
        format!(
            "{},{},{},{},{},{},{},{}",
            self.t, self.entropy, self.fisher, q, self.mass, self.second_moment, self.tail_a, self.relerr_sup
        )
    }

    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != REPORT_COLUMNS.len() {
            return Err(Error::Parse(format!(
                "expected {} columns, got {}",
                REPORT_COLUMNS.len(),
                cols.len()
            )));
        }
        let num = |k: usize| -> Result<f64> {
            cols[k]
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad value '{}' in column {}", cols[k], REPORT_COLUMNS[k])))
        };
        let q = num(3)?;
        Ok(Self {
            t: num(0)?,
            entropy: num(1)?,
            fisher: num(2)?,
            quotient: if q.is_nan() { None } else { Some(q) },
            mass: num(4)?,
            second_moment: num(5)?,
            tail_a: num(6)?,
            relerr_sup: num(7)?,
        })
    }
}

/// Relative entropy below which the quotient `I / F` is reported undefined.
pub const ENTROPY_FLOOR: f64 = 1e-300;

/// Evaluates every column of [`EntropyReport`] for `v` against `reference`.
pub fn entropy_report(
    t: f64,
    v: &RadialField,
    reference: &RadialField,
    dp: &DerivedParameters,
) -> Result<EntropyReport> {
    let entropy = relative_entropy(v, reference, dp.m)?;
    let fisher = relative_fisher(v, reference, dp)?;
    let quotient = if entropy > ENTROPY_FLOOR {
        Some(fisher / entropy)
    } else {
        None
    };
    let relerr_sup = v
        .values()
        .iter()
        .zip(reference.values())
        .map(|(a, b)| (a / b - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(EntropyReport {
        t,
        entropy,
        fisher,
        quotient,
        mass: v.mass(),
        second_moment: second_moment(v),
        tail_a: tail_a(v, dp),
        relerr_sup,
    })
}

/// `(int |f|^q s^w dmu)^{1/q}` with the cell integrals of `s^w` computed
/// exactly. `w = 0` is the plain weighted norm of the grid measure.
pub fn weighted_norm(f: &RadialField, q: f64, weight_exponent: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!("norm exponent q = {q} must be >= 1")));
    }
    let g = f.grid();
    let k = g.n_eff() + weight_exponent;
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weight s^{weight_exponent} is not integrable at the origin in dimension {}",
            g.n_eff()
        )));
    }
    let factor = g.measure_factor();
    let sum: f64 = g
        .edges()
        .windows(2)
        .zip(f.values())
        .map(|(e, v)| {
            let w = if e[0] == 0.0 {
                e[1].powf(k) / k
            } else {
                e[0].powf(k) * (k * (e[1] / e[0]).ln()).exp_m1() / k
            };
            factor * w * v.abs().powf(q)
        })
        .sum();
    Ok(sum.powf(1.0 / q))
}

/// `int s^2 v dmu`.
pub fn second_moment(v: &RadialField) -> f64 {
    let g = v.grid();
    g.nodes()
        .iter()
        .zip(g.volumes())
        .zip(v.values())
        .map(|((s, w), x)| s * s * w * x)
        .sum()
}

/// `int v^m dmu`.
pub fn power_integral(v: &RadialField, m: f64) -> f64 {
    v.grid()
        .integrate(&v.values().iter().map(|x| x.max(0.0).powf(m)).collect::<Vec<_>>())
}

fn check_density(v: &RadialField, what: &str) -> Result<()> {
    v.check_nonnegative().map_err(|e| match e {
        Error::NegativeDensity { radius, value } => {
            Error::InvalidArgument(format!("{what} is negative ({value}) at r = {radius}"))
        }
        other => other,
    })
}

/// Bregman integrand `(x^m - 1 - m (x - 1)) / (m - 1)` for `x = v / B`,
/// written to avoid cancellation near `x = 1`.
fn bregman_ratio(x: f64, m: f64) -> f64 {
    let y = x - 1.0;
    if x == 0.0 {
        return 1.0;
    }
    ((m * y.ln_1p()).exp_m1() - m * y) / (m - 1.0)
}

/// Relative entropy `1/(m-1) int (v^m - B^m - m B^{m-1} (v - B)) dmu` of
/// `v` with respect to `reference`, over the grid only.
pub fn relative_entropy(v: &RadialField, reference: &RadialField, m: f64) -> Result<f64> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::InvalidArgument(format!("m = {m} must lie in (0, 1)")));
    }
    v.same_grid(reference)?;
    check_density(v, "density")?;
    check_density(reference, "reference")?;
    let g = v.grid();
    let mut sum = 0.0;
    for ((&x, &b), &w) in v.values().iter().zip(reference.values()).zip(g.volumes()) {
        if b > 0.0 {
            sum += w * b.powf(m) * bregman_ratio(x / b, m);
        } else if x > 0.0 {
            // reference vanishes: integrand is v^m / (m - 1) < 0 would break
            // convexity, the Bregman divergence is infinite there
            return Err(Error::InvalidArgument(
                "reference vanishes where the density does not".into(),
            ));
        }
    }
    Ok(sum.max(0.0))
}

/// Edge differences `(q_{i+1} - q_i) / (s_{i+1} - s_i)` of cell values.
fn edge_gradient(grid: &RadialGrid, q: &[f64]) -> Vec<f64> {
    grid.center_gaps()
        .iter()
        .enumerate()
        .map(|(i, h)| (q[i + 1] - q[i]) / h)
        .collect()
}

/// Relative Fisher information
/// `m/(1-m) int v |alpha d_s (v^{m-1} - B^{m-1})|^2 dmu`.
///
/// Edges with a vanishing neighbour are skipped (degenerate pressure); use
/// [`degenerate_edges`] to detect them.
pub fn relative_fisher(v: &RadialField, reference: &RadialField, dp: &DerivedParameters) -> Result<f64> {
    v.same_grid(reference)?;
    check_density(v, "density")?;
    let m = dp.m;
    let g = v.grid();
    let vals = v.values();
    let w: Vec<f64> = vals
        .iter()
        .zip(reference.values())
        .map(|(&x, &b)| {
            if x > 0.0 {
                x.powf(m - 1.0) - b.powf(m - 1.0)
            } else {
                f64::NAN
            }
        })
        .collect();
    let grad = edge_gradient(g, &w);
    let a2 = dp.alpha * dp.alpha;
    let sum: f64 = g
        .edge_weights()
        .iter()
        .enumerate()
        .filter(|(i, _)| vals[*i] > 0.0 && vals[*i + 1] > 0.0)
        .map(|(i, we)| we * 0.5 * (vals[i] + vals[i + 1]) * a2 * grad[i] * grad[i])
        .sum();
    Ok(m / (1.0 - m) * sum)
}

/// Number of interior edges with a nonpositive neighbour.
pub fn degenerate_edges(v: &RadialField) -> usize {
    v.values().windows(2).filter(|p| !(p[0] > 0.0 && p[1] > 0.0)).count()
}

/// Linearized free energy and Fisher information of a perturbation `h`:
/// `(m/2 int h^2 B^{2-m} dmu, m (1-m) int |alpha h'|^2 B dmu)`, with `B`
/// averaged on edges exactly like the density in [`relative_fisher`].
pub fn linearized_forms(h: &RadialField, dp: &DerivedParameters) -> Result<(f64, f64)> {
    let g = h.grid();
    let m = dp.m;
    let b: Vec<f64> = g.nodes().iter().map(|&s| barenblatt_stationary(s, m)).collect();
    let f_lin = 0.5
        * m
        * h.values()
            .iter()
            .zip(&b)
            .zip(g.volumes())
            .map(|((x, bb), w)| w * x * x * bb.powf(2.0 - m))
            .sum::<f64>();
    let grad = edge_gradient(g, h.values());
    let a2 = dp.alpha * dp.alpha;
    let i_lin = m
        * (1.0 - m)
        * g.edge_weights()
            .iter()
            .enumerate()
            .map(|(i, we)| we * a2 * grad[i] * grad[i] * 0.5 * (b[i] + b[i + 1]))
            .sum::<f64>();
    Ok((f_lin, i_lin))
}

/// Tail functional `sup_S S^{2 delta - n} int_{s > S} v dmu` over
/// the grid edges (the artificial-frame form of
/// `sup_R R^{sigma/(1-m) - (d-gamma)} int_{|x|>R} v |x|^{-gamma}`).
pub fn tail_a(v: &RadialField, dp: &DerivedParameters) -> f64 {
    let g = v.grid();
    let k = 2.0 * dp.delta - dp.n;
    let mut tail = 0.0;
    let mut best: f64 = 0.0;
    let vols = g.volumes();
    let vals = v.values();
    for i in (1..g.len()).rev() {
        tail += vols[i] * vals[i];
        best = best.max(g.edges()[i].powf(k) * tail);
    }
    best
}

/// [`tail_a`] of the stationary profile itself on `[0, inf)`, with every tail
/// integral in closed form (incomplete Beta function).
pub fn barenblatt_tail_a(grid: &RadialGrid, dp: &DerivedParameters) -> Result<f64> {
    let k = 2.0 * dp.delta - dp.n;
    let mut best: f64 = 0.0;
    for &s in &grid.edges()[1..] {
        let t = crate::profiles::power_tail(grid.measure_factor(), grid.n_eff(), dp.delta, s)?;
        best = best.max(s.powf(k) * t);
    }
    Ok(best)
}

/// Minimizes the relative entropy of `v` over the mass-preserving dilations
/// `B_lambda(s) = lambda^n B(lambda s)`. Returns `(F_star, lambda_star)`;
/// `v = B_lambda` gives `(0, lambda)`.
pub fn best_matching_entropy(v: &RadialField, m: f64) -> Result<(f64, f64)> {
    let grid = v.grid().clone();
    let n = grid.n_eff();
    let entropy_at = |log_l: f64| -> f64 {
        let l = log_l.exp();
        let b: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&s| l.powf(n) * barenblatt_stationary(l * s, m))
            .collect();
        match RadialField::new(grid.clone(), b) {
            Ok(bf) => relative_entropy(v, &bf, m).unwrap_or(f64::INFINITY),
            Err(_) => f64::INFINITY,
        }
    };
    let best = golden_section(entropy_at, -3.0, 3.0, 1e-8)?;
    if !best.value.is_finite() {
        return Err(Error::LineSearch("entropy is infinite along the whole family".into()));
    }
    if best.x < -3.0 + 1e-6 || best.x > 3.0 - 1e-6 {
        return Err(Error::LineSearch(format!(
            "minimum at the bracket end log lambda = {}",
            best.x
        )));
    }
    Ok((best.value, best.x.exp()))
}

/// `||v - ref||_1 / sqrt(F[v])`; `None` when the entropy vanishes.
pub fn ckp_ratio(v: &RadialField, reference: &RadialField, dp: &DerivedParameters) -> Result<Option<f64>> {
    let f = relative_entropy(v, reference, dp.m)?;
    if !(f > ENTROPY_FLOOR) {
        return Ok(None);
    }
    let l1: f64 = v
        .values()
        .iter()
        .zip(reference.values())
        .zip(v.grid().volumes())
        .map(|((a, b), w)| w * (a - b).abs())
        .sum();
    Ok(Some(l1 / f.sqrt()))
}

/// Moment ratios `(rho_1, rho_2)`:
/// `rho_1 = int s^2 v / (int v + A[v])` and
/// `rho_2 = (int v^m)^{1/m} / (M^{1-a} (int s^2 v)^a)` with
/// `a = n (1 - m) / (2 m)`.
pub fn moment_bounds_ratios(v: &RadialField, dp: &DerivedParameters) -> Result<(f64, f64)> {
    check_density(v, "density")?;
    let mass = v.mass();
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument("zero mass".into()));
    }
    let moment = second_moment(v);
    let rho1 = moment / (mass + tail_a(v, dp));
    let a = dp.n * (1.0 - dp.m) / (2.0 * dp.m);
    let rho2 = power_integral(v, dp.m).powf(1.0 / dp.m) / (mass.powf(1.0 - a) * moment.powf(a));
    Ok((rho1, rho2))
}

/// Ratio of `||u||_{L^inf(B_R)}` to the right-hand side of the Holder
/// interpolation inequality on `B_{2R}` with unit constant. Radii are
/// original-frame radii `s^{1/alpha}`; the seminorm is the sup over pairs of
/// cells inside `B_{2R}`.
pub fn holder_interpolation_check(u: &RadialField, r: f64, p: f64, mu: f64, dp: &DerivedParameters) -> Result<f64> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "Holder exponent {mu} must lie in (0, 1]"
        )));
    }
    if !(r > 0.0) || !(p >= 1.0) {
        return Err(Error::InvalidArgument("need R > 0 and p >= 1".into()));
    }
    let g = u.grid();
    let radii = g.original_radii();
    let vals = u.values();
    let lhs = radii
        .iter()
        .zip(vals)
        .filter(|(x, _)| **x <= r)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    let inner: Vec<usize> = (0..radii.len()).filter(|&i| radii[i] <= 2.0 * r).collect();
    if inner.is_empty() {
        return Err(Error::InvalidArgument(format!("no cell inside B_(2R) for R = {r}")));
    }
    let mut semi: f64 = 0.0;
    for (a, &i) in inner.iter().enumerate() {
        for &j in &inner[a + 1..] {
            let q = (vals[i] - vals[j]).abs() / (radii[j] - radii[i]).abs().powf(mu);
            semi = semi.max(q);
        }
    }
    let norm = inner
        .iter()
        .map(|&i| g.volumes()[i] * vals[i].abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p);
    let dg = dp.d as f64 - dp.gamma;
    let e = dg + p * mu;
    let rhs = semi.powf(dg / e) * norm.powf(p * mu / e) + r.powf(-dg / p) * norm;
    if !(rhs > 0.0) {
        return Err(Error::DegenerateWindow("interpolation right-hand side vanishes".into()));
    }
    Ok(lhs / rhs)
}

/// Constants of the unweighted GNS deficit
/// `delta[f] = (p-1)^2 ||grad f||_2^2 + 4 (d - p (d-2)) / (p+1) ||f||_{p+1}^{p+1}
///            - K ||f||_{2p}^{2 p chi}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeficitSpec {
    pub d: u32,
    pub p: f64,
    pub chi: f64,
    /// chosen so that the deficit of `g = (1 + |x|^2)^{-1/(p-1)}` vanishes
    pub k_gns: f64,
    /// optimal constant of `||f||_{2p} <= C ||grad f||^theta ||f||_{p+1}^{1-theta}`
    pub c_gns: f64,
    pub theta: f64,
}

impl DeficitSpec {
    /// Constants from closed-form norms of `g` on the whole space.
    pub fn new(d: u32, p: f64) -> Result<Self> {
        let (df, chi, theta) = Self::exponents(d, p)?;
        let s = sphere_area(d);
        // int (1 + r^2)^{-a} r^{d-1+2j} dr = B(d/2 + j, a - d/2 - j) / 2
        let radial = |a: f64, j: f64| -> Result<f64> {
            let b = a - df / 2.0 - j;
            if !(b > 0.0) {
                return Err(Error::Inadmissible(format!(
                    "g is not in the energy space for d = {d}, p = {p}"
                )));
            }
            Ok(0.5 * s * ln_beta(df / 2.0 + j, b).exp())
        };
        let e = 1.0 / (p - 1.0);
        let norm_2p = radial(2.0 * p * e, 0.0)?;
        let norm_p1 = radial((p + 1.0) * e, 0.0)?;
        // |g'|^2 = 4 r^2 e^2 (1 + r^2)^{-2 e - 2} and 2 e + 2 = 2 p e
        let grad2 = 4.0 * e * e * radial(2.0 * p * e, 1.0)?;
        Ok(Self::from_norms(d, p, chi, theta, grad2, norm_p1, norm_2p))
    }

    /// Constants with `K` calibrated on `grid`, so that the discrete deficit
    /// of the projected `g` vanishes to round-off.
    pub fn calibrated(d: u32, p: f64, grid: &Arc<RadialGrid>) -> Result<Self> {
        let (_, chi, theta) = Self::exponents(d, p)?;
        let base = Self::new(d, p).unwrap_or(Self {
            d,
            p,
            chi,
            k_gns: f64::NAN,
            c_gns: f64::NAN,
            theta,
        });
        let g = RadialField::from_fn(grid.clone(), |r| (1.0 + r * r).powf(-1.0 / (p - 1.0)))?;
        let (grad2, norm_p1, norm_2p) = deficit_terms(&g, p);
        let k = Self::from_norms(d, p, chi, theta, grad2, norm_p1, norm_2p).k_gns;
        Ok(Self { k_gns: k, ..base })
    }

    fn exponents(d: u32, p: f64) -> Result<(f64, f64, f64)> {
        let df = d as f64;
        if !(p > 1.0) {
            return Err(Error::InvalidArgument(format!("p = {p} must exceed 1")));
        }
        if d >= 3 && p > df / (df - 2.0) * (1.0 + 1e-14) {
            return Err(Error::Inadmissible(format!(
                "p = {p} exceeds p_star = {}",
                df / (df - 2.0)
            )));
        }
        let chi = (df + 2.0 - p * (df - 2.0)) / (df - p * (df - 4.0));
        let theta = df * (p - 1.0) / ((df + 2.0 - p * (df - 2.0)) * p);
        Ok((df, chi, theta))
    }

    fn from_norms(d: u32, p: f64, chi: f64, theta: f64, grad2: f64, norm_p1: f64, norm_2p: f64) -> Self {
        let df = d as f64;
        let positive = (p - 1.0).powi(2) * grad2 + 4.0 * (df - p * (df - 2.0)) / (p + 1.0) * norm_p1;
        let k_gns = positive / norm_2p.powf(chi);
        let c_gns = norm_2p.powf(1.0 / (2.0 * p)) / (grad2.powf(theta / 2.0) * norm_p1.powf((1.0 - theta) / (p + 1.0)));
        Self {
            d,
            p,
            chi,
            k_gns,
            c_gns,
            theta,
        }
    }
}

/// `(||grad f||_2^2, ||f||_{p+1}^{p+1}, ||f||_{2p}^{2p})` on the grid.
fn deficit_terms(f: &RadialField, p: f64) -> (f64, f64, f64) {
    let g = f.grid();
    let grad = edge_gradient(g, f.values());
    let grad2: f64 = g.edge_weights().iter().zip(&grad).map(|(w, d)| w * d * d).sum();
    let pow = |q: f64| -> f64 {
        f.values()
            .iter()
            .zip(g.volumes())
            .map(|(v, w)| w * v.abs().powf(q))
            .sum()
    };
    (grad2, pow(p + 1.0), pow(2.0 * p))
}

fn check_unweighted(f: &RadialField, d: u32) -> Result<()> {
    let g = f.grid();
    if (g.alpha() - 1.0).abs() > 1e-14 || (g.n_eff() - d as f64).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "the GNS deficit needs the unweighted frame (alpha = 1, n = {d}); grid has alpha = {}, n = {}",
            g.alpha(),
            g.n_eff()
        )));
    }
    Ok(())
}

/// Deficit `delta[f]` together with its positive part, for relative checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deficit {
    pub value: f64,
    pub positive_part: f64,
}

/// GNS deficit of a radial `f` on an unweighted grid.
pub fn gns_deficit(f: &RadialField, spec: &DeficitSpec) -> Result<Deficit> {
    check_unweighted(f, spec.d)?;
    let df = spec.d as f64;
    let p = spec.p;
    let (grad2, norm_p1, norm_2p) = deficit_terms(f, p);
    let positive = (p - 1.0).powi(2) * grad2 + 4.0 * (df - p * (df - 2.0)) / (p + 1.0) * norm_p1;
    Ok(Deficit {
        value: positive - spec.k_gns * norm_2p.powf(spec.chi),
        positive_part: positive,
    })
}

/// Infimum of `int |(p-1) grad f + f^p grad phi^{1-p}|^2` over the radial
/// optimizers `phi = mu g(lambda .)`.
///
/// Since `phi^{1-p} = mu^{1-p} (1 + lambda^2 r^2)`, the integrand only sees
/// `c = mu^{1-p} lambda^2 > 0` and the problem is a quadratic in `c`, which is
/// minimized exactly. Returns `(infimum, c_star)`.
pub fn stability_rhs(f: &RadialField, spec: &DeficitSpec) -> Result<(f64, f64)> {
    check_unweighted(f, spec.d)?;
    let p = spec.p;
    let g = f.grid();
    let grad = edge_gradient(g, f.values());
    let vals = f.values();
    // edge values of 2 r f^p
    let drift: Vec<f64> = (0..grad.len())
        .map(|i| 2.0 * g.edges()[i + 1] * 0.5 * (vals[i].abs().powf(p) + vals[i + 1].abs().powf(p)))
        .collect();
    let w = g.edge_weights();
    let (mut aa, mut ab, mut bb) = (0.0, 0.0, 0.0);
    for i in 0..grad.len() {
        let a = (p - 1.0) * grad[i];
        aa += w[i] * a * a;
        ab += w[i] * a * drift[i];
        bb += w[i] * drift[i] * drift[i];
    }
    if !(bb > 0.0) {
        return Ok((aa, 0.0));
    }
    let c = (-ab / bb).max(0.0);
    Ok(((aa + 2.0 * c * ab + c * c * bb).max(0.0), c))
}

/// Serializes a list of reports with `#`-comment metadata lines.
pub fn reports_to_csv(meta: &[(String, String)], rows: &[EntropyReport]) -> String {
    let mut s = String::new();
    for (k, v) in meta {
        let _ = writeln!(s, "# {k} = {v}");
    }
    let _ = writeln!(s, "{}", EntropyReport::csv_header());
    for r in rows {
        let _ = writeln!(s, "{}", r.csv_row());
    }
    s
}
