//! Radial grids, cell-centered fields and the Barenblatt / Aubin-Talenti
//! profile family.
//!
//! Grids live in the artificial-dimension frame: radius `s = r^alpha` and
//! measure `|S^{d-1}| / alpha * s^{n-1} ds`, so that integrals of grid fields
//! equal the original weighted integrals `int f |x|^{-gamma} dx`.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::ln_gamma;

use crate::constants::DerivedParameters;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spacing {
    Uniform,
    /// Cell widths grow by a constant ratio (> 1) from the origin outwards.
    Geometric(f64),
}

impl std::fmt::Display for Spacing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Spacing::Uniform => write!(f, "uniform"),
            Spacing::Geometric(q) => write!(f, "geometric:{q}"),
        }
    }
}

impl std::str::FromStr for Spacing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "uniform" {
            return Ok(Spacing::Uniform);
        }
        if let Some(q) = s.strip_prefix("geometric:") {
            let q: f64 = q
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad geometric ratio '{q}'")))?;
            return Ok(Spacing::Geometric(q));
        }
        Err(Error::Parse(format!(
            "unknown spacing '{s}' (uniform | geometric:<ratio>)"
        )))
    }
}

/// Surface measure of the unit sphere `S^{d-1}`.
pub fn sphere_area(d: u32) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / ln_gamma(h).exp()
}

/// Cell-centered radial grid on `(0, r_max]` with the measure
/// `angular_factor / alpha * s^{n_eff - 1} ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    edges: Vec<f64>,
    volumes: Vec<f64>,
    n_eff: f64,
    angular_factor: f64,
    alpha: f64,
    spacing: Spacing,
}

impl RadialGrid {
    /// Builds a grid with an explicit measure. `alpha` only enters through
    /// the frame Jacobian `1 / alpha`.
    pub fn new(
        r_max: f64,
        cells: usize,
        spacing: Spacing,
        n_eff: f64,
        angular_factor: f64,
        alpha: f64,
    ) -> Result<Self> {
        if !(r_max > 0.0) || !r_max.is_finite() {
            return Err(Error::InvalidArgument(format!("r_max = {r_max} must be positive")));
        }
        if cells < 16 {
            return Err(Error::InvalidArgument(format!("need at least 16 cells, got {cells}")));
        }
        let edges: Vec<f64> = match spacing {
            Spacing::Uniform => (0..=cells).map(|k| r_max * k as f64 / cells as f64).collect(),
            Spacing::Geometric(q) => {
                if !(q > 1.0) {
                    return Err(Error::InvalidArgument(format!("geometric ratio {q} must exceed 1")));
                }
                let h0 = r_max * (q - 1.0) / (q.powi(cells as i32) - 1.0);
                let mut e = Vec::with_capacity(cells + 1);
                e.push(0.0);
                let mut h = h0;
                for _ in 0..cells {
                    let last = *e.last().unwrap();
                    e.push(last + h);
                    h *= q;
                }
                e[cells] = r_max;
                e
            }
        };
        Self::from_edges(edges, spacing, n_eff, angular_factor, alpha)
    }

    fn from_edges(edges: Vec<f64>, spacing: Spacing, n_eff: f64, angular_factor: f64, alpha: f64) -> Result<Self> {
        if !(n_eff > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "effective dimension {n_eff} must be positive"
            )));
        }
        if !(alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha = {alpha} must be positive")));
        }
        let factor = angular_factor / alpha;
        let nodes: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let volumes = edges
            .windows(2)
            .map(|w| factor * shell_measure(w[0], w[1], n_eff))
            .collect();
        Ok(Self {
            nodes,
            edges,
            volumes,
            n_eff,
            angular_factor,
            alpha,
            spacing,
        })
    }

    /// Same grid with every radius multiplied by `factor`.
    pub fn dilated(&self, factor: f64) -> Result<Self> {
        let edges = self.edges.iter().map(|e| e * factor).collect();
        Self::from_edges(edges, self.spacing, self.n_eff, self.angular_factor, self.alpha)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Exact measure of each cell.
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn n_eff(&self) -> f64 {
        self.n_eff
    }

    pub fn angular_factor(&self) -> f64 {
        self.angular_factor
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn r_max(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    /// Constant in front of `s^{n-1} ds`.
    pub fn measure_factor(&self) -> f64 {
        self.angular_factor / self.alpha
    }

    /// Quadrature weights for differences across interior edges
    /// `i + 1/2`, `i = 0..N-2`: `factor * r_e^{n-1} * (r_{i+1} - r_i)`.
    pub fn edge_weights(&self) -> Vec<f64> {
        let f = self.measure_factor();
        (0..self.len() - 1)
            .map(|i| {
                let re = self.edges[i + 1];
                f * re.powf(self.n_eff - 1.0) * (self.nodes[i + 1] - self.nodes[i])
            })
            .collect()
    }

    /// Distances between neighbouring cell centers.
    pub fn center_gaps(&self) -> Vec<f64> {
        self.nodes.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Midpoint-rule integral of cell values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.volumes).map(|(v, w)| v * w).sum()
    }

    /// Original-frame radius `s^{1/alpha}` of each cell center.
    pub fn original_radii(&self) -> Vec<f64> {
        self.nodes.iter().map(|s| s.powf(1.0 / self.alpha)).collect()
    }
}

/// `int_a^b s^{n-1} ds` evaluated without cancellation for thin shells.
fn shell_measure(a: f64, b: f64, n: f64) -> f64 {
    if a == 0.0 {
        b.powf(n) / n
    } else {
        a.powf(n) * (n * (b / a).ln()).exp_m1() / n
    }
}

/// Builds the flow/spectral grid for the derived parameters.
pub fn make_grid(r_max: f64, cells: usize, spacing: Spacing, dp: &DerivedParameters) -> Result<RadialGrid> {
    RadialGrid::new(r_max, cells, spacing, dp.n, sphere_area(dp.d), dp.alpha)
}

/// Cell-centered values on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value at r = {}",
                grid.nodes()[i]
            )));
        }
        Ok(Self { grid, values })
    }

    /// Like [`RadialField::new`] but also rejects negative values.
    pub fn density(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        let f = Self::new(grid, values)?;
        f.check_nonnegative()?;
        Ok(f)
    }

    pub fn from_fn<F: Fn(f64) -> f64>(grid: Arc<RadialGrid>, f: F) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn check_nonnegative(&self) -> Result<()> {
        match self.values.iter().position(|&v| v < 0.0) {
            Some(i) => Err(Error::NegativeDensity {
                radius: self.grid.nodes()[i],
                value: self.values[i],
            }),
            None => Ok(()),
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Weighted integral `int f dmu` over the grid.
    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn mass(&self) -> f64 {
        self.integral()
    }

    pub fn map<F: Fn(f64, f64) -> f64>(&self, f: F) -> Result<Self> {
        let values = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&r, &v)| f(r, v))
            .collect();
        Self::new(self.grid.clone(), values)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn same_grid(&self, other: &RadialField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields live on different grids".into()))
        }
    }

    /// Two-column CSV `(r, value)` preceded by `#`-comment grid metadata.
    pub fn to_csv(&self) -> String {
        let g = &*self.grid;
        let mut s = String::new();
        let _ = writeln!(s, "# radial field");
        let _ = writeln!(s, "# spacing = {}", g.spacing);
        let _ = writeln!(s, "# r_max = {}", g.r_max());
        let _ = writeln!(s, "# cells = {}", g.len());
        let _ = writeln!(s, "# n_eff = {}", g.n_eff);
        let _ = writeln!(s, "# angular_factor = {}", g.angular_factor);
        let _ = writeln!(s, "# alpha = {}", g.alpha);
        let _ = writeln!(s, "r,value");
        for (r, v) in g.nodes.iter().zip(&self.values) {
            let _ = writeln!(s, "{r},{v}");
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut rows = Vec::new();
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
            if line.starts_with("r,") {
                continue;
            }
            let (r, v) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("expected 'r,value', got '{line}'")))?;
            let r: f64 = r
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad radius '{r}'")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("bad value '{v}'")))?;
            rows.push((r, v));
        }
        let get = |k: &str| -> Result<f64> {
            meta.get(k)
                .ok_or_else(|| Error::Parse(format!("missing header field '{k}'")))?
                .parse()
                .map_err(|_| Error::Parse(format!("bad header field '{k}'")))
        };
        let spacing: Spacing = meta
            .get("spacing")
            .ok_or_else(|| Error::Parse("missing header field 'spacing'".into()))?
            .parse()?;
        let cells = get("cells")? as usize;
        let grid = RadialGrid::new(
            get("r_max")?,
            cells,
            spacing,
            get("n_eff")?,
            get("angular_factor")?,
            get("alpha")?,
        )?;
        if rows.len() != cells {
            return Err(Error::Parse(format!(
                "header announces {cells} cells, found {}",
                rows.len()
            )));
        }
        for ((r, _), node) in rows.iter().zip(grid.nodes()) {
            if (r - node).abs() > 1e-12 * node.abs().max(1.0) {
                return Err(Error::Parse(format!("radius {r} does not match grid node {node}")));
            }
        }
        Self::new(Arc::new(grid), rows.into_iter().map(|(_, v)| v).collect())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Generalized Aubin-Talenti function `(1 + r^sigma)^{-1/(p-1)}`.
pub fn aubin_talenti(r: f64, sigma: f64, p: f64) -> f64 {
    (1.0 + r.powf(sigma)).powf(-1.0 / (p - 1.0))
}

/// Stationary profile `(1 + r^2)^{1/(m-1)}` of the self-similar flow.
pub fn barenblatt_stationary(r: f64, m: f64) -> f64 {
    (1.0 + r * r).powf(1.0 / (m - 1.0))
}

/// Pressure `B^{m-1} = 1 + r^2` of the stationary profile.
pub fn barenblatt_pressure(r: f64) -> f64 {
    1.0 + r * r
}

/// Weighted mass `int g^{2p} |x|^{-gamma} dx` in closed form:
/// `|S^{d-1}| / sigma * Beta((d - gamma) / sigma, delta - (d - gamma) / sigma)`.
pub fn mass_closed_form(dp: &DerivedParameters) -> Result<f64> {
    let a = (dp.d as f64 - dp.gamma) / dp.sigma;
    let b = dp.delta - a;
    if !(b > 0.0) || !(a > 0.0) {
        return Err(Error::Inadmissible(format!(
            "profile is not integrable: delta = {} <= n / 2 = {}",
            dp.delta,
            dp.n / 2.0
        )));
    }
    Ok(sphere_area(dp.d) / dp.sigma * ln_beta(a, b).exp())
}

/// `factor * int_R^inf (1 + s^2)^{-a} s^{n-1} ds` through the regularized
/// incomplete Beta function. Requires `a > n / 2`.
pub fn power_tail(factor: f64, n: f64, a: f64, r: f64) -> Result<f64> {
    let b = a - n / 2.0;
    if !(b > 0.0) {
        return Err(Error::Inadmissible(format!(
            "tail of (1+s^2)^(-{a}) s^({n}-1) diverges"
        )));
    }
    let x = 1.0 / (1.0 + r * r);
    let full = 0.5 * ln_beta(n / 2.0, b).exp();
    Ok(factor * full * beta_reg(b, n / 2.0, x))
}

/// Tail integral `int_{s > r_max} B^power dmu` of the stationary profile on
/// `grid`'s measure.
pub fn barenblatt_tail(grid: &RadialGrid, m: f64, power: f64) -> Result<f64> {
    power_tail(grid.measure_factor(), grid.n_eff(), power / (1.0 - m), grid.r_max())
}

/// Self-similar scale `R(t) = (1 + alpha^2 xi_n t)^{1/xi_n}` with
/// `R(0) = 1` and `R' = alpha^2 R^{n(1-m)-1}`.
pub fn self_similar_r(t: f64, dp: &DerivedParameters) -> Result<f64> {
    if !(dp.xi_n > 0.0) {
        return Err(Error::Inadmissible(format!(
            "xi = n (m - m_c) = {} must be positive",
            dp.xi_n
        )));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be nonnegative")));
    }
    Ok((1.0 + dp.alpha * dp.alpha * dp.xi_n * t).powf(1.0 / dp.xi_n))
}

/// Original-frame self-similar solution of mass `M`, evaluated at the
/// original radius `r`:
/// `(M/Mc)^{sigma/xi} B(t, (M/Mc)^{(1-m)/xi} r)` with
/// `B(t, r) = Ro^{-(d-gamma)} g^{2p}(r / Ro)`, `Ro = R(t)^{1/alpha}`.
pub fn barenblatt_evolving(t: f64, r: f64, mass: f64, dp: &DerivedParameters) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
    }
    if !(mass > 0.0) {
        return Err(Error::InvalidArgument(format!("mass = {mass} must be positive")));
    }
    let mc = mass_closed_form(dp)?;
    let ratio = mass / mc;
    let ro = self_similar_r(t, dp)?.powf(1.0 / dp.alpha);
    let x = ratio.powf((1.0 - dp.m) / dp.xi) * r;
    let g2p = (1.0 + (x / ro).powf(dp.sigma)).powf(-dp.delta);
    Ok(ratio.powf(dp.sigma / dp.xi) * ro.powf(-(dp.d as f64 - dp.gamma)) * g2p)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfileFamily {
    /// `g(r) = (1 + r^sigma)^{-1/(p-1)}` at the original radius `s^{1/alpha}`.
    AubinTalenti {
        sigma: f64,
        p: f64,
    },
    BarenblattStationary {
        m: f64,
    },
    BarenblattEvolving {
        t: f64,
        mass: f64,
        dp: DerivedParameters,
    },
    /// Mass-preserving dilation `lambda^n B(lambda s)`.
    ScaledBarenblatt {
        lambda: f64,
        m: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSpec {
    pub family: ProfileFamily,
    /// Target weighted mass after projection; `None` keeps the natural one.
    pub normalization: Option<f64>,
}

impl ProfileSpec {
    pub fn natural(family: ProfileFamily) -> Self {
        Self {
            family,
            normalization: None,
        }
    }

    pub fn with_mass(family: ProfileFamily, mass: f64) -> Self {
        Self {
            family,
            normalization: Some(mass),
        }
    }
}

/// Cell-centered evaluation of a profile on `grid`.
pub fn project(spec: &ProfileSpec, grid: &Arc<RadialGrid>) -> Result<RadialField> {
    let inv_alpha = 1.0 / grid.alpha();
    let n = grid.n_eff();
    let field = match spec.family {
        ProfileFamily::AubinTalenti { sigma, p } => {
            RadialField::from_fn(grid.clone(), |s| aubin_talenti(s.powf(inv_alpha), sigma, p))?
        }
        ProfileFamily::BarenblattStationary { m } => {
            RadialField::from_fn(grid.clone(), |s| barenblatt_stationary(s, m))?
        }
        ProfileFamily::BarenblattEvolving { t, mass, dp } => {
            let values = grid
                .nodes()
                .iter()
                .map(|&s| barenblatt_evolving(t, s.powf(inv_alpha), mass, &dp))
                .collect::<Result<Vec<_>>>()?;
            RadialField::new(grid.clone(), values)?
        }
        ProfileFamily::ScaledBarenblatt { lambda, m } => {
            RadialField::from_fn(grid.clone(), |s| lambda.powf(n) * barenblatt_stationary(lambda * s, m))?
        }
    };
    match spec.normalization {
        None => Ok(field),
        Some(target) => {
            let mass = field.mass();
            if !(mass > 0.0) {
                return Err(Error::InvalidArgument("cannot renormalize a field of zero mass".into()));
            }
            Ok(field.scaled(target / mass))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{derive, CknParameters};

    fn gns_grid(r_max: f64, cells: usize, spacing: Spacing, d: u32, m: f64) -> Arc<RadialGrid> {
        let dp = derive(&CknParameters::gns(d, m)).unwrap();
        Arc::new(make_grid(r_max, cells, spacing, &dp).unwrap())
    }

    #[test]
    fn aubin_talenti_values() {
        assert_eq!(aubin_talenti(0.0, 0.7, 1.4), 1.0);
        assert!((aubin_talenti(1.0, 2.0, 2.0) - 0.5).abs() < 1e-15);
        let p = 1.0 / (2.0 * 0.95 - 1.0);
        let want = (1.0 + 2f64.sqrt()).powf(-1.0 / (p - 1.0));
        assert!((aubin_talenti(2.0, 0.5, p) - want).abs() < 1e-15);
    }

    #[test]
    fn barenblatt_values() {
        assert_eq!(barenblatt_stationary(0.0, 0.8), 1.0);
        assert!((barenblatt_stationary(1.0, 0.8) - 0.03125).abs() < 1e-15);
        assert!((barenblatt_stationary(3.0, 0.75) - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn barenblatt_is_power_of_aubin_talenti() {
        for &m in &[0.6, 0.75, 0.8, 0.95] {
            let p = 1.0 / (2.0 * m - 1.0);
            for k in 0..50 {
                let r = 0.2 * k as f64;
                let a = aubin_talenti(r, 2.0, p).powf(2.0 * p);
                let b = barenblatt_stationary(r, m);
                assert!((a - b).abs() <= 1e-14 * b.max(1e-300) * 10.0, "m={m} r={r}");
            }
        }
    }

    #[test]
    fn mass_closed_form_examples() {
        let dp = derive(&CknParameters::gns(4, 0.75)).unwrap();
        assert!((mass_closed_form(&dp).unwrap() - PI * PI / 6.0).abs() < 1e-13);
        let dp = derive(&CknParameters::gns(2, 0.9)).unwrap();
        assert!((mass_closed_form(&dp).unwrap() - PI / 9.0).abs() < 1e-13);
    }

    #[test]
    fn mass_rejects_nonintegrable() {
        // delta = 2 <= n / 2 = 2.5
        let dp = derive(&CknParameters::gns(5, 0.5)).unwrap();
        assert!(mass_closed_form(&dp).is_err());
    }

    #[test]
    fn uniform_edges_and_volume_sum() {
        let g = gns_grid(20.0, 512, Spacing::Uniform, 4, 0.8);
        for (k, e) in g.edges().iter().enumerate() {
            assert!((e - k as f64 * 20.0 / 512.0).abs() < 1e-13);
        }
        let total: f64 = g.volumes().iter().sum();
        let want = g.measure_factor() * 20f64.powi(4) / 4.0;
        assert!((total - want).abs() < 1e-12 * want);
        assert!(g.volumes().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn geometric_refines_origin() {
        let g = gns_grid(20.0, 256, Spacing::Geometric(1.02), 4, 0.8);
        let w: Vec<f64> = g.edges().windows(2).map(|w| w[1] - w[0]).collect();
        assert!(w.windows(2).all(|p| p[1] > p[0]));
        assert!((g.r_max() - 20.0).abs() < 1e-12);
        assert!(RadialGrid::new(20.0, 256, Spacing::Geometric(1.0), 4.0, 1.0, 1.0).is_err());
        assert!(RadialGrid::new(20.0, 8, Spacing::Uniform, 4.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn edges_interleave_nodes() {
        let g = gns_grid(5.0, 64, Spacing::Geometric(1.05), 3, 0.8);
        for i in 0..g.len() {
            assert!(g.edges()[i] < g.nodes()[i] && g.nodes()[i] < g.edges()[i + 1]);
        }
    }

    #[test]
    fn monomial_quadrature_converges_second_order() {
        // int_0^1 r^k r^{n-1} dr with n = 3; midpoint error O(N^-2).
        for k in 1..=2 {
            let exact = 1.0 / (k as f64 + 3.0);
            let err = |cells: usize| {
                let g = RadialGrid::new(1.0, cells, Spacing::Uniform, 3.0, 1.0, 1.0).unwrap();
                let vals: Vec<f64> = g.nodes().iter().map(|r| r.powi(k)).collect();
                (g.integrate(&vals) - exact).abs()
            };
            let ratio = err(256) / err(512);
            assert!(ratio > 3.5 && ratio < 4.5, "k={k} ratio={ratio}");
        }
        let g = RadialGrid::new(1.0, 100, Spacing::Uniform, 3.0, 1.0, 1.0).unwrap();
        let ones = vec![1.0; 100];
        assert!((g.integrate(&ones) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn projected_mass_and_renormalization() {
        let dp = derive(&CknParameters::gns(4, 0.75)).unwrap();
        let g = Arc::new(make_grid(400.0, 4096, Spacing::Geometric(1.003), &dp).unwrap());
        let b = project(
            &ProfileSpec::natural(ProfileFamily::BarenblattStationary { m: 0.75 }),
            &g,
        )
        .unwrap();
        let mc = mass_closed_form(&dp).unwrap();
        let tail = barenblatt_tail(&g, 0.75, 1.0).unwrap();
        assert!(((b.mass() + tail) - mc).abs() < 1e-5 * mc);
        let nb = project(
            &ProfileSpec::with_mass(ProfileFamily::BarenblattStationary { m: 0.75 }, 2.5),
            &g,
        )
        .unwrap();
        assert!((nb.mass() - 2.5).abs() < 1e-12 * 2.5);
        let s1 = project(
            &ProfileSpec::natural(ProfileFamily::ScaledBarenblatt { lambda: 1.0, m: 0.75 }),
            &g,
        )
        .unwrap();
        assert_eq!(s1.values(), b.values());
    }

    #[test]
    fn self_similar_scale() {
        let dp = derive(&CknParameters::gns(4, 0.75)).unwrap();
        assert_eq!(self_similar_r(0.0, &dp).unwrap(), 1.0);
        assert!((self_similar_r(3.0, &dp).unwrap() - 4.0).abs() < 1e-14);
        let dp = derive(&CknParameters::new(4, -0.5, 1.0, 0.95)).unwrap();
        let want = (1.0f64 + 0.0625 * 1.4 * 10.0).powf(1.0 / 1.4);
        assert!((self_similar_r(10.0, &dp).unwrap() - want).abs() < 1e-13);
        // R' = alpha^2 R^{n(1-m)-1} by central differences
        for &t in &[0.0f64, 0.5, 3.0, 20.0] {
            let h = 1e-5f64;
            let lo = self_similar_r((t - h).max(0.0), &dp).unwrap();
            let hi = self_similar_r(t + h, &dp).unwrap();
            let fd = (hi - lo) / (t + h - (t - h).max(0.0));
            let r = self_similar_r(t, &dp).unwrap();
            let want = dp.alpha * dp.alpha * r.powf(dp.n * (1.0 - dp.m) - 1.0);
            let tol = if t == 0.0 { 1e-5 } else { 1e-8 };
            assert!((fd - want).abs() <= tol * want, "t={t} fd={fd} want={want}");
        }
    }

    #[test]
    fn evolving_barenblatt_at_origin() {
        let dp = derive(&CknParameters::gns(4, 0.75)).unwrap();
        let mc = mass_closed_form(&dp).unwrap();
        let v = barenblatt_evolving(1.0, 0.0, mc, &dp).unwrap();
        let r1 = self_similar_r(1.0, &dp).unwrap();
        assert!((v - r1.powi(-4)).abs() < 1e-14);
        assert!(barenblatt_evolving(0.0, 0.0, mc, &dp).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = gns_grid(10.0, 32, Spacing::Geometric(1.07), 4, 0.8);
        let f = project(
            &ProfileSpec::natural(ProfileFamily::BarenblattStationary { m: 0.8 }),
            &g,
        )
        .unwrap();
        let back = RadialField::from_csv(&f.to_csv()).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.grid().nodes(), f.grid().nodes());
    }
}
