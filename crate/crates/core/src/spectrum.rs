//! Hardy-Poincare eigenproblem of the flow linearized around the stationary
//! profile, one angular mode `l` at a time:
//!
//! ```text
//! a(f, f) = int (alpha^2 f'^2 + l (l + d - 2) f^2 / s^2) B dmu
//! b(f, f) = int f^2 B^{2-m} dmu
//! ```
//!
//! Both forms are assembled as three-band matrices on the cell centers of a
//! [`RadialGrid`] with the same edge stencil as the flow. No boundary
//! condition is imposed at either end (natural conditions).

use std::fmt::Write as _;
use std::sync::Arc;

use crate::constants::{spectral_gap_closed_form, zeta_ckn, DerivedParameters};
use crate::error::{Error, Result};
use crate::profiles::{barenblatt_stationary, RadialField, RadialGrid};

/// Symmetric three-band matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples rows `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.len() {
            let e2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            q = self.diag[i] - x - if i > 0 { e2 / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// `k`-th smallest eigenvalue (0-based) by bisection to relative width
    /// `rel_tol`.
    pub fn eigenvalue(&self, k: usize, rel_tol: f64) -> Result<f64> {
        if k >= self.len() {
            return Err(Error::Eigen(format!("index {k} out of range for size {}", self.len())));
        }
        let (mut lo, mut hi) = self.gershgorin();
        let scale = hi.abs().max(lo.abs());
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= rel_tol * mid.abs().max(f64::EPSILON * scale) {
                return Ok(mid);
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Err(Error::Eigen("bisection did not converge".into()))
    }

    /// Solves `(self - shift) y = rhs` without pivoting; `None` on a zero
    /// pivot.
    fn shifted_solve(&self, shift: f64, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut y = rhs.to_vec();
        let mut piv = self.diag[0] - shift;
        if piv == 0.0 {
            return None;
        }
        y[0] /= piv;
        for i in 1..n {
            c[i - 1] = self.off[i - 1] / piv;
            piv = self.diag[i] - shift - self.off[i - 1] * c[i - 1];
            if piv == 0.0 || !piv.is_finite() {
                return None;
            }
            y[i] = (y[i] - self.off[i - 1] * y[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            y[i] -= c[i] * y[i + 1];
        }
        Some(y)
    }
}

/// Stiffness and mass forms of one angular mode; the mass form is diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeForms {
    pub l: u32,
    pub stiffness: Tridiagonal,
    pub mass: Vec<f64>,
}

/// Assembles `(a, b)` for mode `l`.
pub fn assemble_mode(l: u32, grid: &RadialGrid, dp: &DerivedParameters) -> ModeForms {
    let n = grid.len();
    let m = dp.m;
    let a2 = dp.alpha * dp.alpha;
    let b: Vec<f64> = grid.nodes().iter().map(|&s| barenblatt_stationary(s, m)).collect();
    let angular = (l as f64) * (l as f64 + dp.d as f64 - 2.0);
    let mut diag: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.volumes())
        .zip(&b)
        .map(|((s, w), bi)| w * angular * bi / (s * s))
        .collect();
    let mut off = vec![0.0; n - 1];
    for (e, (w, h)) in grid.edge_weights().iter().zip(grid.center_gaps()).enumerate() {
        let k = a2 * w * 0.5 * (b[e] + b[e + 1]) / (h * h);
        diag[e] += k;
        diag[e + 1] += k;
        off[e] = -k;
    }
    let mass = grid
        .volumes()
        .iter()
        .zip(&b)
        .map(|(w, bi)| w * bi.powf(2.0 - m))
        .collect();
    ModeForms {
        l,
        stiffness: Tridiagonal { diag, off },
        mass,
    }
}

/// Smallest admissible eigenpair of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult {
    pub l: u32,
    pub lambda: f64,
    /// Normalized to `b(f, f) = 1`.
    pub eigenfunction: RadialField,
}

const BISECTION_TOL: f64 = 1e-12;

/// Smallest eigenvalue of `a f = Lambda b f`; for `l = 0` the constants
/// (an exact null vector of `a`) are excluded, which selects the second
/// eigenvalue.
pub fn smallest_eigenvalue(l: u32, grid: &Arc<RadialGrid>, dp: &DerivedParameters) -> Result<ModeResult> {
    let forms = assemble_mode(l, grid, dp);
    let n = grid.len();
    let root: Vec<f64> = forms.mass.iter().map(|x| x.sqrt()).collect();
    if root.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::Eigen("mass form is not positive definite".into()));
    }
    let c = Tridiagonal {
        diag: (0..n).map(|i| forms.stiffness.diag[i] / forms.mass[i]).collect(),
        off: (0..n - 1)
            .map(|i| forms.stiffness.off[i] / (root[i] * root[i + 1]))
            .collect(),
    };
    let index = if l == 0 { 1 } else { 0 };
    let lambda = c.eigenvalue(index, BISECTION_TOL)?;

    // null direction of the l = 0 problem in the symmetrized coordinates
    let null: Option<Vec<f64>> = (l == 0).then(|| {
        let norm = root.iter().map(|x| x * x).sum::<f64>().sqrt();
        root.iter().map(|x| x / norm).collect()
    });
    let deflate = |y: &mut Vec<f64>| {
        if let Some(z) = &null {
            let p: f64 = y.iter().zip(z).map(|(a, b)| a * b).sum();
            for (a, b) in y.iter_mut().zip(z) {
                *a -= p * b;
            }
        }
    };
    let normalize = |y: &mut Vec<f64>| {
        let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        for a in y.iter_mut() {
            *a /= norm;
        }
    };

    let mut y: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 101) as f64 / 101.0).collect();
    deflate(&mut y);
    normalize(&mut y);
    let mut shift = lambda * (1.0 - 1e-13);
    let mut rq = f64::NAN;
    for _ in 0..20 {
        let mut next = match c.shifted_solve(shift, &y) {
            Some(v) => v,
            None => {
                shift = lambda * (1.0 - 1e-10);
                continue;
            }
        };
        deflate(&mut next);
        normalize(&mut next);
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Eigen(format!("inverse iteration broke down for l = {l}")));
        }
        let sign = if next.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
            -1.0
        } else {
            1.0
        };
        let change = next
            .iter()
            .zip(&y)
            .map(|(a, b)| (sign * a - b).abs())
            .fold(0.0, f64::max);
        y = next.into_iter().map(|a| sign * a).collect();
        rq = c.quadratic(&y);
        if change < 1e-12 {
            break;
        }
    }
    if !((rq - lambda).abs() <= 1e-9 * lambda.abs().max(f64::MIN_POSITIVE)) {
        return Err(Error::Eigen(format!(
            "inverse iteration for l = {l} did not converge (Rayleigh quotient {rq}, bisection {lambda})"
        )));
    }
    let f: Vec<f64> = y.iter().zip(&root).map(|(a, r)| a / r).collect();
    Ok(ModeResult {
        l,
        lambda,
        eigenfunction: RadialField::new(grid.clone(), f)?,
    })
}

/// Per-mode eigenvalues and the resulting gap.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralResult {
    pub modes: Vec<ModeResult>,
    pub gap: f64,
    pub gap_mode: u32,
    pub closed_form: f64,
    pub rel_dev: f64,
}

impl SpectralResult {
    pub fn mode(&self, l: u32) -> Option<&ModeResult> {
        self.modes.iter().find(|m| m.l == l)
    }

    /// `l,Lambda_l,closed_form,rel_dev` per mode.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("l,Lambda_l,closed_form,rel_dev\n");
        for m in &self.modes {
            let dev = (m.lambda - self.closed_form).abs() / self.closed_form;
            let _ = writeln!(s, "{},{},{},{}", m.l, m.lambda, self.closed_form, dev);
        }
        s
    }

    /// Eigenfunction of mode `l` as a field CSV.
    pub fn eigenfunction_csv(&self, l: u32) -> Option<String> {
        self.mode(l).map(|m| m.eigenfunction.to_csv())
    }
}

/// Solves modes `0..=l_max` (in parallel) and compares the smallest
/// eigenvalue with the closed form.
pub fn hardy_poincare_gap(dp: &DerivedParameters, grid: &Arc<RadialGrid>, l_max: u32) -> Result<SpectralResult> {
    use rayon::prelude::*;
    if l_max < 2 {
        return Err(Error::InvalidArgument(format!("l_max = {l_max} must be at least 2")));
    }
    let closed_form = spectral_gap_closed_form(dp)?;
    let modes = (0..=l_max)
        .into_par_iter()
        .map(|l| smallest_eigenvalue(l, grid, dp))
        .collect::<Result<Vec<_>>>()?;
    let best = modes
        .iter()
        .min_by(|a, b| a.lambda.total_cmp(&b.lambda))
        .expect("at least three modes");
    let gap = best.lambda;
    let gap_mode = best.l;
    Ok(SpectralResult {
        gap,
        gap_mode,
        closed_form,
        rel_dev: (gap - closed_form).abs() / closed_form,
        modes,
    })
}

/// Predicted entropy decay rates for a linearized constant `lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePrediction {
    /// `4 alpha^2`
    pub baseline: f64,
    /// `4 alpha^2 + 2 zeta`
    pub improved: f64,
    /// `2 (1 - m) Lambda = 4 alpha^2 + 4 zeta`
    pub linearized: f64,
    pub zeta: f64,
}

pub fn rate_prediction(dp: &DerivedParameters, lambda: f64) -> Result<RatePrediction> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("Lambda = {lambda} must be positive")));
    }
    let baseline = 4.0 * dp.alpha * dp.alpha;
    let zeta = zeta_ckn(dp, lambda);
    let linearized = 2.0 * (1.0 - dp.m) * lambda;
    debug_assert!((linearized - (baseline + 4.0 * zeta)).abs() <= 1e-12 * linearized.max(1.0));
    Ok(RatePrediction {
        baseline,
        improved: baseline + 2.0 * zeta,
        linearized,
        zeta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{derive, CknParameters};
    use crate::profiles::{make_grid, Spacing};

    fn setup(d: u32, beta: f64, gamma: f64, m: f64, cells: usize) -> (DerivedParameters, Arc<RadialGrid>) {
        let dp = derive(&CknParameters::new(d, beta, gamma, m)).unwrap();
        let g = Arc::new(make_grid(80.0, cells, Spacing::Geometric(1.004), &dp).unwrap());
        (dp, g)
    }

    #[test]
    fn sturm_count_on_known_matrix() {
        // second-difference matrix: eigenvalues 2 - 2 cos(k pi / (n + 1))
        let n = 50;
        let t = Tridiagonal {
            diag: vec![2.0; n],
            off: vec![-1.0; n - 1],
        };
        for k in [0, 3, 49] {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            let got = t.eigenvalue(k, 1e-14).unwrap();
            assert!((got - exact).abs() < 1e-12 * exact.max(1.0), "{k}: {got} vs {exact}");
        }
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let (dp, g) = setup(4, 0.0, 0.0, 0.8, 64);
        let f = assemble_mode(0, &g, &dp);
        assert!(f.stiffness.quadratic(&[1.0; 64]).abs() < 1e-12 * f.stiffness.diag[0]);
        assert!(f.mass.iter().all(|x| *x > 0.0));
    }

    #[test]
    fn constrained_eigenfunction_changes_sign() {
        let (dp, g) = setup(4, 0.0, 0.0, 0.8, 256);
        let r = smallest_eigenvalue(0, &g, &dp).unwrap();
        let v = r.eigenfunction.values();
        assert!(v.iter().any(|x| *x > 0.0) && v.iter().any(|x| *x < 0.0));
    }

    #[test]
    fn rate_prediction_examples() {
        let (dp, _) = setup(4, -0.5, 1.0, 0.95, 32);
        let r = rate_prediction(&dp, 3.5).unwrap();
        assert!((r.baseline - 0.25).abs() < 1e-12);
        assert!((r.improved - 0.30).abs() < 1e-12);
        assert!((r.linearized - 0.35).abs() < 1e-12);
        let (dp, _) = setup(4, 0.0, 0.0, 0.8, 32);
        let r = rate_prediction(&dp, 10.0).unwrap();
        assert!((r.baseline - 4.0).abs() < 1e-12 && (r.improved - 4.0).abs() < 1e-12);
        assert!(rate_prediction(&dp, 0.0).is_err());
    }
}
