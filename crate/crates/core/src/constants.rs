//! Closed-form parameter algebra for the weighted interpolation family.
//!
//! Everything here is a pure function of the exponents `(d, beta, gamma, m)`.
//! The artificial dimension `n = 2 (d - gamma) / (2 + beta - gamma)` and the
//! radial stretch `alpha = 1 + (beta - gamma) / 2` turn the two-weight problem
//! into a one-weight radial problem, which is the frame used by the rest of
//! the crate.

use crate::error::{Error, Result};

/// Half-width of the band around the symmetry-breaking curve that is reported
/// as [`RegionLabel::FSBoundary`].
pub const FS_TOLERANCE: f64 = 1e-9;

/// Exponents of the weighted problem. The diffusion exponent `m` is the
/// canonical coordinate; `p = 1 / (2m - 1)` is derived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CknParameters {
    pub d: u32,
    pub beta: f64,
    pub gamma: f64,
    pub m: f64,
}

impl CknParameters {
    pub fn new(d: u32, beta: f64, gamma: f64, m: f64) -> Self {
        Self { d, beta, gamma, m }
    }

    /// Builds the parameters from the interpolation exponent `p`, using
    /// `m = (p + 1) / (2p)`.
    pub fn from_p(d: u32, beta: f64, gamma: f64, p: f64) -> Self {
        Self::new(d, beta, gamma, (p + 1.0) / (2.0 * p))
    }

    /// Unweighted case `beta = gamma = 0`.
    pub fn gns(d: u32, m: f64) -> Self {
        Self::new(d, 0.0, 0.0, m)
    }

    pub fn p(&self) -> f64 {
        1.0 / (2.0 * self.m - 1.0)
    }

    pub fn is_unweighted(&self) -> bool {
        self.beta == 0.0 && self.gamma == 0.0
    }

    /// Strict admissibility of `(beta, gamma, p)`: `gamma < d`,
    /// `gamma - 2 < beta < (d - 2) gamma / d` and `1 < p <= p_star`.
    pub fn check_admissible(&self) -> Result<()> {
        admissibility(self.beta, self.gamma, self.d, self.p(), 0.0)
    }

    /// Checks that `m` lies in `[m1, 1)` so that flows and spectral problems
    /// are well posed.
    pub fn check_flow_range(&self) -> Result<()> {
        let dp = derive(self)?;
        if !(self.m < 1.0) || self.m < dp.m1 - 1e-14 {
            return Err(Error::Inadmissible(format!(
                "m = {} outside [m1, 1) with m1 = {}",
                self.m, dp.m1
            )));
        }
        Ok(())
    }
}

/// Exponents and scales derived from [`CknParameters`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParameters {
    pub d: u32,
    pub beta: f64,
    pub gamma: f64,
    pub m: f64,
    pub p: f64,
    /// `2 + beta - gamma`
    pub sigma: f64,
    /// `1 + (beta - gamma) / 2`
    pub alpha: f64,
    /// artificial dimension `2 (d - gamma) / (2 + beta - gamma)`
    pub n: f64,
    /// `d - n`
    pub nu: f64,
    pub p_star: f64,
    pub theta: f64,
    /// generalized critical exponent `1 - sigma / (2 (d - gamma))`
    pub m1: f64,
    /// `(n - 2) / n`
    pub m_c: f64,
    /// `1 / (1 - m)`
    pub delta: f64,
    /// `sigma - (d - gamma)(1 - m)`, the original-frame self-similar exponent
    pub xi: f64,
    /// `n (m - m_c)`, the self-similar exponent in the artificial frame
    pub xi_n: f64,
    /// scale with `lambda^{n (m - m_c)} = (1 - m) / (2 m)`
    pub lambda_scale: f64,
}

impl DerivedParameters {
    pub fn params(&self) -> CknParameters {
        CknParameters::new(self.d, self.beta, self.gamma, self.m)
    }
}

/// Evaluates every derived exponent.
pub fn derive(params: &CknParameters) -> Result<DerivedParameters> {
    let CknParameters { d, beta, gamma, m } = *params;
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if d == 1 && !params.is_unweighted() {
        return Err(Error::InvalidArgument(
            "d = 1 is only supported for beta = gamma = 0".into(),
        ));
    }
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::InvalidArgument(format!("m = {m} must lie in (0, 1)")));
    }
    let df = d as f64;
    let sigma = 2.0 + beta - gamma;
    if sigma <= 0.0 {
        return Err(Error::Inadmissible(format!(
            "sigma = 2 + beta - gamma = {sigma} must be positive"
        )));
    }
    if df - gamma <= 0.0 {
        return Err(Error::Inadmissible(format!("gamma = {gamma} must be below d")));
    }
    let p = 1.0 / (2.0 * m - 1.0);
    let alpha = sigma / 2.0;
    let n = 2.0 * (df - gamma) / sigma;
    // p_star is infinite when d - beta - 2 <= 0 and d <= 2 (the GNS range
    // p in (1, inf)); otherwise its denominator must be positive.
    let p_star = if df - beta - 2.0 > 0.0 {
        (df - gamma) / (df - beta - 2.0)
    } else if d <= 2 && params.is_unweighted() {
        f64::INFINITY
    } else {
        return Err(Error::Inadmissible(format!(
            "d - beta - 2 = {} must be positive for p_star",
            df - beta - 2.0
        )));
    };
    let theta = (df - gamma) * (p - 1.0) / (p * (df + beta + 2.0 - 2.0 * gamma - p * (df - beta - 2.0)));
    let m1 = 1.0 - sigma / (2.0 * (df - gamma));
    let m_c = (n - 2.0) / n;
    let delta = 1.0 / (1.0 - m);
    let xi = sigma - (df - gamma) * (1.0 - m);
    let xi_n = n * (m - m_c);
    let lambda_scale = if xi_n != 0.0 {
        ((1.0 - m) / (2.0 * m)).powf(1.0 / xi_n)
    } else {
        f64::NAN
    };
    Ok(DerivedParameters {
        d,
        beta,
        gamma,
        m,
        p,
        sigma,
        alpha,
        n,
        nu: df - n,
        p_star,
        theta,
        m1,
        m_c,
        delta,
        xi,
        xi_n,
        lambda_scale,
    })
}

/// Symmetry-breaking curve `beta_FS(gamma) = d - 2 - sqrt((gamma - d)^2 - 4 (d - 1))`; `None`
/// where the discriminant is negative.
pub fn beta_fs(gamma: f64, d: u32) -> Option<f64> {
    let df = d as f64;
    let disc = (gamma - df).powi(2) - 4.0 * (df - 1.0);
    if disc < 0.0 {
        None
    } else {
        Some(df - 2.0 - disc.sqrt())
    }
}

/// Angular-versus-radial balance `eta`; `eta > 1` is the strict symmetry
/// condition.
pub fn eta(beta: f64, gamma: f64, d: u32) -> Result<f64> {
    let sigma = 2.0 + beta - gamma;
    if sigma <= 0.0 {
        return Err(Error::Inadmissible(format!("sigma = {sigma} must be positive")));
    }
    let df = d as f64;
    let k = (df - 2.0 - beta) / 2.0;
    Ok((2.0 / sigma) * (df - 1.0 + k * k).sqrt() - 2.0 * k / sigma)
}

/// `eta` written in the artificial-dimension variables.
pub fn eta_from_alpha(alpha: f64, n: f64, d: u32) -> f64 {
    let h = (n - 2.0) / 2.0;
    (((d as f64) - 1.0) / (alpha * alpha) + h * h).sqrt() - h
}

/// Classification of a point of the `(beta, gamma)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionLabel {
    Inadmissible,
    Symmetry,
    SymmetryBreaking,
    FSBoundary,
}

impl RegionLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionLabel::Inadmissible => "inadmissible",
            RegionLabel::Symmetry => "symmetry",
            RegionLabel::SymmetryBreaking => "symmetry_breaking",
            RegionLabel::FSBoundary => "fs_boundary",
        }
    }
}

impl std::fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Strict inequalities are tested with a `1e-12` guard so that rounding on
/// the boundary lines cannot flip a point into the admissible set.
fn admissibility(beta: f64, gamma: f64, d: u32, p: f64, slack: f64) -> Result<()> {
    let df = d as f64;
    let strict = slack - 1e-12 * (1.0 + beta.abs().max(gamma.abs()));
    if !(gamma < df + strict) {
        return Err(Error::Inadmissible(format!("gamma = {gamma} >= d = {d}")));
    }
    if !(gamma - 2.0 < beta + strict) {
        return Err(Error::Inadmissible(format!("beta = {beta} <= gamma - 2")));
    }
    if !(beta < (df - 2.0) * gamma / df + strict) {
        return Err(Error::Inadmissible(format!(
            "beta = {beta} >= (d - 2) gamma / d = {}",
            (df - 2.0) * gamma / df
        )));
    }
    if !(p > 1.0) {
        return Err(Error::Inadmissible(format!("p = {p} must exceed 1")));
    }
    if df - beta - 2.0 > 0.0 {
        let p_star = (df - gamma) / (df - beta - 2.0);
        if p > p_star * (1.0 + 1e-14) + slack {
            return Err(Error::Inadmissible(format!("p = {p} > p_star = {p_star}")));
        }
    } else if d > 2 {
        return Err(Error::Inadmissible("d - beta - 2 <= 0".into()));
    }
    Ok(())
}

/// Symmetry / symmetry-breaking classification with the default band
/// [`FS_TOLERANCE`].
pub fn classify(beta: f64, gamma: f64, d: u32, p: f64) -> RegionLabel {
    classify_with_tolerance(beta, gamma, d, p, FS_TOLERANCE)
}

pub fn classify_with_tolerance(beta: f64, gamma: f64, d: u32, p: f64, tol: f64) -> RegionLabel {
    if d < 2 {
        return RegionLabel::Inadmissible;
    }
    if let Some(bfs) = beta_fs(gamma, d) {
        if (beta - bfs).abs() <= tol && admissibility(beta, gamma, d, p, tol).is_ok() {
            return RegionLabel::FSBoundary;
        }
    }
    if admissibility(beta, gamma, d, p, 0.0).is_err() {
        return RegionLabel::Inadmissible;
    }
    if gamma < 0.0 {
        if let Some(bfs) = beta_fs(gamma, d) {
            if beta > bfs {
                return RegionLabel::SymmetryBreaking;
            }
        }
    }
    match eta(beta, gamma, d) {
        Ok(e) if e >= 1.0 => RegionLabel::Symmetry,
        Ok(_) => RegionLabel::SymmetryBreaking,
        Err(_) => RegionLabel::Inadmissible,
    }
}

/// Classification in the critical case `p = p_star(beta, gamma)`, evaluated
/// pointwise. At `d = 4` this is the picture usually drawn for `p = 2`: a
/// fixed `p = d / (d - 2)` is only admissible on the line
/// `beta = (d - 2) gamma / d`, which the strict inequality excludes.
pub fn classify_critical(beta: f64, gamma: f64, d: u32) -> RegionLabel {
    let denom = d as f64 - beta - 2.0;
    if d < 3 || !(denom > 0.0) {
        return RegionLabel::Inadmissible;
    }
    classify(beta, gamma, d, (d as f64 - gamma) / denom)
}

/// Inclusive range `lo..=hi` sampled at `steps` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRange {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl ScanRange {
    pub fn new(lo: f64, hi: f64, steps: usize) -> Self {
        Self { lo, hi, steps }
    }

    pub fn value(&self, k: usize) -> f64 {
        self.lo + (self.hi - self.lo) * k as f64 / (self.steps - 1) as f64
    }

    fn validate(&self, what: &str) -> Result<()> {
        if self.steps < 2 {
            return Err(Error::InvalidArgument(format!("{what}: need at least 2 steps")));
        }
        if !(self.hi > self.lo) {
            return Err(Error::InvalidArgument(format!(
                "{what}: empty range {}:{}",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// One classified grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCell {
    pub beta: f64,
    pub gamma: f64,
    pub label: RegionLabel,
}

/// Row-major (beta outer, gamma inner) classification grid.
pub fn region_scan(d: u32, p: f64, beta: ScanRange, gamma: ScanRange) -> Result<Vec<RegionCell>> {
    beta.validate("beta")?;
    gamma.validate("gamma")?;
    let mut out = Vec::with_capacity(beta.steps * gamma.steps);
    for i in 0..beta.steps {
        let b = beta.value(i);
        for j in 0..gamma.steps {
            let g = gamma.value(j);
            out.push(RegionCell {
                beta: b,
                gamma: g,
                label: classify(b, g, d, p),
            });
        }
    }
    Ok(out)
}

/// [`region_scan`] in the critical case, see [`classify_critical`].
pub fn region_scan_critical(d: u32, beta: ScanRange, gamma: ScanRange) -> Result<Vec<RegionCell>> {
    beta.validate("beta")?;
    gamma.validate("gamma")?;
    let mut out = Vec::with_capacity(beta.steps * gamma.steps);
    for i in 0..beta.steps {
        let b = beta.value(i);
        for j in 0..gamma.steps {
            let g = gamma.value(j);
            out.push(RegionCell {
                beta: b,
                gamma: g,
                label: classify_critical(b, g, d),
            });
        }
    }
    Ok(out)
}

/// Optimal Hardy-Poincare constant of the linearized problem around the
/// stationary profile (radial branch `2 alpha^2 (2 delta - n)` or angular
/// branch `2 alpha^2 delta eta`).
pub fn spectral_gap_closed_form(dp: &DerivedParameters) -> Result<f64> {
    if dp.d < 2 {
        return Err(Error::InvalidArgument("spectral gap requires d >= 2".into()));
    }
    if dp.delta < dp.n * (1.0 - 1e-12) {
        return Err(Error::Inadmissible(format!(
            "delta = {} < n = {}: outside the Hardy-Poincare range",
            dp.delta, dp.n
        )));
    }
    let a2 = dp.alpha * dp.alpha;
    let threshold = gap_threshold(dp);
    if a2 <= threshold * (1.0 + 1e-12) {
        Ok(2.0 * a2 * (2.0 * dp.delta - dp.n))
    } else {
        let e = eta_from_alpha(dp.alpha, dp.n, dp.d);
        Ok(2.0 * a2 * dp.delta * e)
    }
}

/// Value of `alpha^2` separating the radial and angular branches.
pub fn gap_threshold(dp: &DerivedParameters) -> f64 {
    let d = dp.d as f64;
    (d - 1.0) * dp.delta * dp.delta / (dp.n * (2.0 * dp.delta - dp.n) * (dp.delta - 1.0))
}

/// Improvement `(2 (1 - m) Lambda - 4 alpha^2) / 4` of the entropy
/// production constant.
pub fn zeta_ckn(dp: &DerivedParameters, lambda: f64) -> f64 {
    (2.0 * (1.0 - dp.m) * lambda - 4.0 * dp.alpha * dp.alpha) / 4.0
}

/// Unweighted improvement `2 d (m - m1)` with `m1 = 1 - 1/d`.
pub fn zeta_gns(d: u32, m: f64) -> Result<f64> {
    let df = d as f64;
    let m1 = 1.0 - 1.0 / df;
    if !(m > m1) || !(m < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "m = {m} must lie in (m1, 1) = ({m1}, 1)"
        )));
    }
    Ok(2.0 * df * (m - m1))
}

/// Improvement transferred back to the initial time layer `[0, t_star]`.
pub fn mu_initial_layer(zeta: f64, t_star: f64) -> Result<f64> {
    if !(zeta > 0.0) {
        return Err(Error::InvalidArgument(format!("zeta = {zeta} must be positive")));
    }
    if !(t_star >= 0.0) {
        return Err(Error::InvalidArgument(format!("t_star = {t_star} must be nonnegative")));
    }
    let e = (-4.0 * t_star).exp();
    Ok(4.0 * zeta * e / (4.0 + zeta - zeta * e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn derive_gns_critical() {
        let dp = derive(&CknParameters::gns(4, 0.75)).unwrap();
        assert_eq!(dp.alpha, 1.0);
        assert_eq!(dp.n, 4.0);
        assert_eq!(dp.sigma, 2.0);
        assert!(close(dp.p_star, 2.0, 1e-15));
        assert!(close(dp.m1, 0.75, 1e-15));
        assert!(close(dp.xi, 1.0, 1e-15));
    }

    #[test]
    fn derive_weighted_reference() {
        let dp = derive(&CknParameters::new(4, -0.5, 1.0, 0.95)).unwrap();
        assert!(close(dp.sigma, 0.5, 1e-15));
        assert!(close(dp.alpha, 0.25, 1e-15));
        assert!(close(dp.n, 12.0, 1e-15));
        assert!(close(dp.nu, -8.0, 1e-15));
        assert!(close(dp.delta, 20.0, 1e-12));
        assert!(close(dp.m1, 11.0 / 12.0, 1e-15));
        assert!(close(dp.xi, 0.35, 1e-12));
        assert!(close(dp.m_c, 5.0 / 6.0, 1e-15));
        assert!(close(dp.xi, dp.sigma / 2.0 * dp.n * (dp.m - dp.m_c), 1e-12));
        assert!(close(dp.p_star, dp.n / (dp.n - 2.0), 1e-12));
    }

    #[test]
    fn derive_equal_weights() {
        let dp = derive(&CknParameters::new(5, 1.0, 1.0, 0.9)).unwrap();
        assert_eq!(dp.alpha, 1.0);
        assert_eq!(dp.n, 4.0);
        let dp = derive(&CknParameters::new(5, 0.0, 0.0, 0.9)).unwrap();
        assert_eq!(dp.alpha, 1.0);
        assert_eq!(dp.n, 5.0);
    }

    #[test]
    fn derive_rejects_nonpositive_sigma() {
        assert!(derive(&CknParameters::new(4, -3.0, 0.0, 0.9)).is_err());
        assert!(derive(&CknParameters::new(4, 2.5, 2.0, 0.9)).is_err());
    }

    #[test]
    fn lambda_scale_identity() {
        let dp = derive(&CknParameters::new(4, -0.5, 1.0, 0.95)).unwrap();
        let lhs = dp.lambda_scale.powf(dp.n * (dp.m - dp.m_c));
        assert!(close(lhs, (1.0 - dp.m) / (2.0 * dp.m), 1e-12));
    }

    #[test]
    fn p_duality() {
        let a = CknParameters::from_p(4, -1.0, -1.0, 1.5);
        assert!(close(a.m, 2.5 / 3.0, 1e-15));
        assert!(close(a.p(), 1.5, 1e-14));
    }

    #[test]
    fn beta_fs_examples() {
        assert_eq!(beta_fs(0.0, 4), Some(0.0));
        assert!(close(beta_fs(-2.0, 4).unwrap(), 2.0 - 24f64.sqrt(), 1e-15));
        assert!((beta_fs(-2.0, 4).unwrap() + 2.8990).abs() < 1e-4);
        assert_eq!(beta_fs(1.0, 4), None);
    }

    #[test]
    fn eta_examples() {
        assert!(close(eta(0.0, 0.0, 4).unwrap(), 1.0, 1e-15));
        let e = eta(-0.5, 1.0, 4).unwrap();
        assert!(close(e, 4.0 * 4.5625f64.sqrt() - 5.0, 1e-14));
        assert!((e - 3.5440).abs() < 1e-4);
        for d in 2..6u32 {
            let beta = 0.3;
            let k = (d as f64 - 2.0 - beta) / 2.0;
            let want = (d as f64 - 1.0 + k * k).sqrt() - k;
            assert!(close(eta(beta, beta, d).unwrap(), want, 1e-14));
        }
        assert!(eta(-3.0, 0.0, 4).is_err());
    }

    #[test]
    fn eta_two_forms_agree() {
        for &(b, g, d) in &[(-0.5, 1.0, 4u32), (-2.0, -2.0, 3), (-3.5, -2.0, 4), (0.1, 0.5, 5)] {
            let dp = derive(&CknParameters::new(d, b, g, 0.9)).unwrap();
            let a = eta(b, g, d).unwrap();
            let c = eta_from_alpha(dp.alpha, dp.n, d);
            assert!(close(a, c, 1e-12), "{a} vs {c}");
        }
    }

    #[test]
    fn classify_examples() {
        // p = 1.5 exceeds p_star = 6 / 5.5 at this point; p = 1.05 does not.
        assert_eq!(classify(-3.5, -2.0, 4, 1.5), RegionLabel::Inadmissible);
        assert_eq!(classify(-3.5, -2.0, 4, 1.05), RegionLabel::Symmetry);
        assert_eq!(classify(-2.0, -2.0, 4, 1.5), RegionLabel::SymmetryBreaking);
        assert_eq!(classify(0.5, 0.0, 4, 1.5), RegionLabel::Inadmissible);
        assert_eq!(classify(0.0, 0.0, 4, 1.5), RegionLabel::FSBoundary);
        assert_eq!(classify(0.0, 0.0, 1, 1.5), RegionLabel::Inadmissible);
    }

    #[test]
    fn gap_closed_form_examples() {
        let dp = derive(&CknParameters::gns(4, 0.8)).unwrap();
        assert!(close(spectral_gap_closed_form(&dp).unwrap(), 10.0, 1e-12));
        let dp = derive(&CknParameters::new(4, -0.5, 1.0, 0.95)).unwrap();
        assert!(close(spectral_gap_closed_form(&dp).unwrap(), 3.5, 1e-12));
        let dp = derive(&CknParameters::gns(4, 0.75)).unwrap();
        assert!(close(spectral_gap_closed_form(&dp).unwrap(), 8.0, 1e-12));
        let dp = derive(&CknParameters::gns(4, 0.5 + 1e-3)).unwrap();
        assert!(spectral_gap_closed_form(&dp).is_err());
    }

    #[test]
    fn gap_branches_agree_at_threshold() {
        // At m = m1 with beta = gamma = 0 both branches equal 2 (2 delta - n).
        let dp = derive(&CknParameters::gns(4, 0.75)).unwrap();
        let a2 = dp.alpha * dp.alpha;
        let radial = 2.0 * a2 * (2.0 * dp.delta - dp.n);
        let angular = 2.0 * a2 * dp.delta * eta_from_alpha(dp.alpha, dp.n, dp.d);
        assert!(close(gap_threshold(&dp), 1.0, 1e-14));
        assert!(close(radial, angular, 1e-10));
    }

    #[test]
    fn zeta_examples() {
        let dp = derive(&CknParameters::new(4, -0.5, 1.0, 0.95)).unwrap();
        assert!(close(zeta_ckn(&dp, 3.5), 0.025, 1e-12));
        let dp = derive(&CknParameters::gns(4, 0.8)).unwrap();
        assert!(zeta_ckn(&dp, 10.0).abs() < 1e-14);
        let dp = derive(&CknParameters::gns(4, 0.75)).unwrap();
        assert!(zeta_ckn(&dp, 8.0).abs() < 1e-14);

        assert!(close(zeta_gns(4, 0.8).unwrap(), 0.4, 1e-12));
        assert!((zeta_gns(3, 2.0 / 3.0 + 1e-9).unwrap() - 6e-9).abs() < 1e-12);
        assert!(close(zeta_gns(2, 0.75).unwrap(), 1.0, 1e-15));
        assert!(zeta_gns(4, 0.75).is_err());
    }

    #[test]
    fn mu_examples() {
        assert!(close(mu_initial_layer(0.4, 0.0).unwrap(), 0.4, 1e-15));
        let e4 = (-4.0f64).exp();
        let want = 1.6 * e4 / (4.4 - 0.4 * e4);
        assert!(close(mu_initial_layer(0.4, 1.0).unwrap(), want, 1e-14));
        assert!((mu_initial_layer(0.4, 1.0).unwrap() - 0.006672).abs() < 1e-6);
        assert!(mu_initial_layer(0.4, 200.0).unwrap() < 1e-300);
        assert!(mu_initial_layer(0.0, 1.0).is_err());
    }

    #[test]
    fn region_scan_rejects_empty() {
        assert!(region_scan(4, 2.0, ScanRange::new(1.0, 1.0, 5), ScanRange::new(0.0, 1.0, 5)).is_err());
        assert!(region_scan(4, 2.0, ScanRange::new(0.0, 1.0, 1), ScanRange::new(0.0, 1.0, 5)).is_err());
    }

    #[test]
    fn region_scan_inadmissible_corner() {
        let cells = region_scan(4, 2.0, ScanRange::new(1.0, 2.0, 10), ScanRange::new(3.0, 4.0, 10)).unwrap();
        assert_eq!(cells.len(), 100);
        for c in &cells {
            assert_eq!(c.label, RegionLabel::Inadmissible, "{c:?}");
        }
    }
}
