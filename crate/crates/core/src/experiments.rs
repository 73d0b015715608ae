//! Checks that consume recorded trajectories: decay-rate fits, discrete
//! entropy production, the quotient inequality, threshold times, Harnack
//! sandwiches and Renyi entropy-power growth.
//!
//! Everything except [`ghp_sandwich`] and [`renyi_growth_check`] works on
//! the rows alone, so a series read back from CSV gives identical results.

use std::fmt;

use crate::constants::{spectral_gap_closed_form, DerivedParameters};
use crate::error::{Error, Result};
use crate::flow::{original_time, reconstruct_original, FlowSeries};
use crate::functionals::power_integral;
use crate::profiles::barenblatt_stationary;
use crate::spectrum::{rate_prediction, RatePrediction};

/// Rows with a smaller entropy are dropped from rate fits.
pub const FIT_ENTROPY_FLOOR: f64 = 1e2 * f64::EPSILON;

/// Mass mismatch tolerated by the checks that need mass-matched data.
pub const MASS_MATCH_TOL: f64 = 1e-8;

/// Least-squares fit of `-ln y = c + rate t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub slope: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fits an exponential decay rate to the points of `(t, y)` with
/// `t_lo <= t <= t_hi` and `y > FIT_ENTROPY_FLOOR`.
pub fn fit_exponential(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<ExpFit> {
    let (lo, hi) = window;
    if !(hi > lo) {
        return Err(Error::DegenerateWindow(format!("empty window [{lo}, {hi}]")));
    }
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(t, y)| **t >= lo && **t <= hi && **y > FIT_ENTROPY_FLOOR)
        .map(|(t, y)| (*t, -y.ln()))
        .collect();
    if pts.len() < 10 {
        return Err(Error::DegenerateWindow(format!(
            "{} usable rows in [{lo}, {hi}], need at least 10",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateWindow("all rows share one time".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(ExpFit {
        slope,
        r_squared,
        points: pts.len(),
    })
}

/// Rate fit of a trajectory with its verdicts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub window: (f64, f64),
    pub slope: f64,
    pub r_squared: f64,
    pub points: usize,
    /// Predictions built from the closed-form gap.
    pub predictions: RatePrediction,
    /// `2 (1 - m) Lambda_0` for the radial eigenvalue, when supplied.
    pub linearized_radial: Option<f64>,
    pub meets_baseline: bool,
    pub meets_improved: bool,
    pub linearized_rel_dev: Option<f64>,
}

impl RateFit {
    /// Linearized rate matched within 5 % (vacuous without a radial
    /// eigenvalue).
    pub fn matches_linearized(&self) -> bool {
        self.linearized_rel_dev.is_none_or(|d| d <= 0.05)
    }

    pub fn passed(&self) -> bool {
        self.meets_baseline && self.meets_improved && self.matches_linearized()
    }
}

/// Fits the decay rate of `F` on `window` (default `[t_end / 2, t_end]`).
/// `lambda_radial` is the constrained radial eigenvalue; a radial flow only
/// sees that sector, so the linearized comparison uses it rather than the
/// full gap.
pub fn fit_decay_rate(series: &FlowSeries, window: Option<(f64, f64)>, lambda_radial: Option<f64>) -> Result<RateFit> {
    let t_end = series.rows.last().map_or(0.0, |r| r.t);
    let window = window.unwrap_or((0.5 * t_end, t_end));
    let fit = fit_exponential(&series.times(), &series.entropies(), window)?;
    let predictions = rate_prediction(&series.dp, spectral_gap_closed_form(&series.dp)?)?;
    let linearized_radial = lambda_radial.map(|l| 2.0 * (1.0 - series.dp.m) * l);
    Ok(RateFit {
        window,
        slope: fit.slope,
        r_squared: fit.r_squared,
        points: fit.points,
        predictions,
        linearized_radial,
        meets_baseline: fit.slope >= 0.99 * predictions.baseline,
        meets_improved: fit.slope >= 0.95 * predictions.improved,
        linearized_rel_dev: linearized_radial.map(|l| (fit.slope - l).abs() / l),
    })
}

/// Largest relative residual `|dF/dt + I| / I` between consecutive rows,
/// with `I` averaged over the two rows. Rows within the first ten steps and
/// rows at round-off entropy are skipped; an empty set gives 0.
pub fn check_entropy_production(series: &FlowSeries) -> f64 {
    let skip = 10.0 * series.dt * (1.0 + 1e-9);
    let mut worst: f64 = 0.0;
    for w in series.rows.windows(2) {
        if w[0].t < skip {
            continue;
        }
        let i_mid = 0.5 * (w[0].fisher + w[1].fisher);
        if w[0].entropy.max(w[1].entropy) <= FIT_ENTROPY_FLOOR || !(i_mid > 0.0) {
            continue;
        }
        let dfdt = (w[1].entropy - w[0].entropy) / (w[1].t - w[0].t);
        worst = worst.max((dfdt + i_mid).abs() / i_mid);
    }
    worst
}

/// Largest normalized violation of `dQ/dt <= Q (Q - 4)`, that is the
/// positive part of `(dQ/dt - Q (Q - 4)) / Q^2` with `Q` at the midpoint.
/// Rows at round-off entropy are skipped. Only unweighted runs are accepted.
pub fn check_quotient_ode(series: &FlowSeries) -> Result<f64> {
    let dp = &series.dp;
    if !(dp.beta == 0.0 && dp.gamma == 0.0) {
        return Err(Error::Refused(format!(
            "quotient inequality is only established for beta = gamma = 0 (got beta = {}, gamma = {})",
            dp.beta, dp.gamma
        )));
    }
    let mut worst: f64 = 0.0;
    for w in series.rows.windows(2) {
        let (Some(q0), Some(q1)) = (w[0].quotient, w[1].quotient) else {
            continue;
        };
        if w[0].entropy.min(w[1].entropy) <= FIT_ENTROPY_FLOOR {
            continue;
        }
        let q = 0.5 * (q0 + q1);
        let dq = (q1 - q0) / (w[1].t - w[0].t);
        worst = worst.max((dq - q * (q - 4.0)) / (q * q));
    }
    Ok(worst)
}

/// Two-sided bounds `C_under B <= v <= C_over B` after an onset time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhpSandwich {
    pub onset: f64,
    pub c_under: f64,
    pub c_over: f64,
    /// Radius where `v / B` keeps growing up to the domain edge, when it
    /// does.
    pub unbounded_at: Option<f64>,
}

impl GhpSandwich {
    pub fn straddles_one(&self) -> bool {
        self.c_under <= 1.0 && 1.0 <= self.c_over
    }
}

/// Log-log slope of `v / B` over the outer decade above which the upper
/// bound is reported infinite.
const TAIL_GROWTH_SLOPE: f64 = 0.05;

/// Bounds of `v / B` over every snapshot with `t >= onset`. The upper
/// bound is infinite when the initial datum has a heavier tail than `B`.
pub fn ghp_sandwich(series: &FlowSeries, onset: f64) -> Result<GhpSandwich> {
    let snaps: Vec<_> = series
        .rows
        .iter()
        .zip(&series.snapshots)
        .filter(|(r, _)| r.t >= onset)
        .collect();
    if series.snapshots.len() != series.rows.len() {
        return Err(Error::InvalidArgument("series has no snapshots".into()));
    }
    if snaps.is_empty() {
        return Err(Error::InvalidArgument(format!("no snapshot at or after t = {onset}")));
    }
    let m = series.dp.m;
    let mut c_under = f64::INFINITY;
    let mut c_over: f64 = 0.0;
    let mut unbounded_at = None;
    for (_, v) in snaps {
        let s = v.grid().nodes();
        for (s, x) in s.iter().zip(v.values()) {
            let r = x / barenblatt_stationary(*s, m);
            c_under = c_under.min(r);
            c_over = c_over.max(r);
        }
    }
    // a tail heavier than the stationary one shows up as power growth of
    // v0 / B over the outer decade of the grid
    let v0 = &series.snapshots[0];
    let s = v0.grid().nodes();
    let n = s.len();
    let outer = s[n - 1];
    if let Some(k) = s.iter().position(|x| *x >= 0.1 * outer) {
        let ratio = |i: usize| v0.values()[i] / barenblatt_stationary(s[i], m);
        if ratio(k) > 0.0 && ratio(n - 1) > 0.0 {
            let slope = (ratio(n - 1) / ratio(k)).ln() / (outer / s[k]).ln();
            if slope > TAIL_GROWTH_SLOPE {
                unbounded_at = Some(outer);
            }
        }
    }
    if unbounded_at.is_some() {
        c_over = f64::INFINITY;
    }
    Ok(GhpSandwich {
        onset,
        c_under,
        c_over,
        unbounded_at,
    })
}

/// Empirical threshold times and their power-law fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub epsilons: Vec<f64>,
    /// Original time after which `sup |v / B - 1| <= eps` on every later
    /// row; `None` if the last row is still above `eps`.
    pub t_star: Vec<Option<f64>>,
    /// Exponent `a` of `t_star ~ eps^{-a}` over the positive, uncensored
    /// entries.
    pub a_fit: Option<f64>,
    pub monotone: bool,
    pub ghp: Option<GhpSandwich>,
}

impl ThresholdReport {
    pub fn all_finite(&self) -> bool {
        self.t_star.iter().all(|t| t.is_some())
    }
}

/// Threshold times for decreasing `epsilons`, in original time.
pub fn threshold_time(series: &FlowSeries, epsilons: &[f64]) -> Result<ThresholdReport> {
    if epsilons.is_empty() || epsilons.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument(
            "epsilons must be nonempty and strictly decreasing".into(),
        ));
    }
    let dp = &series.dp;
    let rows = &series.rows;
    let t_star: Vec<Option<f64>> = epsilons
        .iter()
        .map(|&eps| {
            let last_bad = rows.iter().rposition(|r| r.relerr_sup > eps);
            match last_bad {
                None => rows.first().map(|r| original_time(r.t, dp)),
                Some(k) if k + 1 < rows.len() => Some(original_time(rows[k + 1].t, dp)),
                Some(_) => None,
            }
        })
        .collect();
    let monotone = t_star.windows(2).all(|w| match (w[0], w[1]) {
        (Some(a), Some(b)) => a <= b,
        (_, None) => true,
        (None, Some(_)) => false,
    });
    let pts: Vec<(f64, f64)> = epsilons
        .iter()
        .zip(&t_star)
        .filter_map(|(e, t)| t.filter(|t| *t > 0.0).map(|t| ((1.0 / e).ln(), t.ln())))
        .collect();
    let a_fit = if pts.len() >= 2 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        Some(sxy / sxx)
    } else {
        None
    };
    Ok(ThresholdReport {
        epsilons: epsilons.to_vec(),
        t_star,
        a_fit,
        monotone,
        ghp: None,
    })
}

/// Outcome of the entropy-power growth check.
#[derive(Debug, Clone, PartialEq)]
pub struct RenyiReport {
    /// `k = (m - m_c) / (1 - m)`
    pub exponent: f64,
    /// Calibrated growth rate of `E^k`: the exact slope for stationary data
    /// of the same mass.
    pub slope: f64,
    /// Largest relative shortfall of `E(t)^k` below `E(0)^k + slope t`.
    pub max_violation: f64,
    /// Smallest relative excess over the line after `t = 0`.
    pub min_excess: f64,
    /// `(t, E(t))` in original time.
    pub energy: Vec<(f64, f64)>,
}

/// Checks `E(t)^k >= E(0)^k + C t` along a run with snapshots, with `C` the
/// rate that stationary data of the same mass attain with equality.
pub fn renyi_growth_check(series: &FlowSeries, dp: &DerivedParameters) -> Result<RenyiReport> {
    if series.snapshots.len() != series.rows.len() || series.snapshots.is_empty() {
        return Err(Error::InvalidArgument("series has no snapshots".into()));
    }
    if series.mass_mismatch() > MASS_MATCH_TOL {
        return Err(Error::Refused(format!(
            "initial mass differs from the stationary profile's by {:e}",
            series.mass_mismatch()
        )));
    }
    let k = (dp.m - dp.m_c) / (1.0 - dp.m);
    let grid = series.snapshots[0].grid();
    let b = crate::flow::reference_profile(grid, dp.m)?;
    let j_b = power_integral(&b, dp.m);
    let a2 = dp.alpha * dp.alpha;
    let slope = dp.lambda_scale.powf(-dp.xi_n) * a2 * dp.xi_n * j_b.powf(k);
    let mut energy = Vec::with_capacity(series.rows.len());
    for (row, v) in series.rows.iter().zip(&series.snapshots) {
        let rec = reconstruct_original(row.t, v, dp)?;
        energy.push((rec.t, rec.energy));
    }
    let e0k = energy[0].1.powf(k);
    let mut max_violation: f64 = 0.0;
    let mut min_excess = f64::INFINITY;
    for &(t, e) in &energy[1..] {
        let ek = e.powf(k);
        let rel = (ek - e0k - slope * t) / ek;
        max_violation = max_violation.max(-rel);
        min_excess = min_excess.min(rel);
    }
    Ok(RenyiReport {
        exponent: k,
        slope,
        max_violation,
        min_excess,
        energy,
    })
}

/// Whether the improved rate holds from the initial time on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovedFromZero {
    pub holds: bool,
    /// `min_t ln(F(0) e^{-rate t} / F(t))`; nonnegative when `holds`.
    pub margin: f64,
    pub rate: f64,
}

/// Tests `F(t) <= F(0) e^{-(4 alpha^2 + zeta) t}` on every recorded row.
pub fn improved_rate_from_zero(series: &FlowSeries, dp: &DerivedParameters) -> Result<ImprovedFromZero> {
    if series.mass_mismatch() > MASS_MATCH_TOL {
        return Err(Error::Refused(format!(
            "initial mass differs from the stationary profile's by {:e}",
            series.mass_mismatch()
        )));
    }
    let lambda = spectral_gap_closed_form(dp)?;
    let zeta = crate::constants::zeta_ckn(dp, lambda);
    let rate = 4.0 * dp.alpha * dp.alpha + zeta;
    let f0 = series.rows.first().map_or(0.0, |r| r.entropy);
    if !(f0 > FIT_ENTROPY_FLOOR) {
        return Ok(ImprovedFromZero {
            holds: true,
            margin: f64::INFINITY,
            rate,
        });
    }
    let margin = series
        .rows
        .iter()
        .skip(1)
        .filter(|r| r.entropy > 0.0)
        .map(|r| (f0 / r.entropy).ln() - rate * r.t)
        .fold(f64::INFINITY, f64::min);
    Ok(ImprovedFromZero {
        holds: margin >= 0.0,
        margin,
        rate,
    })
}

/// Plain-text `key = value` block summarizing a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected 'key = value', got '{line}'")))?;
            out.push(k.trim(), v.trim());
        }
        Ok(out)
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_exponential() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.05).collect();
        let y: Vec<f64> = t.iter().map(|t| (-4.0 * t).exp()).collect();
        let f = fit_exponential(&t, &y, (0.0, 5.0)).unwrap();
        assert!((f.slope - 4.0).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_sensitivity() {
        let t: Vec<f64> = (0..=400).map(|k| k as f64 * 0.05).collect();
        let y: Vec<f64> = t.iter().map(|t| (-4.0 * t).exp() + 0.01 * (-2.0 * t).exp()).collect();
        let early = fit_exponential(&t, &y, (0.0, 0.5)).unwrap();
        let late = fit_exponential(&t, &y, (10.0, 15.0)).unwrap();
        assert!((early.slope - 4.0).abs() < 0.1, "{}", early.slope);
        assert!((late.slope - 2.0).abs() < 1e-6, "{}", late.slope);
    }

    #[test]
    fn degenerate_windows() {
        let t = [0.0, 1.0, 2.0];
        let y = [1.0, 0.5, 0.25];
        assert!(matches!(
            fit_exponential(&t, &y, (0.0, 2.0)),
            Err(Error::DegenerateWindow(_))
        ));
        assert!(fit_exponential(&t, &y, (1.0, 1.0)).is_err());
    }

    #[test]
    fn summary_round_trip() {
        let mut s = Summary::new();
        s.push("d", 4).push("verdict", "pass").push("slope", 0.35);
        let back = Summary::parse(&s.to_string()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.get("verdict"), Some("pass"));
        assert!(Summary::parse("nonsense").is_err());
    }
}
