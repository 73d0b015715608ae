use std::sync::Arc;

use fdlab_core::spectrum::{assemble_mode, hardy_poincare_gap, rate_prediction, smallest_eigenvalue, SpectralResult};
use fdlab_core::{derive, make_grid, spectral_gap_closed_form, CknParameters, DerivedParameters, RadialGrid, Spacing};

fn setup(d: u32, beta: f64, gamma: f64, m: f64) -> DerivedParameters {
    derive(&CknParameters::new(d, beta, gamma, m)).unwrap()
}

fn grid(dp: &DerivedParameters, r_max: f64, cells: usize, q: f64) -> Arc<RadialGrid> {
    Arc::new(make_grid(r_max, cells, Spacing::Geometric(q), dp).unwrap())
}

/// Geometric ratio that keeps the first cell width fixed while the domain
/// grows, so the resolution per decade is unchanged.
fn ratio_for(r_max: f64, cells: usize, h0: f64) -> f64 {
    let (mut lo, mut hi) = (1.0 + 1e-9, 1.1);
    for _ in 0..200 {
        let q: f64 = 0.5 * (lo + hi);
        let first = r_max * (q - 1.0) / (q.powi(cells as i32) - 1.0);
        if first > h0 {
            lo = q;
        } else {
            hi = q;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn forms_are_symmetric_and_mass_is_definite() {
    let dp = setup(4, -0.5, 1.0, 0.95);
    let g = grid(&dp, 80.0, 256, 1.02);
    for l in 0..3 {
        let f = assemble_mode(l, &g, &dp);
        // three-band storage holds one off-diagonal, so symmetry is structural;
        // check the stiffness form against the quadratic form it encodes
        let x: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.11).cos()).collect();
        let axy: f64 = f.stiffness.apply(&y).iter().zip(&x).map(|(a, b)| a * b).sum();
        let ayx: f64 = f.stiffness.apply(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
        assert!((axy - ayx).abs() <= 1e-12 * axy.abs().max(ayx.abs()));
        assert!(f.mass.iter().all(|p| *p > 0.0));
        assert!(f.stiffness.quadratic(&x) >= 0.0);
    }
}

#[test]
fn eigenpairs_are_consistent() {
    let dp = setup(4, 0.0, 0.0, 0.8);
    let g = grid(&dp, 80.0, 1024, 1.006);
    for l in 0..3 {
        let r = smallest_eigenvalue(l, &g, &dp).unwrap();
        let forms = assemble_mode(l, &g, &dp);
        let f = r.eigenfunction.values();
        let a = forms.stiffness.quadratic(f);
        let b: f64 = f.iter().zip(&forms.mass).map(|(x, w)| x * x * w).sum();
        assert!((a / b - r.lambda).abs() <= 1e-9 * r.lambda, "l={l}");
        assert!(r.lambda >= 0.0);
        if l == 0 {
            let b1: f64 = f.iter().zip(&forms.mass).map(|(x, w)| x * w).sum();
            let bb: f64 = forms.mass.iter().sum();
            assert!(b1.abs() / (b * bb).sqrt() <= 1e-8);
        }
    }
}

#[test]
fn refinement_ladder_converges_monotonically() {
    for dp in [setup(4, 0.0, 0.0, 0.8), setup(4, -0.5, 1.0, 0.95)] {
        let mut last = f64::INFINITY;
        for cells in [512, 1024, 2048] {
            let q = ratio_for(80.0, cells, 1e-3 * 2048.0 / cells as f64);
            let r = hardy_poincare_gap(&dp, &grid(&dp, 80.0, cells, q), 4).unwrap();
            assert!(r.rel_dev < last, "cells={cells}: {} after {last}", r.rel_dev);
            last = r.rel_dev;
        }
        assert!(last <= 5e-3);
    }
}

#[test]
fn truncation_doubling_moves_gap_little() {
    for dp in [setup(4, 0.0, 0.0, 0.75), setup(4, -0.5, 1.0, 0.95)] {
        let h0 = 5e-4;
        let a = hardy_poincare_gap(&dp, &grid(&dp, 80.0, 2048, ratio_for(80.0, 2048, h0)), 3).unwrap();
        // one extra doubling of the radius costs ln 2 / ln q more cells
        let q = ratio_for(80.0, 2048, h0);
        let extra = (2f64.ln() / q.ln()).round() as usize;
        let b = hardy_poincare_gap(
            &dp,
            &grid(&dp, 160.0, 2048 + extra, ratio_for(160.0, 2048 + extra, h0)),
            3,
        )
        .unwrap();
        assert!((a.gap - b.gap).abs() <= 2e-3 * a.gap, "{} vs {}", a.gap, b.gap);
    }
}

#[test]
fn gap_is_attained_at_low_modes() {
    for dp in [
        setup(4, 0.0, 0.0, 0.8),
        setup(4, 0.0, 0.0, 0.75),
        setup(4, -0.5, 1.0, 0.95),
        setup(3, 0.0, 0.0, 0.7),
    ] {
        let r = hardy_poincare_gap(&dp, &grid(&dp, 80.0, 1024, 1.006), 4).unwrap();
        assert!(r.gap_mode <= 1, "{:?}", r.gap_mode);
        for w in r.modes[1..].windows(2) {
            assert!(w[1].lambda > w[0].lambda);
        }
    }
}

#[test]
fn rate_identity_and_ordering() {
    for dp in [
        setup(4, 0.0, 0.0, 0.8),
        setup(4, -0.5, 1.0, 0.95),
        setup(5, 0.0, 0.0, 0.85),
    ] {
        let lambda = spectral_gap_closed_form(&dp).unwrap();
        let p = rate_prediction(&dp, lambda).unwrap();
        assert!((p.linearized - (p.baseline + 4.0 * p.zeta)).abs() <= 1e-12 * p.linearized);
        assert!(p.improved >= p.baseline);
    }
}

#[test]
fn csv_has_one_row_per_mode() {
    let dp = setup(4, 0.0, 0.0, 0.8);
    let r: SpectralResult = hardy_poincare_gap(&dp, &grid(&dp, 80.0, 256, 1.02), 3).unwrap();
    let csv = r.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "l,Lambda_l,closed_form,rel_dev");
    assert_eq!(lines.len(), 5);
    assert!(r.eigenfunction_csv(1).is_some());
    assert!(hardy_poincare_gap(&dp, &grid(&dp, 80.0, 256, 1.02), 1).is_err());
}

#[test]
fn outside_the_hardy_poincare_range_is_refused() {
    // delta = 2 < n = 4
    let dp = setup(4, 0.0, 0.0, 0.5);
    assert!(hardy_poincare_gap(&dp, &grid(&dp, 80.0, 256, 1.02), 3).is_err());
}
