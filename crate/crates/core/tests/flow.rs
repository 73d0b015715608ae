use std::sync::Arc;

use fdlab_core::flow::{
    evolve, initial_data, reconstruct_original, reference_profile, step, FlowConfig, FlowSeries, FlowState, InitialKind,
};
use fdlab_core::functionals::tail_a;
use fdlab_core::profiles::{barenblatt_evolving, mass_closed_form};
use fdlab_core::{derive, make_grid, CknParameters, DerivedParameters, RadialField, RadialGrid, Spacing};

fn setup(d: u32, beta: f64, gamma: f64, m: f64, r_max: f64, cells: usize) -> (DerivedParameters, Arc<RadialGrid>) {
    let dp = derive(&CknParameters::new(d, beta, gamma, m)).unwrap();
    let g = Arc::new(make_grid(r_max, cells, Spacing::Geometric(1.01), &dp).unwrap());
    (dp, g)
}

fn perturbed(g: &Arc<RadialGrid>, dp: &DerivedParameters, mode: u32, amplitude: f64) -> RadialField {
    initial_data(InitialKind::PerturbedBarenblatt { mode, amplitude }, g, dp, None).unwrap()
}

fn sup_rel(a: &RadialField, b: &RadialField) -> f64 {
    let vmax = b.values().iter().cloned().fold(0.0, f64::max);
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / vmax
}

#[test]
fn stationary_profile_stays_put() {
    for (d, beta, gamma, m) in [(4, 0.0, 0.0, 0.8), (3, 0.0, 0.0, 0.75), (4, -0.5, 1.0, 0.95)] {
        let (dp, g) = setup(d, beta, gamma, m, 60.0, 512);
        let b = reference_profile(&g, m).unwrap();
        let cfg = FlowConfig::new(g, 0.05, 5.0);
        let mut state = FlowState::new(b.clone()).unwrap();
        for _ in 0..100 {
            state = step(&state, &cfg, &dp).unwrap();
        }
        assert!(sup_rel(&state.v, &b) <= 1e-8, "d={d} m={m}: {}", sup_rel(&state.v, &b));
        let series = evolve(&b, &cfg, &dp).unwrap();
        assert!(series.rows.iter().all(|r| r.entropy <= 1e-10));
    }
}

#[test]
fn mass_conserved_over_a_thousand_steps() {
    let (dp, g) = setup(4, -0.5, 1.0, 0.95, 60.0, 256);
    let v0 = perturbed(&g, &dp, 2, 0.4);
    let mut cfg = FlowConfig::new(g, 0.01, 10.0);
    cfg.record_every = 50;
    let series = evolve(&v0, &cfg, &dp).unwrap();
    assert_eq!(series.newton_iters.len(), 1000);
    assert!(series.max_mass_drift <= 1e-12, "{:e}", series.max_mass_drift);
}

#[test]
fn entropy_decreases_at_every_recorded_step() {
    let (dp, g) = setup(4, 0.0, 0.0, 0.8, 60.0, 512);
    let v0 = perturbed(&g, &dp, 1, 0.3);
    let mut cfg = FlowConfig::new(g, 1e-2, 3.0);
    cfg.record_every = 5;
    let series = evolve(&v0, &cfg, &dp).unwrap();
    for w in series.rows.windows(2) {
        assert!(w[1].t > w[0].t);
        assert!(w[1].entropy < w[0].entropy, "t = {}", w[1].t);
    }
}

#[test]
fn entropy_decays_at_least_at_the_baseline_rate() {
    let (dp, g) = setup(4, 0.0, 0.0, 0.8, 60.0, 512);
    let v0 = perturbed(&g, &dp, 1, 0.3);
    let mut cfg = FlowConfig::new(g, 1e-2, 3.0);
    cfg.record_every = 10;
    let series = evolve(&v0, &cfg, &dp).unwrap();
    let f0 = series.rows[0].entropy;
    let rate = 4.0 * dp.alpha * dp.alpha * 0.95;
    for r in series.rows.iter().filter(|r| r.t >= 0.5) {
        assert!(r.entropy <= f0 * (-rate * r.t).exp(), "t = {}", r.t);
    }
}

#[test]
fn time_refinement_is_first_order() {
    let (dp, g) = setup(4, 0.0, 0.0, 0.8, 40.0, 256);
    let v0 = perturbed(&g, &dp, 1, 0.3);
    let at_half = |dt: f64| -> f64 {
        let cfg = FlowConfig::new(g.clone(), dt, 0.5);
        evolve(&v0, &cfg, &dp).unwrap().rows.last().unwrap().entropy
    };
    let (a, b, c) = (at_half(0.02), at_half(0.01), at_half(0.005));
    let ratio = (a - b).abs() / (b - c).abs();
    assert!((1.7..2.3).contains(&ratio), "{ratio}");
}

#[test]
fn reconstruction_of_the_stationary_profile_is_the_source_solution() {
    for (d, beta, gamma, m) in [(4, 0.0, 0.0, 0.8), (4, -0.5, 1.0, 0.95), (3, 0.5, 0.5, 0.8)] {
        let (dp, g) = setup(d, beta, gamma, m, 60.0, 256);
        let b = reference_profile(&g, m).unwrap();
        let mc = mass_closed_form(&dp).unwrap();
        let a2 = dp.alpha * dp.alpha;
        for tau in [0.0, 0.3] {
            let rec = reconstruct_original(tau, &b, &dp).unwrap();
            // same solution, read off at the time where its scale is R / lambda
            let scale = rec.scale / dp.lambda_scale;
            let shifted = (scale.powf(dp.xi_n) - 1.0) / (a2 * dp.xi_n);
            for (x, r) in rec
                .field
                .values()
                .iter()
                .zip(rec.field.grid().original_radii())
                .step_by(17)
            {
                let exact = barenblatt_evolving(shifted, r, mc, &dp).unwrap();
                assert!((x / exact - 1.0).abs() <= 1e-8, "d={d} tau={tau} r={r}: {x} vs {exact}");
            }
        }
    }
}

#[test]
fn reconstruction_preserves_mass_and_energy_grows() {
    let (dp, g) = setup(4, 0.0, 0.0, 0.8, 60.0, 256);
    let v0 = perturbed(&g, &dp, 2, 0.4);
    let mut cfg = FlowConfig::new(g, 1e-2, 1.0);
    cfg.record_every = 10;
    cfg.keep_snapshots = true;
    let series = evolve(&v0, &cfg, &dp).unwrap();
    let mut last = 0.0;
    for (row, v) in series.rows.iter().zip(&series.snapshots) {
        let rec = reconstruct_original(row.t, v, &dp).unwrap();
        assert!((rec.field.mass() - v.mass()).abs() <= 1e-10 * v.mass());
        assert!(rec.energy > last);
        last = rec.energy;
    }
}

#[test]
fn ordered_data_stay_ordered() {
    let (dp, g) = setup(4, 0.0, 0.0, 0.8, 40.0, 256);
    let b = reference_profile(&g, dp.m).unwrap();
    let mass = b.mass();
    let pairs = [
        (perturbed(&g, &dp, 2, 0.3), perturbed(&g, &dp, 2, 0.3).scaled(1.2)),
        (
            b.clone(),
            b.map(|s, v| v + 0.5 * (-(s - 1.0) * (s - 1.0)).exp()).unwrap(),
        ),
        (
            initial_data(InitialKind::HeavyTail { exponent: 12.0 }, &g, &dp, Some(mass)).unwrap(),
            initial_data(InitialKind::HeavyTail { exponent: 12.0 }, &g, &dp, Some(1.1 * mass)).unwrap(),
        ),
    ];
    for (k, (lo, hi)) in pairs.iter().enumerate() {
        assert!(lo.values().iter().zip(hi.values()).all(|(a, b)| a <= b));
        let mut cfg = FlowConfig::new(g.clone(), 1e-2, 1.0);
        cfg.record_every = 10;
        cfg.keep_snapshots = true;
        let a = evolve(lo, &cfg, &dp).unwrap();
        let b = evolve(hi, &cfg, &dp).unwrap();
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            for (p, q) in x.values().iter().zip(y.values()) {
                assert!(p <= &(q * (1.0 + 1e-12)), "pair {k}: {p} > {q}");
            }
        }
    }
}

#[test]
fn initial_data_masses_and_tails() {
    let (dp, g) = setup(4, 0.0, 0.0, 0.8, 30.0, 256);
    let target = reference_profile(&g, dp.m).unwrap().mass();
    for kind in [
        InitialKind::PerturbedBarenblatt {
            mode: 1,
            amplitude: 0.05,
        },
        InitialKind::Bump {
            center: 1.0,
            width: 0.5,
        },
        InitialKind::HeavyTail { exponent: 12.0 },
        InitialKind::RandomModes {
            seed: 7,
            modes: 4,
            amplitude: 0.5,
        },
    ] {
        let v = initial_data(kind, &g, &dp, None).unwrap();
        assert!(v.values().iter().all(|x| *x >= 0.0));
        assert!((v.mass() - target).abs() <= 1e-12 * target, "{kind:?}");
    }
    assert!(initial_data(
        InitialKind::PerturbedBarenblatt {
            mode: 1,
            amplitude: 1.5
        },
        &g,
        &dp,
        None
    )
    .is_err());

    // the supremum of the tail functional of a bump sits inside its support
    let (c, w) = (1.0, 0.5);
    let v = initial_data(InitialKind::Bump { center: c, width: w }, &g, &dp, None).unwrap();
    let k = 2.0 * dp.delta - dp.n;
    let a = tail_a(&v, &dp);
    assert!(a >= (c - w).powf(k) * target * (1.0 - 1e-9) && a <= (c + w).powf(k) * target);
}

#[test]
fn heavy_tails_are_flagged_by_domain_growth() {
    let dp = derive(&CknParameters::gns(4, 0.8)).unwrap();
    let a_at = |r_max: f64, exponent: f64| {
        let g = Arc::new(make_grid(r_max, 512, Spacing::Geometric(1.01), &dp).unwrap());
        let v = initial_data(InitialKind::HeavyTail { exponent }, &g, &dp, Some(1.0)).unwrap();
        tail_a(&v, &dp)
    };
    // 2 delta = 10
    let fast = a_at(200.0, 12.0) / a_at(50.0, 12.0);
    let slow = a_at(200.0, 8.0) / a_at(50.0, 8.0);
    assert!((fast - 1.0).abs() < 0.1, "{fast}");
    assert!(slow > 3.0, "{slow}");
}

#[test]
fn series_csv_round_trip_and_determinism() {
    let (dp, g) = setup(4, -0.5, 1.0, 0.95, 40.0, 128);
    let v0 = perturbed(&g, &dp, 1, 0.3);
    let mut cfg = FlowConfig::new(g, 0.05, 1.0);
    cfg.record_every = 2;
    let a = evolve(&v0, &cfg, &dp).unwrap();
    let b = evolve(&v0, &cfg, &dp).unwrap();
    assert_eq!(a, b);
    let back = FlowSeries::from_csv(&a.to_csv()).unwrap();
    assert_eq!(back.rows, a.rows);
    assert_eq!(back.dp, a.dp);
    assert_eq!(back.scheme, a.scheme);
    assert_eq!(back.reference_mass, a.reference_mass);
    assert!(a.rows.last().unwrap().t >= 1.0);
}

#[test]
fn mismatched_grid_is_rejected() {
    let (dp, g) = setup(4, 0.0, 0.0, 0.8, 40.0, 128);
    let (_, other) = setup(4, 0.0, 0.0, 0.8, 30.0, 128);
    let v0 = perturbed(&g, &dp, 1, 0.3);
    assert!(evolve(&v0, &FlowConfig::new(other, 0.1, 1.0), &dp).is_err());
}
