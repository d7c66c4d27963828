use std::f64::consts::PI;

use grating_core::lattice::{schlomilch_in, LatticeOptions, LatticeSumTable};
use grating_core::medium::derive_wavenumbers;
use grating_core::solver::{solve_config, Prepared, SolveMethod, SolverOptions};
use grating_core::special::{bernoulli_number, bernoulli_poly_at_zero, hankel1};
use grating_core::{GratingConfig, GratingError};

// (n, Delta, phi_i in degrees, Re I_n, Im I_n) from 2e6 raw terms plus an
// Euler-transformed tail in an independent implementation.
const LATTICE_REFERENCE: &[(i32, f64, f64, f64, f64)] = &[
    (0, 0.3, 10.0, 0.07740109753542973, 0.8010151252444804),
    (1, 0.3, 10.0, -0.12414969106072878, 0.18708873722128153),
    (3, 0.3, 10.0, 0.7133295235914359, 0.5387005487424036),
    (2, 0.15, -25.0, 1.5050490484994443, -4.506610911453457),
    (4, 0.15, -25.0, -0.4065869046489738, -83.18672331742084),
    (1, 0.45, 40.0, -0.5865948886993461, 0.5935415734888139),
];

fn normal_plane_config(delta: f64, phi_deg: f64) -> GratingConfig {
    GratingConfig {
        theta_i: PI / 2.0,
        phi_i: phi_deg.to_radians(),
        d: delta,
        a: 0.05 * delta,
        ..GratingConfig::default()
    }
}

#[test]
fn lattice_sums_match_frozen_reference() {
    let opts = LatticeOptions::default();
    for &(n, delta, phi, re, im) in LATTICE_REFERENCE {
        let wn = derive_wavenumbers(&normal_plane_config(delta, phi)).unwrap();
        let got = schlomilch_in(&wn, n, &opts).unwrap().value;
        let expect = num_complex::Complex64::new(re, im);
        let err = (got - expect).norm() / expect.norm().max(1.0);
        assert!(err < 1e-8, "I_{n}(Delta={delta}, phi={phi}): {got} vs {expect}, err {err:e}");
    }
}

#[test]
fn hankel_frozen_values() {
    // H_n^(1)(x) = J_n(x) + i Y_n(x), 30-digit reference
    let h = hankel1(3, 4.2).unwrap();
    assert!((h.re - 0.43439427638720078).abs() < 1e-13, "{h}");
    assert!((h.im - -0.11182671687254791).abs() < 1e-13, "{h}");
}

#[test]
fn bernoulli_frozen_values() {
    let standard = [(0, 1.0), (1, -0.5), (2, 1.0 / 6.0), (4, -1.0 / 30.0), (12, -691.0 / 2730.0), (30, 8615841276005.0 / 14322.0)];
    for (m, v) in standard {
        let b = bernoulli_poly_at_zero(m).unwrap();
        assert!((b - v).abs() <= 1e-15 * v.abs(), "B_{m}(0) = {b}, expected {v}");
    }
    // positive convention: B_1 = 1/6, B_2 = 1/30, B_6 = 691/2730
    for (k, v) in [(1, 1.0 / 6.0), (2, 1.0 / 30.0), (6, 691.0 / 2730.0)] {
        let b = bernoulli_number(k).unwrap();
        assert!((b - v).abs() <= 1e-15 * v, "B_{k} = {b}, expected {v}");
    }
}

#[test]
fn neumann_diverges_under_strong_coupling() {
    // a/d = 0.45, k_r d = 6 sits 0.045 below the first anomaly
    let kd = 6.0;
    let cfg = GratingConfig {
        theta_i: PI / 2.0,
        phi_i: 0.0,
        eps_r: 2.25,
        d: kd / (2.0 * PI),
        a: 0.45 * kd / (2.0 * PI),
        ..GratingConfig::default()
    };
    let opts = SolverOptions::default();
    let prep = Prepared::new(&cfg).unwrap();
    let sums = LatticeSumTable::compute(&prep.wn, 16, &opts.lattice).unwrap();
    let err = prep.solve_with(8, &sums, SolveMethod::Neumann, &opts).unwrap_err();
    assert!(matches!(err, GratingError::NoConvergence(_)), "{err}");
    let direct = prep.solve_with(8, &sums, SolveMethod::Direct, &opts).unwrap();
    assert!(direct.residual < 1e-12);
    assert!(direct.a(0).norm() > 0.0);
}

#[test]
fn direct_solution_is_independent_of_e0_scaling() {
    let base = GratingConfig {
        theta_i: PI / 3.0,
        phi_i: 0.4,
        eps_r: 3.0,
        a: 0.01,
        d: 0.1,
        ..GratingConfig::default()
    };
    let scaled = GratingConfig { e0: 2.5, ..base };
    let (t1, _) = solve_config(&base, 5, &SolverOptions::default()).unwrap();
    let (t2, _) = solve_config(&scaled, 5, &SolverOptions::default()).unwrap();
    let scale = t1.modes().map(|n| t1.a(n).norm().max(t1.ah(n).norm())).fold(0.0, f64::max);
    for n in t1.modes() {
        assert!((t2.a(n) - 2.5 * t1.a(n)).norm() <= 1e-13 * scale, "A_{n}");
        assert!((t2.ah(n) - 2.5 * t1.ah(n)).norm() <= 1e-13 * scale, "AH_{n}");
    }
}
