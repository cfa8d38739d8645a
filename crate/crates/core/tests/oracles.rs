//! Closed-form values checked against the public API.

use std::f64::consts::{PI, TAU};

use egl::bform::leray_pressure;
use egl::calculus::{biot_savart, divergence, gradient, leray_project, vorticity};
use egl::eulerian::{energy, EulerSolver, StepperConfig};
use egl::illposedness::loglog_slope;
use egl::invariants::{det_formula, taylor_green};
use egl::lagrangian::{Diffeo, Interpolation, InversionConfig};
use egl::spectral::chi_cutoff;
use egl::{BAssembly, Grid, ScalarField, Sobolev, VectorField};

fn grid(n: usize) -> Grid {
    Grid::standard(2, n).unwrap()
}

#[test]
fn sobolev_norm_of_a_single_mode() {
    // sin(kx) has coefficients ∓i/2 at ±k, so ‖·‖_s² = 2 (1+k²)^s / 4.
    let g = grid(16);
    for (k, s) in [(1.0, 2.5), (3.0, 1.0), (2.0, 0.0)] {
        let f = ScalarField::from_fn(&g, |x| (k * x[0]).sin());
        let exact = (0.5 * (1.0 + k * k).powf(s)).sqrt();
        assert!((f.sobolev_norm(s) - exact).abs() < 1e-13 * exact);
    }
}

#[test]
fn sobolev_norm_scales_with_the_box() {
    // On a box of side L the frequency is 2π/L.
    let g = Grid::new(2, 16, 3.0).unwrap();
    let f = ScalarField::from_fn(&g, |x| (TAU * x[1] / 3.0).cos());
    let xi = TAU / 3.0;
    let exact = (0.5 * (1.0 + xi * xi).powf(2.0)).sqrt();
    assert!((f.sobolev_norm(2.0) - exact).abs() < 1e-13);
}

#[test]
fn taylor_green_energy_vorticity_and_pressure() {
    let g = grid(32);
    let u = taylor_green(&g);
    assert!((energy(&u) - 0.5).abs() < 1e-14);
    assert!(divergence(&u).max_abs() < 1e-13);

    // Ω_12 = ∂_2 u_1 − ∂_1 u_2 = −2 sin x sin y.
    let om = vorticity(&u);
    let exact = ScalarField::from_fn(&g, |x| -2.0 * x[0].sin() * x[1].sin());
    assert!((om.get(0, 1) - &exact).max_abs() < 1e-13);
    assert!((om.get(1, 0) + &exact).max_abs() < 1e-13);

    // (u·∇)u = ∇(−p) with p = (cos 2x + cos 2y)/4, and B = −p.
    let p = ScalarField::from_fn(&g, |x| ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) / 4.0);
    assert!((&leray_pressure(&u) - &p).max_abs() < 1e-13);
    let b = BAssembly::unit(&g);
    assert!((&b.b(&u).unwrap() + &p).max_abs() < 1e-13);
    assert!((&b.pressure_from(&u).unwrap() - &p).max_abs() < 1e-13);
}

#[test]
fn taylor_green_is_steady() {
    let g = grid(32);
    let u = taylor_green(&g);
    let cfg = StepperConfig {
        dt: 0.05,
        ..Default::default()
    };
    let v = EulerSolver::new(&g, cfg).unwrap().evolve(&u, 1.0).unwrap();
    assert!((&v - &u).sobolev_norm(2.0) < 1e-12);
}

#[test]
fn leray_projection_splits_gradients_from_rotations() {
    let g = grid(32);
    let phi = ScalarField::from_fn(&g, |x| (x[0] + 2.0 * x[1]).sin() + (3.0 * x[0]).cos());
    let grad = gradient(&phi);
    assert!(leray_project(&grad).max_abs() < 1e-13);
    let tg = taylor_green(&g);
    let mixed = &tg + &grad;
    assert!((&leray_project(&mixed) - &tg).max_abs() < 1e-13);
}

#[test]
fn biot_savart_recovers_a_shear_flow() {
    // u = (sin y, 0): Ω_12 = cos y.
    let g = grid(16);
    let u = VectorField::from_fn(&g, |x| [x[1].sin(), 0.0, 0.0]);
    let om = vorticity(&u);
    assert!((om.get(0, 1) - &ScalarField::from_fn(&g, |x| x[1].cos())).max_abs() < 1e-13);
    assert!((&biot_savart(&om).unwrap() - &u).max_abs() < 1e-13);
}

#[test]
fn chi_keeps_the_closed_unit_ball() {
    let g = grid(16);
    let f = ScalarField::from_fn(&g, |x| x[0].cos() + (x[0] + x[1]).sin() + (2.0 * x[1]).cos() + 0.5);
    let kept = ScalarField::from_fn(&g, |x| x[0].cos() + 0.5);
    assert!((&chi_cutoff(&f, 1.0).unwrap() - &kept).max_abs() < 1e-14);
}

#[test]
fn gradient_and_vorticity_norms_differ_by_sqrt_two() {
    // For div-free u, |Ω̂|² = 2|ξ|²|û|² while |dû|² = |ξ|²|û|².
    let g = grid(32);
    let mut r = egl::random::rng(3);
    let u = egl::random::random_div_free(&g, 6, 1.0, 1.0, &mut r).unwrap();
    let du = egl::calculus::jacobian(&u).sobolev_norm(1.5);
    let om = vorticity(&u).sobolev_norm(1.5);
    assert!((du - om / 2f64.sqrt()).abs() < 1e-12 * du);
}

#[test]
fn shift_inverts_to_the_opposite_shift() {
    let g = grid(16);
    let phi = Diffeo::shift(&g, &[0.3, -1.1]);
    let (inv, _) = phi.invert(&InversionConfig::default()).unwrap();
    let back = Diffeo::shift(&g, &[-0.3, 1.1]);
    assert!((inv.displacement() - back.displacement()).max_abs() < 1e-10);
    assert!((phi.det_jacobian().max_abs() - 1.0).abs() < 1e-13);
}

#[test]
fn synthetic_flow_determinant_matches_closed_form() {
    // u_i = a sin x_i: det dφ = Π e^{at} / (cos²(x_i/2) + sin²(x_i/2) e^{2at}).
    for c in det_formula(64, 0.5, 1.0, 100, Interpolation::QuinticSpline).unwrap() {
        assert!(c.passed, "{c:?}");
    }
}

#[test]
fn loglog_slope_of_power_laws() {
    let x = [1.0, 2.0, 4.0, 8.0];
    let y: Vec<f64> = x.iter().map(|k| 3.0 / k).collect();
    assert!((loglog_slope(&x, &y) + 1.0).abs() < 1e-14);
    let y: Vec<f64> = x.iter().map(|k| k * k * PI).collect();
    assert!((loglog_slope(&x, &y) - 2.0).abs() < 1e-14);
}
