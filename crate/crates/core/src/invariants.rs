//! Invariant checks shared by the `verify` command and the test suites.
//!
//! Each check returns a [`Check`] with the measured value and the tolerance
//! it was held to. Tolerances for discretization-limited checks depend on the
//! grid through [`discretization_factor`].

use rand::Rng;

use crate::bform::BAssembly;
use crate::calculus::{advect, biot_savart, jacobian, laplacian, leray_project, vorticity};
use crate::error::Result;
use crate::eulerian::{EulerSolver, EulerState, StepperConfig};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::illposedness::{dexp_fd, loglog_slope, scaling_check, trajectory_covariance};
use crate::lagrangian::{
    eulerian_from_lagrangian, flow_of, vorticity_pullback, Diffeo, Geodesic, GeodesicConfig, Interpolant,
    Interpolation, InversionConfig,
};
use crate::random::{random_div_free, random_scalar, rng};
use crate::spectral::{chi_cutoff, dealias, Sobolev};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    /// Passes when `value ≤ tol`.
    pub fn at_most(name: &'static str, value: f64, tol: f64, detail: impl Into<String>) -> Self {
        Check {
            name,
            value,
            tol,
            passed: value <= tol,
            detail: detail.into(),
        }
    }

    /// Passes when `|value − target| ≤ tol`.
    pub fn near(name: &'static str, value: f64, target: f64, tol: f64, detail: impl Into<String>) -> Self {
        Check {
            name,
            value,
            tol,
            passed: (value - target).abs() <= tol,
            detail: detail.into(),
        }
    }
}

/// Multiplier on discretization-limited tolerances: 1 for `N ≥ 64`, 10 at
/// `N = 32` and 1000 at `N = 16`. Taken from the measured errors of the
/// Lagrangian checks with band-4 data, which grow by roughly 10–30× per
/// halving of `N` below 64.
pub fn discretization_factor(n: usize) -> f64 {
    match n {
        0..=16 => 1e3,
        17..=32 => 1e1,
        _ => 1.0,
    }
}

#[derive(Clone, Debug)]
pub struct BatteryConfig {
    pub n: usize,
    pub s: f64,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    /// Random fields per statistical check.
    pub samples: usize,
    pub interp: Interpolation,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            n: 64,
            s: 2.5,
            dt: 1e-3,
            t_final: 1.0,
            seed: 0,
            samples: 100,
            interp: Interpolation::QuinticSpline,
        }
    }
}

/// `sin x cos y, −cos x sin y`, lifted to 3D with a zero third component.
pub fn taylor_green(grid: &Grid) -> VectorField {
    VectorField::from_fn(grid, |x| [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0])
}

fn band_for(grid: &Grid, want: i64) -> i64 {
    want.min(grid.dealias_k()).max(1)
}

/// Relative symmetry defect, exact idempotence defect, and the worst ratio
/// `‖χf‖_{s+s'} / (2^{s'/2}‖f‖_s)` for `(s, s') ∈ {(2,1), (3,2)}`.
pub fn chi_laws(grid: &Grid, samples: usize, seed: u64) -> Result<Vec<Check>> {
    let mut r = rng(seed);
    let band = band_for(grid, 8);
    let (mut sym, mut idem, mut smooth): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let f = random_scalar(grid, band, 1.0, &mut r)?;
        let g = random_scalar(grid, band, 1.0, &mut r)?;
        let radius = r.gen_range(0.5..3.0);
        let cf = chi_cutoff(&f, radius)?;
        let cg = chi_cutoff(&g, radius)?;
        let scale = f.sobolev_norm(0.0) * g.sobolev_norm(0.0);
        sym = sym.max((cf.l2_pairing(&g)? - f.l2_pairing(&cg)?).abs() / scale);
        let twice = chi_cutoff(&cf, radius)?;
        idem = idem.max((&twice - &cf).max_abs());
        for (s, sp) in [(2.0, 1.0), (3.0, 2.0)] {
            let unit = chi_cutoff(&f, 1.0)?;
            smooth = smooth.max(unit.sobolev_norm(s + sp) / (2f64.powf(sp / 2.0) * f.sobolev_norm(s)));
        }
    }
    Ok(vec![
        Check::at_most("chi_self_adjoint", sym, 1e-12, format!("{samples} pairs")),
        Check::at_most("chi_idempotent", idem, 0.0, "max |χχf − χf|"),
        Check::at_most("chi_smoothing", smooth, 1.0, "worst ratio to the bound, (s,s') ∈ {(2,1),(3,2)}"),
    ])
}

/// Worst relative slack `(‖f‖_{λs'+(1−λ)s} − ‖f‖_{s'}^λ ‖f‖_s^{1−λ}) / rhs`.
pub fn interpolation_inequality(grid: &Grid, samples: usize, seed: u64) -> Result<Check> {
    let mut r = rng(seed);
    let band = band_for(grid, 10);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let f = random_scalar(grid, band, r.gen_range(0.0..3.0), &mut r)?;
        let s = r.gen_range(0.0..4.0);
        let sp = r.gen_range(0.0..=s);
        let lambda: f64 = r.gen_range(0.01..0.99);
        let lhs = f.sobolev_norm(lambda * sp + (1.0 - lambda) * s);
        let rhs = f.sobolev_norm(sp).powf(lambda) * f.sobolev_norm(s).powf(1.0 - lambda);
        worst = worst.max((lhs - rhs) / rhs);
    }
    Ok(Check::at_most(
        "interpolation_inequality",
        worst.max(0.0),
        1e-10,
        format!("{samples} fields, worst relative slack {worst:.3e}"),
    ))
}

/// Taylor–Green plus `samples` random divergence-free fields rebuilt from
/// their vorticity; relative `H²` error.
pub fn biot_savart_round_trip(grid: &Grid, samples: usize, seed: u64) -> Result<Check> {
    let mut r = rng(seed);
    let band = band_for(grid, 8);
    let mut fields = vec![taylor_green(grid)];
    for _ in 0..samples {
        fields.push(random_div_free(grid, band, 2.0, 1.0, &mut r)?);
    }
    let mut worst: f64 = 0.0;
    for u in &fields {
        let back = biot_savart(&vorticity(u))?;
        worst = worst.max((&back - u).sobolev_norm(2.0) / u.sobolev_norm(2.0));
    }
    Ok(Check::at_most("biot_savart_round_trip", worst, 1e-10, format!("{} fields", fields.len())))
}

/// Worst `‖du‖_{s−1} / (n‖Ω‖_{s−1})`; at most 1 means no violation.
pub fn gradient_vorticity_bound(grid: &Grid, s: f64, samples: usize, seed: u64) -> Result<Check> {
    let mut r = rng(seed);
    let band = band_for(grid, 8);
    let n = grid.dim() as f64;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let u = random_div_free(grid, band, r.gen_range(0.0..3.0), 1.0, &mut r)?;
        let du = jacobian(&u).sobolev_norm(s - 1.0);
        let om = vorticity(&u).sobolev_norm(s - 1.0);
        worst = worst.max(du / (n * om));
    }
    Ok(Check::at_most("gradient_vorticity_bound", worst, 1.0, format!("{samples} fields, worst ‖du‖/(n‖Ω‖)")))
}

/// `∇B(u) = (1−P)(u·∇)u` and `ΔB = Σ ∂_k u_i ∂_i u_k` on band-limited
/// divergence-free fields, both relative in `L²`.
pub fn pressure_consistency(grid: &Grid, samples: usize, seed: u64) -> Result<Vec<Check>> {
    let mut r = rng(seed);
    let band = band_for(grid, grid.n() as i64 / 6);
    let b = BAssembly::unit(grid);
    let (mut grad, mut poisson): (f64, f64) = (0.0, 0.0);
    for _ in 0..samples {
        let u = random_div_free(grid, band, 2.0, 1.0, &mut r)?;
        let adv = advect(&u);
        let irrot = &adv - &leray_project(&adv);
        let gb = b.grad_b(&u)?;
        grad = grad.max((&gb - &irrot).sobolev_norm(0.0) / irrot.sobolev_norm(0.0));
        let j = jacobian(&u);
        let mut src = ScalarField::zeros(grid);
        for i in 0..grid.dim() {
            for k in 0..grid.dim() {
                src = &src + &j.get(k, i).pointwise_mul(j.get(i, k));
            }
        }
        let src = dealias(&src);
        let src = &src - &ScalarField::constant(grid, src.mean());
        let lap = laplacian(&b.b(&u)?);
        poisson = poisson.max((&lap - &src).sobolev_norm(0.0) / src.sobolev_norm(0.0));
    }
    Ok(vec![
        Check::at_most("pressure_gradient_identity", grad, 1e-9, format!("{samples} fields")),
        Check::at_most("pressure_poisson_residual", poisson, 1e-9, format!("{samples} fields")),
    ])
}

/// Random divergence-free data with `‖u₀‖_3 = amplitude` in the band `|k| ≤ 4`.
pub fn random_initial(grid: &Grid, amplitude: f64, seed: u64) -> Result<VectorField> {
    random_div_free(grid, band_for(grid, 4), 3.0, amplitude, &mut rng(seed))
}

/// Largest `‖div u(t)‖_{s−1}` along an Euler run.
pub fn divergence_preservation(u0: &VectorField, t: f64, cfg: &StepperConfig) -> Result<Check> {
    let tr = EulerSolver::new(u0.grid(), cfg.clone())?.solve(u0, t)?;
    let drift = tr.records.iter().map(|r| r.div_drift).fold(0.0, f64::max);
    Ok(Check::at_most("divergence_preservation", drift, 1e-7, format!("{} steps", tr.records.len() - 1)))
}

/// `‖u(T) − u(0)‖_2` for Taylor–Green.
pub fn taylor_green_stationarity(grid: &Grid, t: f64, cfg: &StepperConfig) -> Result<Check> {
    let u0 = taylor_green(grid);
    let u1 = EulerSolver::new(grid, cfg.clone())?.evolve(&u0, t)?;
    Ok(Check::at_most("taylor_green_stationarity", (&u1 - &u0).sobolev_norm(2.0), 1e-8, ""))
}

/// `u(T)` from the Euler solver against `v(T)∘φ(T)⁻¹` from the geodesic
/// system, relative in `H^s`.
pub fn lagrangian_gap(u0: &VectorField, t: f64, steps: usize, s: f64, dt: f64, interp: Interpolation) -> Result<f64> {
    let grid = u0.grid();
    let euler = EulerSolver::new(
        grid,
        StepperConfig {
            dt,
            save_every: 0,
            ..Default::default()
        },
    )?
    .evolve(u0, t)?;
    let geo = Geodesic::new(grid, GeodesicConfig::with_interp(interp))?;
    let end = geo.integrate(u0, t, steps, 0)?.pop().expect("final state");
    let inv = InversionConfig {
        interp,
        ..Default::default()
    };
    let u = eulerian_from_lagrangian(&[end.phi], &[end.v], &inv)?.pop().expect("one field");
    Ok((&u - &euler).sobolev_norm(s) / euler.sobolev_norm(s))
}

/// Trigonometric prolongation of `u` onto a finer grid of the same box.
pub fn prolong(u: &VectorField, fine: &Grid) -> Result<VectorField> {
    let pts = Diffeo::identity(fine).points();
    let comps = u
        .components()
        .iter()
        .map(|c| ScalarField::from_samples(fine, Interpolant::new(c, Interpolation::Fourier).sample(&pts)))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(comps)
}

/// Equivalence gap at `(N, steps)` and, as a refinement study, at
/// `(N/2, steps/2)`. Passes when the fine gap meets `1e-3` (scaled by
/// [`discretization_factor`]) and is below the coarse one.
pub fn lagrangian_equivalence(cfg: &BatteryConfig, amplitude: f64, steps: usize) -> Result<Vec<Check>> {
    let fine = Grid::standard(2, cfg.n)?;
    let coarse = Grid::standard(2, cfg.n / 2)?;
    let u_coarse = random_initial(&coarse, amplitude, cfg.seed)?;
    let u_fine = prolong(&u_coarse, &fine)?;
    let g_fine = lagrangian_gap(&u_fine, cfg.t_final, steps, cfg.s, cfg.dt, cfg.interp)?;
    let g_coarse = lagrangian_gap(&u_coarse, cfg.t_final, (steps / 2).max(1), cfg.s, cfg.dt, cfg.interp)?;
    let tol = 1e-3 * discretization_factor(cfg.n);
    Ok(vec![
        Check::at_most("lagrangian_equivalence", g_fine, tol, format!("N = {}, {steps} steps", cfg.n)),
        Check {
            name: "lagrangian_refinement",
            value: g_fine / g_coarse,
            tol: 1.0,
            passed: g_fine < g_coarse,
            detail: format!("gap {g_coarse:.3e} at N = {} → {g_fine:.3e} at N = {}", cfg.n / 2, cfg.n),
        },
    ])
}

/// Flow maps of an Euler trajectory, kept every `save_every` steps.
pub fn euler_flow(u0: &VectorField, t: f64, dt: f64, save_every: usize, interp: Interpolation) -> Result<(Vec<EulerState>, Vec<Diffeo>)> {
    let tr = EulerSolver::new(
        u0.grid(),
        StepperConfig {
            dt,
            save_every,
            ..Default::default()
        },
    )?
    .solve(u0, t)?;
    let phis = flow_of(&tr.states, interp)?;
    Ok((tr.states, phis))
}

/// `‖det dφ(t) − 1‖_∞` over every stored flow map.
pub fn volume_preservation(phis: &[Diffeo], n: usize) -> Check {
    let worst = phis
        .iter()
        .map(|p| p.det_jacobian().samples().iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    Check::at_most("volume_preservation", worst, 1e-6 * discretization_factor(n), format!("{} maps", phis.len()))
}

/// Relative `H^{s−1}` defect of `dφᵀ(Ω(t)∘φ)dφ = Ω₀` at the final time.
pub fn vorticity_conservation(states: &[EulerState], phis: &[Diffeo], s: f64, interp: Interpolation) -> Result<Check> {
    let first = &states[0].u;
    let last = states.last().expect("non-empty");
    let phi = phis.last().expect("non-empty");
    let om0 = vorticity(first);
    let back = vorticity_pullback(phi, &vorticity(&last.u), interp)?;
    let rel = (&back - &om0).sobolev_norm(s - 1.0) / om0.sobolev_norm(s - 1.0);
    let n = first.grid().n();
    Ok(Check::at_most("vorticity_conservation", rel, 1e-4 * discretization_factor(n), format!("t = {}", last.t)))
}

/// The steady field `u_i = a sin x_i` has the explicit flow
/// `φ_i = 2 atan(tan(x_i/2) e^{at})`, so `det dφ` is known in closed form and
/// equals `e^{nat}` at the stagnation point `x = 0`, where `div u = na`.
/// Returns the closed-form check over the grid and the stagnation-point check.
pub fn det_formula(n: usize, a: f64, t: f64, steps: usize, interp: Interpolation) -> Result<Vec<Check>> {
    let grid = Grid::standard(2, n)?;
    let u = VectorField::from_fn(&grid, |x| [a * x[0].sin(), a * x[1].sin(), 0.0]);
    let states: Vec<EulerState> = (0..=steps)
        .map(|i| EulerState {
            t: t * i as f64 / steps as f64,
            u: u.clone(),
        })
        .collect();
    let phi = flow_of(&states, interp)?.pop().expect("final map");
    let det = phi.det_jacobian();
    let e = (a * t).exp();
    let exact = ScalarField::from_fn(&grid, |x| {
        x[..2]
            .iter()
            .map(|xi| {
                let (s, c) = (0.5 * xi).sin_cos();
                e / (c * c + s * s * e * e)
            })
            .product()
    });
    let closed = (&det - &exact).max_abs() / exact.max_abs();
    let stagnation = (det.samples()[0] - (2.0 * a * t).exp()).abs() / (2.0 * a * t).exp();
    let tol = 1e-6 * discretization_factor(n);
    Ok(vec![
        Check::at_most("det_closed_form", closed, tol, format!("a = {a}, t = {t}")),
        Check::at_most("det_exponential_at_stagnation", stagnation, tol, format!("c = div u = {}", 2.0 * a)),
    ])
}

/// `exp(t·u₀) = φ(t; u₀)`: the rescaled initial velocity at time 1 against
/// the original at time `t`.
pub fn exp_rescaling(u0: &VectorField, t: f64, interp: Interpolation) -> Result<Check> {
    let geo = Geodesic::new(u0.grid(), GeodesicConfig::with_interp(interp))?;
    let a = geo.exp_map(&u0.scale(t), 1.0)?;
    let b = geo.exp_map(u0, t)?;
    let gap = (a.displacement() - b.displacement()).max_abs() / b.displacement().max_abs().max(f64::MIN_POSITIVE);
    Ok(Check::at_most("exp_rescaling", gap, 1e-7, format!("t = {t}")))
}

/// `‖D_ε − v‖_∞` for the central difference of `exp` at 0 over
/// `ε ∈ {1e−2, 5e−3, 2.5e−3}`; passes when the log-log slope is `2 ± 0.3`
/// or the errors are already at round-off.
pub fn dexp_at_zero(v: &VectorField, interp: Interpolation) -> Result<Check> {
    let geo = Geodesic::new(v.grid(), GeodesicConfig::with_interp(interp))?;
    let zero = VectorField::zeros(v.grid());
    let v_eff = crate::spectral::dealias_vec(v);
    let eps = [1e-2, 5e-3, 2.5e-3];
    let mut errs = Vec::new();
    for e in eps {
        let d = dexp_fd(&geo, &zero, v, e)?;
        errs.push((&d.field - &v_eff).max_abs() / v_eff.max_abs());
    }
    let slope = loglog_slope(&eps, &errs);
    let floor = errs.iter().all(|e| *e < 1e-12);
    Ok(Check {
        name: "dexp_at_zero",
        value: slope,
        tol: 0.3,
        passed: floor || (slope - 2.0).abs() <= 0.3,
        detail: format!("errors {:?}", errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>()),
    })
}

/// Trajectory covariance with factor `lambda` and the solution-map identity
/// `E_T(u₀) = E₁(Tu₀)/T`. Powers of two for `lambda` or `T` make both sides
/// bit-identical, so callers should pick other values.
pub fn scaling_identities(u0: &VectorField, t: f64, lambda: f64, cfg: &StepperConfig) -> Result<Vec<Check>> {
    let cov = trajectory_covariance(u0, t, lambda, 50, cfg)?;
    let et = scaling_check(u0, t, cfg)?;
    Ok(vec![
        Check::at_most("trajectory_covariance", cov, 1e-6, format!("λ = {lambda}")),
        Check::at_most("solution_map_scaling", et, 1e-5, format!("T = {t}")),
    ])
}

/// Observed order from three runs with steps `h, h/2, h/4`.
pub fn observed_order(coarse: &VectorField, mid: &VectorField, fine: &VectorField, s: f64) -> f64 {
    let e1 = (coarse - mid).sobolev_norm(s);
    let e2 = (mid - fine).sobolev_norm(s);
    (e1 / e2).log2()
}

/// Self-convergence order of the Eulerian RK4 integrator.
pub fn euler_order(u0: &VectorField, t: f64, dt: f64, s: f64) -> Result<f64> {
    let run = |h: f64| -> Result<VectorField> {
        EulerSolver::new(
            u0.grid(),
            StepperConfig {
                dt: h,
                save_every: 0,
                ..Default::default()
            },
        )?
        .evolve(u0, t)
    };
    Ok(observed_order(&run(dt)?, &run(dt / 2.0)?, &run(dt / 4.0)?, s))
}

/// Self-convergence order of the geodesic RK4 integrator, measured on the
/// displacement of `φ(t)`.
pub fn geodesic_order(u0: &VectorField, t: f64, steps: usize, s: f64, interp: Interpolation) -> Result<f64> {
    let geo = Geodesic::new(u0.grid(), GeodesicConfig::with_interp(interp))?;
    let run = |m: usize| -> Result<VectorField> {
        Ok(geo.integrate(u0, t, m, 0)?.pop().expect("final").phi.into_displacement())
    };
    Ok(observed_order(&run(steps)?, &run(2 * steps)?, &run(4 * steps)?, s))
}

/// Runs every check at the configured resolution.
pub fn run_battery(cfg: &BatteryConfig) -> Result<Vec<Check>> {
    let grid = Grid::standard(2, cfg.n)?;
    let stepper = StepperConfig {
        dt: cfg.dt,
        s_monitor: cfg.s,
        save_every: 0,
        ..Default::default()
    };
    let few = (cfg.samples / 5).max(1);
    let mut out = chi_laws(&grid, cfg.samples, cfg.seed)?;
    out.push(interpolation_inequality(&grid, cfg.samples, cfg.seed + 1)?);
    out.push(biot_savart_round_trip(&grid, few, cfg.seed + 2)?);
    out.push(gradient_vorticity_bound(&grid, cfg.s, cfg.samples, cfg.seed + 3)?);
    out.extend(pressure_consistency(&grid, few, cfg.seed + 4)?);

    let u0 = random_initial(&grid, 0.5, cfg.seed + 5)?;
    out.push(divergence_preservation(&u0, cfg.t_final, &stepper)?);
    out.push(taylor_green_stationarity(&grid, cfg.t_final, &stepper)?);
    let save = ((cfg.t_final / cfg.dt).round() as usize / 100).max(1);
    let (states, phis) = euler_flow(&u0, cfg.t_final, cfg.dt, save, cfg.interp)?;
    out.push(volume_preservation(&phis, cfg.n));
    out.push(vorticity_conservation(&states, &phis, cfg.s, cfg.interp)?);
    out.extend(det_formula(cfg.n, 0.5, cfg.t_final, 100, cfg.interp)?);
    out.extend(lagrangian_equivalence(cfg, 0.5, 20)?);
    out.push(exp_rescaling(&u0, 0.7, cfg.interp)?);
    out.push(dexp_at_zero(&u0.scale(1.0 / u0.max_norm()), cfg.interp)?);
    let half = StepperConfig {
        dt: cfg.dt.max(1e-2),
        ..stepper
    };
    out.extend(scaling_identities(&u0, 0.7, 3.0, &half)?);
    Ok(out)
}
