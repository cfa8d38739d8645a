//! Explicit time integration of `∂_t u = ∇B(u) - (u·∇)u`.

use crate::bform::BAssembly;
use crate::calculus::{advect_with_jacobian, dealiased_spectrum, divergence, jacobian};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::spectral::{chi_cutoff, dealias_vec, Sobolev};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Rk2,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rk4" => Ok(Method::Rk4),
            "rk2" => Ok(Method::Rk2),
            other => Err(format!("unknown method `{other}` (expected rk4 or rk2)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StepperConfig {
    pub dt: f64,
    pub method: Method,
    /// Sobolev index of the recorded norm; the divergence is measured in `H^{s-1}`.
    pub s_monitor: f64,
    /// Allowed `‖div u‖_{s-1} / ‖u₀‖_s` before the run is flagged.
    pub drift_budget: f64,
    /// Abort once `‖u‖_s` exceeds this multiple of its initial value.
    pub growth_limit: f64,
    /// Radius of the low-pass ball in `B`.
    pub cutoff: f64,
    /// Keep every `save_every`-th state (the final state is always kept).
    /// Zero keeps only the endpoints.
    pub save_every: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            dt: 1e-3,
            method: Method::Rk4,
            s_monitor: 2.5,
            drift_budget: 1e-7,
            growth_limit: 1e6,
            cutoff: 1.0,
            save_every: 1,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.cutoff.is_finite() && self.cutoff > 0.0) {
            return Err(Error::param("cutoff", format!("must be positive, got {}", self.cutoff)));
        }
        if !self.s_monitor.is_finite() {
            return Err(Error::param("s_monitor", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EulerState {
    pub t: f64,
    pub u: VectorField,
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub energy: f64,
    pub hs_norm: f64,
    /// `‖div u‖_{s-1}`.
    pub div_drift: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub states: Vec<EulerState>,
    pub records: Vec<StepRecord>,
    /// Largest relative drift when it exceeded the budget.
    pub budget_violation: Option<f64>,
    /// Time step actually used (`T` divided into equal steps).
    pub dt: f64,
}

impl Trajectory {
    pub fn last(&self) -> &EulerState {
        self.states.last().expect("trajectories hold at least one state")
    }

    pub fn max_div_drift(&self) -> f64 {
        self.records.iter().map(|r| r.div_drift).fold(0.0, f64::max)
    }
}

/// Eulerian solver with a fixed `B` assembly.
#[derive(Clone, Debug)]
pub struct EulerSolver {
    b: BAssembly,
    cfg: StepperConfig,
}

impl EulerSolver {
    pub fn new(grid: &crate::Grid, cfg: StepperConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(EulerSolver {
            b: BAssembly::new(grid, cfg.cutoff)?,
            cfg,
        })
    }

    pub fn config(&self) -> &StepperConfig {
        &self.cfg
    }

    pub fn assembly(&self) -> &BAssembly {
        &self.b
    }

    /// `∇B(u) - (u·∇)u`.
    pub fn rhs(&self, u: &VectorField) -> VectorField {
        let jac = jacobian(u);
        let gb = self.b.grad_b_with_jacobian(u, &jac);
        let adv = advect_with_jacobian(u, &jac);
        gb.axpy(-1.0, &adv)
    }

    fn advance(&self, u: &VectorField, dt: f64) -> VectorField {
        match self.cfg.method {
            Method::Rk4 => {
                let k1 = self.rhs(u);
                let k2 = self.rhs(&u.axpy(0.5 * dt, &k1));
                let k3 = self.rhs(&u.axpy(0.5 * dt, &k2));
                let k4 = self.rhs(&u.axpy(dt, &k3));
                let mut out = u.axpy(dt / 6.0, &k1);
                out = out.axpy(dt / 3.0, &k2);
                out = out.axpy(dt / 3.0, &k3);
                out.axpy(dt / 6.0, &k4)
            }
            Method::Rk2 => {
                let k1 = self.rhs(u);
                let k2 = self.rhs(&u.axpy(0.5 * dt, &k1));
                u.axpy(dt, &k2)
            }
        }
    }

    /// One step of size `cfg.dt`.
    pub fn step(&self, state: &EulerState) -> Result<EulerState> {
        self.step_by(state, self.cfg.dt)
    }

    fn step_by(&self, state: &EulerState, dt: f64) -> Result<EulerState> {
        let u = self.advance(&state.u, dt);
        let t = state.t + dt;
        if !u.is_finite() {
            return Err(Error::BlowUp {
                t,
                reason: "non-finite samples".into(),
            });
        }
        Ok(EulerState { t, u })
    }

    fn record(&self, state: &EulerState) -> StepRecord {
        let s = self.cfg.s_monitor;
        StepRecord {
            t: state.t,
            energy: energy(&state.u),
            hs_norm: state.u.sobolev_norm(s),
            div_drift: divergence(&state.u).sobolev_norm(s - 1.0),
        }
    }

    /// Integrate to `t_final` in equal steps no longer than `cfg.dt`. The
    /// initial field is first truncated to the 2/3-rule band.
    pub fn solve(&self, u0: &VectorField, t_final: f64) -> Result<Trajectory> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::param("T", format!("must be positive, got {t_final}")));
        }
        if *u0.grid() != *self.b.grid() {
            return Err(Error::GridMismatch);
        }
        let steps = ((t_final / self.cfg.dt) - 1e-9).ceil().max(1.0) as usize;
        let dt = t_final / steps as f64;
        let mut state = EulerState {
            t: 0.0,
            u: dealias_vec(u0),
        };
        let first = self.record(&state);
        let scale = first.hs_norm;
        let mut records = vec![first];
        let mut states = vec![state.clone()];
        let mut worst: f64 = 0.0;
        for i in 1..=steps {
            state = self.step_by(&state, dt)?;
            if i == steps {
                state.t = t_final;
            }
            let rec = self.record(&state);
            if scale > 0.0 && rec.hs_norm > self.cfg.growth_limit * scale {
                return Err(Error::BlowUp {
                    t: rec.t,
                    reason: format!("H^{} norm grew past {:e}x its initial value", self.cfg.s_monitor, self.cfg.growth_limit),
                });
            }
            if scale > 0.0 {
                worst = worst.max(rec.div_drift / scale);
            }
            records.push(rec);
            let keep = i == steps || (self.cfg.save_every > 0 && i % self.cfg.save_every == 0);
            if keep {
                states.push(EulerState {
                    t: state.t,
                    u: state.u.clone().without_cache(),
                });
            }
        }
        let budget_violation = if worst > self.cfg.drift_budget {
            log::warn!(
                "divergence drift {:.3e} exceeds budget {:.1e}",
                worst,
                self.cfg.drift_budget
            );
            Some(worst)
        } else {
            None
        };
        Ok(Trajectory {
            states,
            records,
            budget_violation,
            dt,
        })
    }

    /// `E_T(u₀)`: the state at `t_final` without keeping the history.
    pub fn evolve(&self, u0: &VectorField, t_final: f64) -> Result<VectorField> {
        let mut quiet = self.clone();
        quiet.cfg.save_every = 0;
        Ok(quiet.solve(u0, t_final)?.last().u.clone())
    }
}

/// `∇B(u) - (u·∇)u` with the unit cutoff.
pub fn rhs(u: &VectorField) -> VectorField {
    let b = BAssembly::unit(u.grid());
    let jac = jacobian(u);
    b.grad_b_with_jacobian(u, &jac)
        .axpy(-1.0, &advect_with_jacobian(u, &jac))
}

/// One step with a fresh solver.
pub fn step(state: &EulerState, cfg: &StepperConfig) -> Result<EulerState> {
    EulerSolver::new(state.u.grid(), cfg.clone())?.step(state)
}

/// Solve with a fresh solver.
pub fn solve(u0: &VectorField, t_final: f64, cfg: &StepperConfig) -> Result<Trajectory> {
    EulerSolver::new(u0.grid(), cfg.clone())?.solve(u0, t_final)
}

/// Predicted `∂_t div u` along the flow:
/// `χ(D)(2(u·∇)div u + (div u)²) - (u·∇)div u`, products dealiased.
pub fn div_evolution_residual(u: &VectorField, cutoff: f64) -> Result<ScalarField> {
    let grid = u.grid();
    let div = divergence(u);
    let grad_div = crate::calculus::gradient(&div);
    let mut transport = vec![0.0; grid.len()];
    for (a, c) in u.components().iter().enumerate() {
        for ((t, x), y) in transport.iter_mut().zip(c.samples()).zip(grad_div.component(a).samples()) {
            *t += x * y;
        }
    }
    let transport = ScalarField::from_spectrum(grid, dealiased_spectrum(grid, &transport));
    let sq: Vec<f64> = div.samples().iter().map(|v| v * v).collect();
    let sq = ScalarField::from_spectrum(grid, dealiased_spectrum(grid, &sq));
    let low = chi_cutoff(&transport.axpy(0.5, &sq).scale(2.0), cutoff)?;
    Ok(low.axpy(-1.0, &transport))
}

/// Box-averaged `L²` energy `L^{-n}∫|u|²`.
pub fn energy(u: &VectorField) -> f64 {
    u.sobolev_sq(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_div_free, random_vector, rng};
    use crate::Grid;

    fn tg(g: &Grid) -> VectorField {
        VectorField::from_fn(g, |x| {
            [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]
        })
    }

    #[test]
    fn taylor_green_is_stationary() {
        let g = Grid::standard(2, 32).unwrap();
        let u = tg(&g);
        assert!(rhs(&u).max_abs() < 1e-13);
        assert!((energy(&u) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rhs_is_quadratic() {
        let g = Grid::standard(2, 32).unwrap();
        let u = random_div_free(&g, 6, 2.0, 1.0, &mut rng(4)).unwrap();
        let a = rhs(&u.scale(3.0));
        let b = rhs(&u).scale(9.0);
        assert!((&a - &b).max_abs() < 1e-12 * b.max_abs());
        assert_eq!(rhs(&VectorField::zeros(&g)).max_abs(), 0.0);
    }

    #[test]
    fn residual_matches_divergence_of_rhs() {
        let g = Grid::standard(2, 32).unwrap();
        let u = dealias_vec(&random_vector(&g, 6, 2.0, &mut rng(5)).unwrap());
        let want = divergence(&rhs(&u));
        let got = div_evolution_residual(&u, 1.0).unwrap();
        assert!((&got - &want).max_abs() < 1e-12 * want.max_abs());
    }

    #[test]
    fn residual_vanishes_for_div_free() {
        let g = Grid::standard(2, 32).unwrap();
        let u = random_div_free(&g, 6, 2.0, 1.0, &mut rng(6)).unwrap();
        assert!(div_evolution_residual(&u, 1.0).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn step_rejects_bad_config_and_keeps_zero() {
        let g = Grid::standard(2, 16).unwrap();
        let bad = StepperConfig {
            dt: 0.0,
            ..Default::default()
        };
        let s = EulerState {
            t: 0.0,
            u: VectorField::zeros(&g),
        };
        assert!(step(&s, &bad).is_err());
        let next = step(&s, &StepperConfig::default()).unwrap();
        assert_eq!(next.u.max_abs(), 0.0);
        assert!((next.t - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn nan_reports_blow_up() {
        let g = Grid::standard(2, 16).unwrap();
        let mut u = tg(&g);
        u.components_mut()[0].samples_mut()[3] = f64::NAN;
        let s = EulerState { t: 0.0, u };
        assert!(matches!(step(&s, &StepperConfig::default()), Err(Error::BlowUp { .. })));
    }

    #[test]
    fn solve_saves_requested_states() {
        let g = Grid::standard(2, 16).unwrap();
        let cfg = StepperConfig {
            dt: 0.1,
            save_every: 3,
            ..Default::default()
        };
        let tr = solve(&tg(&g), 1.0, &cfg).unwrap();
        let times: Vec<f64> = tr.states.iter().map(|s| s.t).collect();
        assert_eq!(times.len(), 5);
        assert_eq!(*times.last().unwrap(), 1.0);
        assert_eq!(tr.records.len(), 11);
    }
}
