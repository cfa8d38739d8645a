//! The geodesic system `∂_t(φ, v) = (v, Γ_φ(v, v))` and the exponential map.

use crate::bform::BAssembly;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::Grid;
use crate::lagrangian::diffeo::{compose_vector, Diffeo, InversionConfig};
use crate::lagrangian::interp::Interpolation;
use crate::spectral::dealias_vec;

#[derive(Clone, Debug)]
pub struct GeodesicState {
    pub t: f64,
    pub phi: Diffeo,
    /// Lagrangian velocity `∂_t φ`.
    pub v: VectorField,
}

impl GeodesicState {
    /// `(id, u₀)` at `t = 0`.
    pub fn start(u0: &VectorField) -> Self {
        GeodesicState {
            t: 0.0,
            phi: Diffeo::identity(u0.grid()),
            v: u0.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeodesicConfig {
    pub interp: Interpolation,
    pub inversion: InversionConfig,
    pub cutoff: f64,
    /// Largest particle displacement per step used by [`Geodesic::exp_map`]:
    /// the step count is `ceil(t · max|u₀| / max_step_displacement)`.
    pub max_step_displacement: f64,
    pub min_steps: usize,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig {
            interp: Interpolation::CubicSpline,
            inversion: InversionConfig::default(),
            cutoff: 1.0,
            max_step_displacement: 1e-2,
            min_steps: 1,
        }
    }
}

impl GeodesicConfig {
    /// Same interpolation for composition and inversion.
    pub fn with_interp(interp: Interpolation) -> Self {
        GeodesicConfig {
            interp,
            inversion: InversionConfig {
                interp,
                ..Default::default()
            },
            ..Default::default()
        }
    }
}

/// Geodesic integrator bound to one grid.
#[derive(Clone, Debug)]
pub struct Geodesic {
    b: BAssembly,
    cfg: GeodesicConfig,
}

impl Geodesic {
    pub fn new(grid: &Grid, cfg: GeodesicConfig) -> Result<Self> {
        if !(cfg.max_step_displacement.is_finite() && cfg.max_step_displacement > 0.0) {
            return Err(Error::param("max_step_displacement", "must be positive"));
        }
        Ok(Geodesic {
            b: BAssembly::new(grid, cfg.cutoff)?,
            cfg,
        })
    }

    pub fn config(&self) -> &GeodesicConfig {
        &self.cfg
    }

    /// `Γ_φ(v, v) = (∇B(v∘φ⁻¹))∘φ`. The Eulerian velocity is truncated to the
    /// 2/3-rule band before `∇B`, matching the Eulerian solver.
    pub fn christoffel(&self, phi: &Diffeo, v: &VectorField) -> Result<VectorField> {
        let (psi, _) = phi.invert(&self.cfg.inversion)?;
        let u = dealias_vec(&compose_vector(v, &psi, self.cfg.interp)?);
        let gb = self.b.grad_b(&u)?;
        compose_vector(&gb, phi, self.cfg.interp)
    }

    /// One classical RK4 step on `(g, v)`.
    pub fn step(&self, state: &GeodesicState, dt: f64) -> Result<GeodesicState> {
        let g = state.phi.displacement();
        let v = &state.v;
        let stage = |gs: VectorField, vs: &VectorField| -> Result<VectorField> {
            self.christoffel(&Diffeo::from_displacement_unchecked(gs), vs)
        };
        let a1 = self.christoffel(&state.phi, v)?;
        let v2 = v.axpy(0.5 * dt, &a1);
        let a2 = stage(g.axpy(0.5 * dt, v), &v2)?;
        let v3 = v.axpy(0.5 * dt, &a2);
        let a3 = stage(g.axpy(0.5 * dt, &v2), &v3)?;
        let v4 = v.axpy(dt, &a3);
        let a4 = stage(g.axpy(dt, &v3), &v4)?;
        let g_new = g
            .axpy(dt / 6.0, v)
            .axpy(dt / 3.0, &v2)
            .axpy(dt / 3.0, &v3)
            .axpy(dt / 6.0, &v4);
        let v_new = v
            .axpy(dt / 6.0, &a1)
            .axpy(dt / 3.0, &a2)
            .axpy(dt / 3.0, &a3)
            .axpy(dt / 6.0, &a4);
        let t = state.t + dt;
        if !(g_new.is_finite() && v_new.is_finite()) {
            return Err(Error::BlowUp {
                t,
                reason: "non-finite geodesic state".into(),
            });
        }
        let phi = Diffeo::from_displacement_unchecked(g_new);
        let min_det = phi.min_det();
        if !(min_det > 0.0) {
            return Err(Error::LeftChart { t, min_det });
        }
        Ok(GeodesicState { t, phi, v: v_new })
    }

    /// Integrate from `(id, u₀)` to `t` in `steps` equal steps, keeping every
    /// `save_every`-th state (0 keeps only the endpoints).
    pub fn integrate(
        &self,
        u0: &VectorField,
        t: f64,
        steps: usize,
        save_every: usize,
    ) -> Result<Vec<GeodesicState>> {
        if steps == 0 {
            return Err(Error::param("steps", "need at least one step"));
        }
        let dt = t / steps as f64;
        let mut state = GeodesicState::start(&dealias_vec(u0));
        let mut out = vec![state.clone()];
        for i in 1..=steps {
            state = self.step(&state, dt)?;
            if i == steps {
                state.t = t;
            }
            if i == steps || (save_every > 0 && i % save_every == 0) {
                out.push(state.clone());
            }
        }
        Ok(out)
    }

    /// Number of steps [`Geodesic::exp_map`] takes for `(u₀, t)`. Depends on
    /// `t·max|u₀|` only, so `(λu₀, t/λ)` uses the same count.
    pub fn steps_for(&self, u0: &VectorField, t: f64) -> usize {
        let travel = t * u0.max_norm();
        ((travel / self.cfg.max_step_displacement).ceil() as usize).max(self.cfg.min_steps).max(1)
    }

    /// `φ(t; u₀)`, the time-`t` geodesic from the identity.
    pub fn exp_map(&self, u0: &VectorField, t: f64) -> Result<Diffeo> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::param("t", format!("must be non-negative, got {t}")));
        }
        if t == 0.0 || u0.max_abs() == 0.0 {
            return Ok(Diffeo::identity(u0.grid()));
        }
        let steps = self.steps_for(u0, t);
        let mut states = self.integrate(u0, t, steps, 0)?;
        Ok(states.pop().expect("integrate returns the final state").phi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_div_free, rng};

    #[test]
    fn christoffel_trivial_cases() {
        let g = Grid::standard(2, 32).unwrap();
        let geo = Geodesic::new(&g, GeodesicConfig::default()).unwrap();
        let v = random_div_free(&g, 5, 2.0, 0.5, &mut rng(1)).unwrap();
        let id = Diffeo::identity(&g);
        let got = geo.christoffel(&id, &v).unwrap();
        let want = BAssembly::unit(&g).grad_b(&v).unwrap();
        assert!((&got - &want).max_abs() < 1e-12);
        assert_eq!(geo.christoffel(&id, &VectorField::zeros(&g)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn zero_velocity_stays_put() {
        let g = Grid::standard(2, 16).unwrap();
        let geo = Geodesic::new(&g, GeodesicConfig::default()).unwrap();
        let s = GeodesicState::start(&VectorField::zeros(&g));
        let n = geo.step(&s, 0.1).unwrap();
        assert_eq!(n.phi.displacement().max_abs(), 0.0);
        assert_eq!(geo.exp_map(&VectorField::zeros(&g), 1.0).unwrap().displacement().max_abs(), 0.0);
    }

    #[test]
    fn uniform_velocity_translates() {
        let g = Grid::standard(2, 16).unwrap();
        let geo = Geodesic::new(&g, GeodesicConfig::default()).unwrap();
        let c = VectorField::constant(&g, &[0.3, -0.1]);
        let phi = geo.exp_map(&c, 2.0).unwrap();
        let d = phi.displacement();
        assert!((d.component(0).samples()[3] - 0.6).abs() < 1e-12);
        assert!((d.component(1).samples()[3] + 0.2).abs() < 1e-12);
    }
}
