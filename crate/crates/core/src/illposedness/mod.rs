//! Separation experiments for the composition map and the Euler solution map,
//! plus the scaling identities of the solution map and the exponential map.

mod composition;
mod solution_map;

pub use composition::{composition_experiment, composition_experiment_with, CompositionConfig, Perturbation};
pub use solution_map::{solution_map_experiment, solution_map_experiment_with, SolutionMapConfig};

use crate::error::{Error, Result};
use crate::eulerian::{EulerSolver, StepperConfig};
use crate::field::VectorField;
use crate::lagrangian::Geodesic;
use crate::spectral::Sobolev;

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationRow {
    pub k: usize,
    pub input_gap: f64,
    pub output_gap: f64,
    /// Values for the series' `aux_names`, in order.
    pub aux: Vec<f64>,
    /// Free-form markers, empty when nothing noteworthy happened.
    pub flags: String,
}

/// Gap pairs indexed by `k`, with construction metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeparationSeries {
    pub name: String,
    pub aux_names: Vec<String>,
    pub rows: Vec<SeparationRow>,
    pub metadata: Vec<(String, String)>,
    /// First `k` that was requested but could not be resolved on the grid.
    pub truncated_at: Option<usize>,
    /// Smallest feature size of the series measured in grid cells.
    pub watermark: f64,
}

impl SeparationSeries {
    pub fn new(name: &str, aux_names: &[&str]) -> Self {
        SeparationSeries {
            name: name.to_string(),
            aux_names: aux_names.iter().map(|s| s.to_string()).collect(),
            watermark: f64::INFINITY,
            ..Default::default()
        }
    }

    /// Appends a row, enforcing increasing `k`, nonnegative gaps and a full
    /// set of auxiliary values.
    pub fn push(&mut self, row: SeparationRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.k <= last.k {
                return Err(Error::param("k", format!("{} does not follow {}", row.k, last.k)));
            }
        }
        if !(row.input_gap >= 0.0 && row.output_gap >= 0.0) {
            return Err(Error::param("gap", "gaps must be finite and nonnegative"));
        }
        if row.aux.len() != self.aux_names.len() {
            return Err(Error::param(
                "aux",
                format!("expected {} values, got {}", self.aux_names.len(), row.aux.len()),
            ));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.metadata.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.metadata.push((key.to_string(), value)),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn ks(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.k as f64).collect()
    }

    pub fn input_gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.input_gap).collect()
    }

    pub fn output_gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.output_gap).collect()
    }

    pub fn aux(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.aux_names.iter().position(|n| n == name)?;
        Some(self.rows.iter().map(|r| r.aux[i]).collect())
    }

    /// Least-squares slope of `log input_gap` against `log k`.
    pub fn input_slope(&self) -> f64 {
        loglog_slope(&self.ks(), &self.input_gaps())
    }

    pub fn output_slope(&self) -> f64 {
        loglog_slope(&self.ks(), &self.output_gaps())
    }

    pub fn min_output(&self) -> f64 {
        self.rows.iter().map(|r| r.output_gap).fold(f64::INFINITY, f64::min)
    }

    /// `(out/in)` at the last row divided by `(out/in)` at the first.
    pub fn ratio_growth(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => (b.output_gap / b.input_gap) / (a.output_gap / a.input_gap),
            _ => f64::NAN,
        }
    }
}

/// Least-squares slope of `log y` against `log x`. NaN with fewer than two
/// usable points.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn solver_with_dt(u0: &VectorField, cfg: &StepperConfig, dt: f64) -> Result<EulerSolver> {
    EulerSolver::new(
        u0.grid(),
        StepperConfig {
            dt,
            save_every: 0,
            ..cfg.clone()
        },
    )
}

/// Relative residual of `E_T(u₀) = E₁(T·u₀)/T` in `H^s`, `s = cfg.s_monitor`.
///
/// The time-1 run uses step `cfg.dt / T`, so both runs take the same number
/// of steps and the residual measures the identity rather than the time
/// discretization.
pub fn scaling_check(u0: &VectorField, t: f64, cfg: &StepperConfig) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::param("T", format!("must be positive, got {t}")));
    }
    if u0.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let s = cfg.s_monitor;
    let lhs = solver_with_dt(u0, cfg, cfg.dt)?.evolve(u0, t)?;
    let scaled = u0.scale(t);
    let rhs = solver_with_dt(u0, cfg, cfg.dt / t)?.evolve(&scaled, 1.0)?.scale(1.0 / t);
    let denom = lhs.sobolev_norm(s);
    if denom == 0.0 {
        return Ok((&lhs - &rhs).sobolev_norm(s));
    }
    Ok((&lhs - &rhs).sobolev_norm(s) / denom)
}

/// `‖E_T(u₀) − T·E₁(T·u₀)‖_s / ‖E_T(u₀)‖_s`, the identity with the factor
/// `T` on the other side. Kept to document that this form does not hold.
pub fn scaling_check_multiplicative(u0: &VectorField, t: f64, cfg: &StepperConfig) -> Result<f64> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::param("T", format!("must be positive, got {t}")));
    }
    if u0.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let s = cfg.s_monitor;
    let lhs = solver_with_dt(u0, cfg, cfg.dt)?.evolve(u0, t)?;
    let rhs = solver_with_dt(u0, cfg, cfg.dt / t)?.evolve(&u0.scale(t), 1.0)?.scale(t);
    Ok((&lhs - &rhs).sobolev_norm(s) / lhs.sobolev_norm(s))
}

/// Largest relative `H^s` mismatch between `w(t) = λ u(λt)` and the solution
/// started from `λu₀`, over the states kept every `save_every` steps on
/// `[0, T/λ]`.
pub fn trajectory_covariance(
    u0: &VectorField,
    t: f64,
    lambda: f64,
    save_every: usize,
    cfg: &StepperConfig,
) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", format!("must be positive, got {lambda}")));
    }
    let s = cfg.s_monitor;
    let base = EulerSolver::new(
        u0.grid(),
        StepperConfig {
            save_every,
            ..cfg.clone()
        },
    )?
    .solve(u0, t)?;
    let scaled = EulerSolver::new(
        u0.grid(),
        StepperConfig {
            dt: cfg.dt / lambda,
            save_every,
            ..cfg.clone()
        },
    )?
    .solve(&u0.scale(lambda), t / lambda)?;
    if base.states.len() != scaled.states.len() {
        return Err(Error::param("lambda", "runs kept different numbers of states"));
    }
    let mut worst: f64 = 0.0;
    for (a, b) in base.states.iter().zip(&scaled.states) {
        let w = a.u.scale(lambda);
        let denom = w.sobolev_norm(s);
        let gap = (&w - &b.u).sobolev_norm(s);
        worst = worst.max(if denom > 0.0 { gap / denom } else { gap });
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct DexpEstimate {
    /// Central difference at `ε`, as a displacement field.
    pub field: VectorField,
    /// Central difference at `ε/2`.
    pub half: VectorField,
    /// `‖D(ε) − D(ε/2)‖_∞ / ‖D(ε/2) − D(ε/4)‖_∞`; close to 4 when the
    /// truncation error dominates.
    pub richardson_ratio: f64,
    /// Set when the ratio is more than a factor 4 away from 4.
    pub roundoff_dominated: bool,
}

fn central_difference(geo: &Geodesic, u0: &VectorField, v: &VectorField, eps: f64) -> Result<VectorField> {
    let plus = geo.exp_map(&u0.axpy(eps, v), 1.0)?;
    let minus = geo.exp_map(&u0.axpy(-eps, v), 1.0)?;
    Ok((plus.displacement() - minus.displacement()).scale(0.5 / eps))
}

/// `(exp(u₀+εv) − exp(u₀−εv)) / 2ε` with a step-halving consistency check.
pub fn dexp_fd(geo: &Geodesic, u0: &VectorField, v: &VectorField, eps: f64) -> Result<DexpEstimate> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::param("eps", format!("must be positive, got {eps}")));
    }
    let d1 = central_difference(geo, u0, v, eps)?;
    let d2 = central_difference(geo, u0, v, 0.5 * eps)?;
    let d4 = central_difference(geo, u0, v, 0.25 * eps)?;
    let e1 = (&d1 - &d2).max_abs();
    let e2 = (&d2 - &d4).max_abs();
    let ratio = if e2 > 0.0 { e1 / e2 } else if e1 == 0.0 { 4.0 } else { f64::INFINITY };
    Ok(DexpEstimate {
        field: d1,
        half: d2,
        richardson_ratio: ratio,
        roundoff_dominated: !(1.0..=16.0).contains(&ratio),
    })
}
