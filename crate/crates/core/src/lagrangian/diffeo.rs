//! Diffeomorphisms of the torus stored as periodic displacements.

use crate::calculus::{det_identity_plus, jacobian};
use crate::error::{Error, Result};
use crate::field::{MatrixField, ScalarField, VectorField};
use crate::grid::{Grid, MAX_DIM};
use crate::lagrangian::interp::{Interpolant, Interpolation};
use crate::spectral::Sobolev;

/// `φ(x) = x + g(x)` with `g` periodic.
#[derive(Clone, Debug)]
pub struct Diffeo {
    disp: VectorField,
}

/// Settings for [`Diffeo::invert`].
#[derive(Clone, Copy, Debug)]
pub struct InversionConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub interp: Interpolation,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            tol: 1e-10,
            max_iter: 100,
            interp: Interpolation::CubicSpline,
        }
    }
}

/// Outcome of an inversion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InversionReport {
    /// Largest iteration count over all grid points.
    pub iterations: usize,
    /// Points that needed Newton steps.
    pub newton_points: usize,
    /// `max |φ(ψ(x)) - x|`, evaluated with the interpolant of `g`.
    pub residual: f64,
}

impl Diffeo {
    pub fn identity(grid: &Grid) -> Self {
        Diffeo {
            disp: VectorField::zeros(grid),
        }
    }

    /// Wrap a displacement. Rejects fields with a non-positive Jacobian
    /// determinant anywhere on the grid.
    pub fn from_displacement(g: VectorField) -> Result<Self> {
        let d = Diffeo { disp: g };
        let m = d.min_det();
        if !(m > 0.0) {
            return Err(Error::LeftChart { t: 0.0, min_det: m });
        }
        Ok(d)
    }

    /// Wrap without the determinant check (used inside integrators, which
    /// perform their own check).
    pub(crate) fn from_displacement_unchecked(g: VectorField) -> Self {
        Diffeo { disp: g }
    }

    /// Rigid translation `x ↦ x + a`.
    pub fn shift(grid: &Grid, a: &[f64]) -> Self {
        Diffeo {
            disp: VectorField::constant(grid, a),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.disp.grid()
    }

    pub fn displacement(&self) -> &VectorField {
        &self.disp
    }

    pub fn into_displacement(self) -> VectorField {
        self.disp
    }

    /// Image points `x + g(x)` of the grid.
    pub fn points(&self) -> Vec<[f64; MAX_DIM]> {
        let grid = self.grid();
        (0..grid.len())
            .map(|p| {
                let mut x = grid.point(p);
                let g = self.disp.at(p);
                for a in 0..grid.dim() {
                    x[a] += g[a];
                }
                x
            })
            .collect()
    }

    /// `det(I + dg)` at every grid point.
    pub fn det_jacobian(&self) -> ScalarField {
        det_identity_plus(&jacobian(&self.disp))
    }

    pub fn min_det(&self) -> f64 {
        self.det_jacobian()
            .samples()
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v))
    }

    /// `dφ = I + dg`, entry `(i, j) = ∂_j φ_i`.
    pub fn differential(&self) -> MatrixField {
        let mut j = jacobian(&self.disp);
        let grid = self.grid().clone();
        for a in 0..grid.dim() {
            let e = j.get(a, a).map(|v| v + 1.0);
            j.set(a, a, e);
        }
        j
    }

    /// `‖g‖_s`.
    pub fn distance_from_identity(&self, s: f64) -> f64 {
        self.disp.sobolev_norm(s)
    }

    /// Composition `self ∘ other`.
    pub fn compose_with(&self, other: &Diffeo, interp: Interpolation) -> Result<Diffeo> {
        let inner = compose_vector(&self.disp, other, interp)?;
        Ok(Diffeo {
            disp: &other.disp + &inner,
        })
    }

    /// Inverse map `ψ` with `φ∘ψ = id` to `cfg.tol` at every grid point.
    ///
    /// Starts from `y = x - g(x)`, iterates `y ← x - g(y)` and switches a point
    /// to Newton steps with `dφ(y)` once the fixed-point residual stops
    /// shrinking.
    pub fn invert(&self, cfg: &InversionConfig) -> Result<(Diffeo, InversionReport)> {
        let grid = self.grid().clone();
        let dim = grid.dim();
        let its: Vec<Interpolant> = self
            .disp
            .components()
            .iter()
            .map(|c| Interpolant::new(c, cfg.interp))
            .collect();
        let mut out: Vec<Vec<f64>> = vec![vec![0.0; grid.len()]; dim];
        let mut report = InversionReport {
            iterations: 0,
            newton_points: 0,
            residual: 0.0,
        };
        for p in 0..grid.len() {
            let x = grid.point(p);
            let g0 = self.disp.at(p);
            let mut y = [0.0; MAX_DIM];
            for a in 0..dim {
                y[a] = x[a] - g0[a];
            }
            let mut newton = false;
            let mut prev = f64::INFINITY;
            let mut done = false;
            let mut res = f64::INFINITY;
            let mut iter = 0;
            while iter < cfg.max_iter {
                iter += 1;
                let mut r = [0.0; MAX_DIM];
                let mut jac = [[0.0; MAX_DIM]; MAX_DIM];
                for a in 0..dim {
                    let (v, gr) = if newton {
                        its[a].eval_grad(&y)
                    } else {
                        (its[a].eval(&y), [0.0; MAX_DIM])
                    };
                    r[a] = y[a] + v - x[a];
                    if newton {
                        for b in 0..dim {
                            jac[a][b] = gr[b] + if a == b { 1.0 } else { 0.0 };
                        }
                    }
                }
                res = r[..dim].iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if res <= cfg.tol {
                    done = true;
                    break;
                }
                if !newton && res > 0.5 * prev {
                    newton = true;
                    prev = res;
                    continue;
                }
                prev = res;
                if newton {
                    let delta = solve_small(&jac, &r, dim).ok_or(Error::Inversion {
                        iterations: iter,
                        residual: res,
                    })?;
                    for a in 0..dim {
                        y[a] -= delta[a];
                    }
                } else {
                    for a in 0..dim {
                        y[a] -= r[a];
                    }
                }
            }
            if !done {
                return Err(Error::Inversion {
                    iterations: iter,
                    residual: res,
                });
            }
            report.iterations = report.iterations.max(iter);
            report.residual = report.residual.max(res);
            if newton {
                report.newton_points += 1;
            }
            for a in 0..dim {
                out[a][p] = y[a] - x[a];
            }
        }
        let comps = out
            .into_iter()
            .map(|s| ScalarField::from_samples(&grid, s))
            .collect::<Result<Vec<_>>>()?;
        Ok((
            Diffeo {
                disp: VectorField::from_components(comps)?,
            },
            report,
        ))
    }

    /// `max |ψ(φ(x)) - x|` with `ψ` interpolated; a diagnostic for the left
    /// inverse, which carries the interpolation error of `ψ`.
    pub fn left_inverse_residual(&self, inverse: &Diffeo, interp: Interpolation) -> Result<f64> {
        let back = inverse.compose_with(self, interp)?;
        Ok(back.disp.max_abs())
    }
}

fn solve_small(m: &[[f64; MAX_DIM]; MAX_DIM], r: &[f64; MAX_DIM], dim: usize) -> Option<[f64; MAX_DIM]> {
    let mut out = [0.0; MAX_DIM];
    if dim == 2 {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        out[0] = (m[1][1] * r[0] - m[0][1] * r[1]) / det;
        out[1] = (m[0][0] * r[1] - m[1][0] * r[0]) / det;
    } else {
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        if det.abs() < 1e-300 {
            return None;
        }
        for c in 0..3 {
            let mut a = *m;
            for row in 0..3 {
                a[row][c] = r[row];
            }
            let d = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
            out[c] = d / det;
        }
    }
    Some(out)
}

fn check_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `f ∘ φ` sampled on the grid.
pub fn compose_scalar(f: &ScalarField, phi: &Diffeo, interp: Interpolation) -> Result<ScalarField> {
    check_grid(f.grid(), phi.grid())?;
    let it = Interpolant::new(f, interp);
    let pts = phi.points();
    ScalarField::from_samples(f.grid(), it.sample(&pts))
}

/// Componentwise `u ∘ φ`.
pub fn compose_vector(u: &VectorField, phi: &Diffeo, interp: Interpolation) -> Result<VectorField> {
    check_grid(u.grid(), phi.grid())?;
    let pts = phi.points();
    let comps = u
        .components()
        .iter()
        .map(|c| ScalarField::from_samples(u.grid(), Interpolant::new(c, interp).sample(&pts)))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(comps)
}

/// Entrywise `Ω ∘ φ`.
pub fn compose_matrix(m: &MatrixField, phi: &Diffeo, interp: Interpolation) -> Result<MatrixField> {
    check_grid(m.grid(), phi.grid())?;
    let pts = phi.points();
    let entries = m
        .entries()
        .iter()
        .map(|c| ScalarField::from_samples(m.grid(), Interpolant::new(c, interp).sample(&pts)))
        .collect::<Result<Vec<_>>>()?;
    MatrixField::from_entries(m.dim(), entries)
}

/// Sample an analytic function at `φ(x)`.
pub fn sample_at(phi: &Diffeo, f: impl Fn(&[f64]) -> f64) -> ScalarField {
    let dim = phi.grid().dim();
    let samples = phi.points().iter().map(|p| f(&p[..dim])).collect();
    ScalarField::from_raw(phi.grid().clone(), samples)
}

/// `‖f∘φ - f∘ψ‖_{s-1} / (‖f‖_s ‖φ - ψ‖_{s-1})`, the quantity bounded by the
/// composition Lipschitz estimate.
pub fn lipschitz_ratio(
    f: &ScalarField,
    phi: &Diffeo,
    psi: &Diffeo,
    s: f64,
    interp: Interpolation,
) -> Result<f64> {
    let a = compose_scalar(f, phi, interp)?;
    let b = compose_scalar(f, psi, interp)?;
    let num = (&a - &b).sobolev_norm(s - 1.0);
    let den = f.sobolev_norm(s) * (phi.displacement() - psi.displacement()).sobolev_norm(s - 1.0);
    if den == 0.0 {
        return Err(Error::param("psi", "maps coincide or f vanishes"));
    }
    Ok(num / den)
}
