//! Flows of time-dependent velocity fields and Lagrangian/Eulerian transfer.

use crate::error::{Error, Result};
use crate::eulerian::EulerState;
use crate::field::{MatrixField, ScalarField, VectorField};
use crate::grid::MAX_DIM;
use crate::lagrangian::diffeo::{compose_matrix, compose_vector, Diffeo, InversionConfig};
use crate::lagrangian::interp::{Interpolant, Interpolation};

/// Lagrange interpolation in time through up to four stored states.
fn velocity_at(states: &[EulerState], j: usize, t: f64) -> VectorField {
    let n = states.len();
    let width = n.min(4);
    let start = j.saturating_sub(1).min(n - width);
    let nodes = &states[start..start + width];
    let mut out: Option<VectorField> = None;
    for (a, sa) in nodes.iter().enumerate() {
        let mut w = 1.0;
        for (b, sb) in nodes.iter().enumerate() {
            if a != b {
                w *= (t - sb.t) / (sa.t - sb.t);
            }
        }
        out = Some(match out {
            None => sa.u.scale(w),
            Some(acc) => acc.axpy(w, &sa.u),
        });
    }
    out.expect("at least one node")
}

fn eval_at(its: &[Interpolant], x: &[f64; MAX_DIM], dim: usize) -> [f64; MAX_DIM] {
    let mut v = [0.0; MAX_DIM];
    for a in 0..dim {
        v[a] = its[a].eval(x);
    }
    v
}

fn interpolants(u: &VectorField, interp: Interpolation) -> Vec<Interpolant> {
    u.components().iter().map(|c| Interpolant::new(c, interp)).collect()
}

/// Integrate `∂_t φ = u(t)∘φ`, `φ(0) = id` along a stored trajectory with
/// RK4 between consecutive states; midpoint velocities come from cubic
/// Lagrange interpolation in time. Returns one map per stored state.
pub fn flow_of(states: &[EulerState], interp: Interpolation) -> Result<Vec<Diffeo>> {
    let first = states
        .first()
        .ok_or_else(|| Error::param("trajectory", "empty trajectory"))?;
    if states.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::param("trajectory", "times must be strictly increasing"));
    }
    let grid = first.u.grid().clone();
    let dim = grid.dim();
    let mut g: Vec<[f64; MAX_DIM]> = vec![[0.0; MAX_DIM]; grid.len()];
    let mut out = vec![Diffeo::identity(&grid)];
    let mut its_now = interpolants(&first.u, interp);
    for j in 0..states.len() - 1 {
        let (t0, t1) = (states[j].t, states[j + 1].t);
        let dt = t1 - t0;
        let its_mid = interpolants(&velocity_at(states, j, t0 + 0.5 * dt), interp);
        let its_next = interpolants(&states[j + 1].u, interp);
        for (p, gp) in g.iter_mut().enumerate() {
            let x = grid.point(p);
            let at = |k: &[f64; MAX_DIM], f: f64| {
                let mut y = x;
                for a in 0..dim {
                    y[a] += gp[a] + f * k[a];
                }
                y
            };
            let zero = [0.0; MAX_DIM];
            let k1 = eval_at(&its_now, &at(&zero, 0.0), dim);
            let k2 = eval_at(&its_mid, &at(&k1, 0.5 * dt), dim);
            let k3 = eval_at(&its_mid, &at(&k2, 0.5 * dt), dim);
            let k4 = eval_at(&its_next, &at(&k3, dt), dim);
            for a in 0..dim {
                gp[a] += dt / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
            }
        }
        let comps = (0..dim)
            .map(|a| ScalarField::from_samples(&grid, g.iter().map(|v| v[a]).collect()))
            .collect::<Result<Vec<_>>>()
            .map_err(|_| Error::BlowUp {
                t: t1,
                reason: "non-finite flow map".into(),
            })?;
        let phi = Diffeo::from_displacement_unchecked(VectorField::from_components(comps)?);
        let min_det = phi.min_det();
        if !(min_det > 0.0) {
            return Err(Error::LeftChart { t: t1, min_det });
        }
        out.push(phi);
        its_now = its_next;
    }
    Ok(out)
}

/// `u(t) = v(t)∘φ(t)⁻¹` for matched Lagrangian samples.
pub fn eulerian_from_lagrangian(
    phis: &[Diffeo],
    vs: &[VectorField],
    inversion: &InversionConfig,
) -> Result<Vec<VectorField>> {
    if phis.len() != vs.len() {
        return Err(Error::param("vs", "trajectories have different lengths"));
    }
    phis.iter()
        .zip(vs)
        .map(|(phi, v)| {
            let (psi, _) = phi.invert(inversion)?;
            compose_vector(v, &psi, inversion.interp)
        })
        .collect()
}

/// `dφᵀ (Ω∘φ) dφ`.
pub fn vorticity_pullback(phi: &Diffeo, omega: &MatrixField, interp: Interpolation) -> Result<MatrixField> {
    let moved = compose_matrix(omega, phi, interp)?;
    let dphi = phi.differential();
    let d = phi.grid().dim();
    Ok(MatrixField::from_pointwise(phi.grid(), |p| {
        let j = dphi.at(p);
        let w = moved.at(p);
        let mut out = [[0.0; MAX_DIM]; MAX_DIM];
        for a in 0..d {
            for b in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        acc += j[k][a] * w[k][l] * j[l][b];
                    }
                }
                out[a][b] = acc;
            }
        }
        out
    }))
}

/// Largest periodic distance from `center` to a grid point where some entry of
/// `m` exceeds `rel_tol` times the global maximum.
pub fn support_radius(m: &MatrixField, center: &[f64], rel_tol: f64) -> f64 {
    let grid = m.grid();
    let l = grid.length();
    let cut = rel_tol * m.max_abs();
    let mut r: f64 = 0.0;
    for p in 0..grid.len() {
        let w = m.at(p);
        let big = w.iter().flatten().any(|v| v.abs() > cut);
        if big {
            let x = grid.point(p);
            let mut q = 0.0;
            for (a, c) in center.iter().enumerate() {
                let mut z = x[a] - c;
                z -= l * (z / l).round();
                q += z * z;
            }
            r = r.max(q.sqrt());
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Grid;

    #[test]
    fn zero_and_uniform_fields() {
        let g = Grid::standard(2, 16).unwrap();
        let c = [0.2, -0.5];
        let states: Vec<EulerState> = (0..5)
            .map(|i| EulerState {
                t: i as f64 * 0.25,
                u: VectorField::constant(&g, &c),
            })
            .collect();
        let phis = flow_of(&states, Interpolation::CubicSpline).unwrap();
        let d = phis.last().unwrap().displacement();
        assert!((d.component(0).samples()[7] - 0.2).abs() < 1e-13);
        assert!((d.component(1).samples()[7] + 0.5).abs() < 1e-13);
        let zeros: Vec<EulerState> = states
            .iter()
            .map(|s| EulerState {
                t: s.t,
                u: VectorField::zeros(&g),
            })
            .collect();
        let phis = flow_of(&zeros, Interpolation::CubicSpline).unwrap();
        assert_eq!(phis.last().unwrap().displacement().max_abs(), 0.0);
    }

    #[test]
    fn pullback_by_identity() {
        let g = Grid::standard(2, 16).unwrap();
        let w = ScalarField::from_fn(&g, |x| x[0].sin() * x[1].cos());
        let om = MatrixField::skew_from_upper(&g, vec![w]).unwrap();
        let back = vorticity_pullback(&Diffeo::identity(&g), &om, Interpolation::CubicSpline).unwrap();
        assert!((&back - &om).max_abs() < 1e-14);
    }

    #[test]
    fn unsorted_trajectory_rejected() {
        let g = Grid::standard(2, 16).unwrap();
        let s = |t| EulerState {
            t,
            u: VectorField::zeros(&g),
        };
        assert!(flow_of(&[s(0.0), s(0.5), s(0.4)], Interpolation::CubicSpline).is_err());
    }
}
