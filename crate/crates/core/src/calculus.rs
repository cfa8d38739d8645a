//! Differential operators on vector and matrix fields.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{MatrixField, ScalarField, VectorField};
use crate::grid::Grid;
use crate::spectral::{dealias_spectrum, derivative_spectrum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn deriv(f: &ScalarField, axis: usize) -> ScalarField {
    ScalarField::from_hermitian_spectrum(f.grid(), derivative_spectrum(f.grid(), f.spectrum(), axis))
}

/// `Σ_k ∂_k u_k`.
pub fn divergence(u: &VectorField) -> ScalarField {
    let grid = u.grid();
    let mut acc = vec![ZERO; grid.len()];
    for (k, c) in u.components().iter().enumerate() {
        for (a, d) in acc.iter_mut().zip(derivative_spectrum(grid, c.spectrum(), k)) {
            *a += d;
        }
    }
    ScalarField::from_hermitian_spectrum(grid, acc)
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let comps = (0..f.grid().dim()).map(|a| deriv(f, a)).collect();
    VectorField::from_components(comps).expect("components share the grid")
}

/// Entry `(i, j)` is `∂_j u_i`.
pub fn jacobian(u: &VectorField) -> MatrixField {
    let d = u.dim();
    let mut entries = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            entries.push(deriv(u.component(i), j));
        }
    }
    MatrixField::from_entries(d, entries).expect("square by construction")
}

/// Spectral Laplacian.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let xi_sq = f.grid().xi_sq();
    let mut spec = f.spectrum().to_vec();
    f.grid().for_each_mode(|flat, _, nyq| {
        spec[flat] = if nyq { ZERO } else { spec[flat] * -xi_sq[flat] };
    });
    ScalarField::from_hermitian_spectrum(f.grid(), spec)
}

/// Forward transform of real-space samples followed by 2/3-rule truncation.
pub(crate) fn dealiased_spectrum(grid: &Grid, samples: &[f64]) -> Vec<Complex64> {
    let mut spec = grid.forward(samples);
    dealias_spectrum(grid, &mut spec);
    spec
}

/// `(u·∇)u` with every product dealiased.
pub fn advect(u: &VectorField) -> VectorField {
    let jac = jacobian(u);
    advect_with_jacobian(u, &jac)
}

pub(crate) fn advect_with_jacobian(u: &VectorField, jac: &MatrixField) -> VectorField {
    let grid = u.grid();
    let d = u.dim();
    let comps = (0..d)
        .map(|i| {
            let mut acc = vec![0.0; grid.len()];
            for k in 0..d {
                let uk = u.component(k).samples();
                let du = jac.get(i, k).samples();
                for ((a, x), y) in acc.iter_mut().zip(uk).zip(du) {
                    *a += x * y;
                }
            }
            ScalarField::from_hermitian_spectrum(grid, dealiased_spectrum(grid, &acc))
        })
        .collect();
    VectorField::from_components(comps).expect("components share the grid")
}

/// Leray projector `I - ξξᵀ/|ξ|²` applied mode by mode; the mean is kept and
/// modes touching a Nyquist index are dropped.
pub fn leray_project(u: &VectorField) -> VectorField {
    let grid = u.grid();
    let d = u.dim();
    let unit = grid.xi_unit();
    let specs: Vec<&[Complex64]> = u.components().iter().map(|c| c.spectrum()).collect();
    let mut out = vec![vec![ZERO; grid.len()]; d];
    grid.for_each_mode(|flat, k, nyq| {
        if nyq {
            return;
        }
        let q: i64 = k[..d].iter().map(|c| c * c).sum();
        if q == 0 {
            for a in 0..d {
                out[a][flat] = specs[a][flat];
            }
            return;
        }
        let mut dot = ZERO;
        for a in 0..d {
            dot += specs[a][flat] * (k[a] as f64 * unit);
        }
        let inv = 1.0 / (q as f64 * unit * unit);
        for a in 0..d {
            out[a][flat] = specs[a][flat] - dot * (k[a] as f64 * unit * inv);
        }
    });
    let comps = out
        .into_iter()
        .map(|s| ScalarField::from_hermitian_spectrum(grid, s))
        .collect();
    VectorField::from_components(comps).expect("components share the grid")
}

/// `Ω_ij = ∂_j u_i - ∂_i u_j`.
pub fn vorticity(u: &VectorField) -> MatrixField {
    let jac = jacobian(u);
    vorticity_from_jacobian(&jac)
}

pub(crate) fn vorticity_from_jacobian(jac: &MatrixField) -> MatrixField {
    let t = jac.transpose();
    jac - &t
}

/// Relative tolerance for skew-symmetry and zero-mean checks.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Mean-free, divergence-free velocity whose vorticity is `omega`.
pub fn biot_savart(omega: &MatrixField) -> Result<VectorField> {
    let asym = omega.skew_defect();
    if asym > STRUCTURE_TOL {
        return Err(Error::NotSkew { asymmetry: asym });
    }
    let scale = omega.max_abs();
    if scale > 0.0 {
        let worst = omega
            .entries()
            .iter()
            .map(|e| e.mean().abs())
            .fold(0.0, f64::max);
        if worst > STRUCTURE_TOL * scale {
            return Err(Error::NonZeroMean { mean: worst / scale });
        }
    }
    let grid = omega.grid();
    let d = omega.dim();
    let unit = grid.xi_unit();
    let mut out = vec![vec![ZERO; grid.len()]; d];
    for (l, row) in out.iter_mut().enumerate() {
        for j in 0..d {
            if j == l {
                continue;
            }
            let spec = omega.get(l, j).spectrum();
            grid.for_each_mode(|flat, k, nyq| {
                let q: i64 = k[..d].iter().map(|c| c * c).sum();
                if nyq || q == 0 {
                    return;
                }
                // (1/i) c ξ_j / |ξ|² = -i c ξ_j / |ξ|²
                let w = k[j] as f64 / (q as f64 * unit);
                let c = spec[flat];
                row[flat] += Complex64::new(c.im * w, -c.re * w);
            });
        }
    }
    let comps = out
        .into_iter()
        .map(|s| ScalarField::from_hermitian_spectrum(grid, s))
        .collect();
    VectorField::from_components(comps)
}

/// Pointwise `dim × dim` determinant of `I + dg`.
pub(crate) fn det_identity_plus(jac: &MatrixField) -> ScalarField {
    let grid = jac.grid();
    let d = jac.dim();
    let samples = (0..grid.len())
        .map(|p| {
            let m = jac.at(p);
            if d == 2 {
                (1.0 + m[0][0]) * (1.0 + m[1][1]) - m[0][1] * m[1][0]
            } else {
                let a = [
                    [1.0 + m[0][0], m[0][1], m[0][2]],
                    [m[1][0], 1.0 + m[1][1], m[1][2]],
                    [m[2][0], m[2][1], 1.0 + m[2][2]],
                ];
                a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                    - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                    + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
            }
        })
        .collect();
    ScalarField::from_raw(grid.clone(), samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Sobolev;
    use std::f64::consts::PI;

    fn tg(g: &Grid) -> VectorField {
        VectorField::from_fn(g, |x| {
            [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]
        })
    }

    #[test]
    fn divergence_examples() {
        let g = Grid::standard(2, 16).unwrap();
        let a = VectorField::from_fn(&g, |x| [x[1].sin(), 0.0, 0.0]);
        assert!(divergence(&a).max_abs() < 1e-14);
        let b = VectorField::from_fn(&g, |x| [x[0].sin(), 0.0, 0.0]);
        let want = ScalarField::from_fn(&g, |x| x[0].cos());
        assert!((&divergence(&b) - &want).max_abs() < 1e-13);
        assert!(divergence(&tg(&g)).max_abs() < 1e-13);
    }

    #[test]
    fn jacobian_entries() {
        let g = Grid::standard(2, 16).unwrap();
        let u = VectorField::from_fn(&g, |x| [0.3, x[0].sin(), 0.0]);
        let j = jacobian(&u);
        let want = ScalarField::from_fn(&g, |x| x[0].cos());
        assert!((j.get(1, 0) - &want).max_abs() < 1e-13);
        assert!(j.get(0, 0).max_abs() < 1e-14);
        assert!(jacobian(&VectorField::constant(&g, &[1.0, 2.0])).max_abs() < 1e-14);
    }

    #[test]
    fn taylor_green_advection_and_vorticity() {
        let g = Grid::standard(2, 16).unwrap();
        let u = tg(&g);
        // (u·∇)u = (sin 2x₁, sin 2x₂)/2 for this field.
        let adv = advect(&u);
        let want = VectorField::from_fn(&g, |x| {
            [0.5 * (2.0 * x[0]).sin(), 0.5 * (2.0 * x[1]).sin(), 0.0]
        });
        assert!((&adv - &want).max_abs() < 1e-13);
        let om = vorticity(&u);
        let want = ScalarField::from_fn(&g, |x| -2.0 * x[0].sin() * x[1].sin());
        assert!((om.get(0, 1) - &want).max_abs() < 1e-13);
        assert_eq!(om.skew_defect(), 0.0);
    }

    #[test]
    fn biot_savart_rejects_bad_input() {
        let g = Grid::standard(2, 16).unwrap();
        let mut m = MatrixField::zeros(&g);
        m.set(0, 1, ScalarField::from_fn(&g, |x| x[0].sin()));
        assert!(matches!(biot_savart(&m), Err(Error::NotSkew { .. })));
        let c = ScalarField::constant(&g, 1.0);
        let m = MatrixField::skew_from_upper(&g, vec![c]).unwrap();
        assert!(matches!(biot_savart(&m), Err(Error::NonZeroMean { .. })));
        assert!(biot_savart(&MatrixField::zeros(&g)).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn biot_savart_inverts_taylor_green() {
        let g = Grid::standard(2, 32).unwrap();
        let u = tg(&g);
        let back = biot_savart(&vorticity(&u)).unwrap();
        assert!((&back - &u).sobolev_norm(2.0) / u.sobolev_norm(2.0) < 1e-12);
    }

    #[test]
    fn leray_examples() {
        let g = Grid::standard(2, 16).unwrap();
        let u = tg(&g);
        assert!((&leray_project(&u) - &u).max_abs() < 1e-14);
        let f = ScalarField::from_fn(&g, |x| (x[0] + 2.0 * x[1]).sin() + x[1].cos());
        assert!(leray_project(&gradient(&f)).max_abs() < 1e-14);
    }

    // Real-space kernel on ℝ² as a rough cross-check of the spectral inversion
    // for a vortex patch that is small relative to the box.
    #[test]
    fn biot_savart_matches_kernel_quadrature() {
        let n = 128;
        let l = 8.0 * PI;
        let g = Grid::new(2, n, l).unwrap();
        let c = l / 2.0;
        let r = 4.0;
        let psi = ScalarField::from_fn(&g, |x| {
            let q = ((x[0] - c).powi(2) + (x[1] - c).powi(2)) / (r * r);
            if q < 1.0 { (-1.0 / (1.0 - q)).exp() } else { 0.0 }
        });
        let lap = laplacian(&psi);
        // u = ∇⊥ψ, scalar vorticity ∂₁u₂ - ∂₂u₁ = Δψ, Ω₁₂ = -Δψ.
        let om = MatrixField::skew_from_upper(&g, vec![lap.scale(-1.0)]).unwrap();
        let u = biot_savart(&om).unwrap();
        let h = g.spacing();
        let w = lap.samples();
        let probe = |x: [f64; 2]| {
            let mut v = [0.0; 2];
            for p in 0..g.len() {
                if w[p] == 0.0 {
                    continue;
                }
                let y = g.point(p);
                let dz = [x[0] - y[0], x[1] - y[1]];
                let r2 = dz[0] * dz[0] + dz[1] * dz[1];
                if r2 < 1e-12 {
                    continue;
                }
                let k = w[p] * h * h / (2.0 * PI * r2);
                v[0] -= k * dz[1];
                v[1] += k * dz[0];
            }
            v
        };
        let idx = g.flat_index(&[n / 2 + 9, n / 2 + 3]);
        let x = g.point(idx);
        let v = probe([x[0], x[1]]);
        let got = u.at(idx);
        let scale = v[0].hypot(v[1]);
        assert!(scale > 1e-3);
        assert!((got[0] - v[0]).hypot(got[1] - v[1]) < 0.05 * scale);
    }
}
