//! The quadratic form `B = B₁ + B₂` that stands in for the pressure.
//!
//! `B₁(u) = Σ χ(D)Δ⁻¹∂_i∂_k(u_i u_k)` keeps the low modes and `B₂(u) =
//! Σ Δ⁻¹(1-χ(D))(∂_i u_k ∂_k u_i)` the high ones. On divergence-free fields
//! `∇B = -∇p`.

use num_complex::Complex64;

use crate::calculus::{advect, dealiased_spectrum, divergence, jacobian};
use crate::error::{Error, Result};
use crate::field::{MatrixField, ScalarField, VectorField};
use crate::grid::Grid;
use crate::spectral::{derivative_spectrum, inside, Sobolev};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative divergence above which [`BAssembly::pressure_from`] warns.
pub const PRESSURE_DIV_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct BAssembly {
    grid: Grid,
    cutoff: f64,
}

impl BAssembly {
    pub fn new(grid: &Grid, cutoff: f64) -> Result<Self> {
        if !(cutoff.is_finite() && cutoff > 0.0) {
            return Err(Error::param("cutoff", format!("must be positive, got {cutoff}")));
        }
        Ok(BAssembly {
            grid: grid.clone(),
            cutoff,
        })
    }

    /// Unit cutoff radius.
    pub fn unit(grid: &Grid) -> Self {
        Self::new(grid, 1.0).expect("unit cutoff is valid")
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    fn check(&self, u: &VectorField) -> Result<()> {
        if *u.grid() == self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Coefficients of `B₁(f, g)` for the symmetrized products `(f_i g_k + g_i f_k)/2`.
    fn b1_spectrum(&self, f: &VectorField, g: &VectorField) -> Vec<Complex64> {
        let grid = &self.grid;
        let d = grid.dim();
        let unit = grid.xi_unit();
        let xi_sq = grid.xi_sq();
        let mut out = vec![ZERO; grid.len()];
        let mut prod = vec![0.0; grid.len()];
        for i in 0..d {
            for k in i..d {
                let (fi, fk) = (f.component(i).samples(), f.component(k).samples());
                let (gi, gk) = (g.component(i).samples(), g.component(k).samples());
                for p in 0..prod.len() {
                    prod[p] = 0.5 * (fi[p] * gk[p] + gi[p] * fk[p]);
                }
                let spec = dealiased_spectrum(grid, &prod);
                let mult = if i == k { 1.0 } else { 2.0 };
                grid.for_each_mode(|flat, kv, nyq| {
                    let q = xi_sq[flat];
                    if nyq || q == 0.0 || !inside(q, self.cutoff) {
                        return;
                    }
                    let w = mult * (kv[i] as f64 * unit) * (kv[k] as f64 * unit) / q;
                    out[flat] += spec[flat] * w;
                });
            }
        }
        out
    }

    /// Coefficients of `B₂(f, g)` with `(∂_i f_k ∂_k g_i + ∂_i g_k ∂_k f_i)/2`.
    fn b2_spectrum(&self, jf: &MatrixField, jg: &MatrixField) -> Vec<Complex64> {
        let grid = &self.grid;
        let d = grid.dim();
        let xi_sq = grid.xi_sq();
        // jac(i, k) = ∂_k u_i, so ∂_i f_k = jf(k, i).
        let mut prod = vec![0.0; grid.len()];
        for i in 0..d {
            for k in 0..d {
                let a = jf.get(k, i).samples();
                let b = jg.get(i, k).samples();
                let c = jg.get(k, i).samples();
                let e = jf.get(i, k).samples();
                for p in 0..prod.len() {
                    prod[p] += 0.5 * (a[p] * b[p] + c[p] * e[p]);
                }
            }
        }
        let mut spec = dealiased_spectrum(grid, &prod);
        for (c, &q) in spec.iter_mut().zip(xi_sq) {
            *c = if inside(q, self.cutoff) { ZERO } else { *c * (-1.0 / q) };
        }
        spec
    }

    pub(crate) fn b_spectrum_with_jacobian(&self, u: &VectorField, jac: &MatrixField) -> Vec<Complex64> {
        let mut spec = self.b1_spectrum(u, u);
        for (a, b) in spec.iter_mut().zip(self.b2_spectrum(jac, jac)) {
            *a += b;
        }
        spec
    }

    pub fn b1(&self, u: &VectorField) -> Result<ScalarField> {
        self.check(u)?;
        Ok(ScalarField::from_hermitian_spectrum(&self.grid, self.b1_spectrum(u, u)))
    }

    pub fn b2(&self, u: &VectorField) -> Result<ScalarField> {
        self.check(u)?;
        let j = jacobian(u);
        Ok(ScalarField::from_hermitian_spectrum(&self.grid, self.b2_spectrum(&j, &j)))
    }

    pub fn b(&self, u: &VectorField) -> Result<ScalarField> {
        self.check(u)?;
        let j = jacobian(u);
        Ok(ScalarField::from_hermitian_spectrum(
            &self.grid,
            self.b_spectrum_with_jacobian(u, &j),
        ))
    }

    /// The symmetric bilinear form with `b̃(u, u) = b(u)`, assembled directly
    /// from symmetrized products.
    pub fn b_bilinear(&self, f: &VectorField, g: &VectorField) -> Result<ScalarField> {
        self.check(f)?;
        self.check(g)?;
        let mut spec = self.b1_spectrum(f, g);
        for (a, b) in spec.iter_mut().zip(self.b2_spectrum(&jacobian(f), &jacobian(g))) {
            *a += b;
        }
        Ok(ScalarField::from_hermitian_spectrum(&self.grid, spec))
    }

    pub(crate) fn grad_b_with_jacobian(&self, u: &VectorField, jac: &MatrixField) -> VectorField {
        let spec = self.b_spectrum_with_jacobian(u, jac);
        gradient_of_spectrum(&self.grid, &spec)
    }

    /// `∇B(u)`.
    pub fn grad_b(&self, u: &VectorField) -> Result<VectorField> {
        self.check(u)?;
        Ok(self.grad_b_with_jacobian(u, &jacobian(u)))
    }

    /// `p = -B(u)`. Logs a warning when `u` is visibly compressible, since the
    /// identification with the pressure needs `div u = 0`.
    pub fn pressure_from(&self, u: &VectorField) -> Result<ScalarField> {
        let norm = u.sobolev_norm(1.0);
        if norm > 0.0 {
            let div = divergence(u).sobolev_norm(0.0);
            if div > PRESSURE_DIV_TOL * norm {
                log::warn!("pressure_from: relative divergence {:.3e} exceeds tolerance", div / norm);
            }
        }
        Ok(self.b(u)?.scale(-1.0))
    }
}

/// Classical pressure `p = -Δ⁻¹ div((u·∇)u)`, mean zero.
pub fn leray_pressure(u: &VectorField) -> ScalarField {
    let grid = u.grid();
    let div = divergence(&advect(u));
    let xi_sq = grid.xi_sq();
    let spec = div
        .spectrum()
        .iter()
        .zip(xi_sq)
        .map(|(c, &q)| if q == 0.0 { ZERO } else { c / q })
        .collect();
    ScalarField::from_hermitian_spectrum(grid, spec)
}

pub(crate) fn gradient_of_spectrum(grid: &Grid, spec: &[Complex64]) -> VectorField {
    let comps = (0..grid.dim())
        .map(|a| ScalarField::from_hermitian_spectrum(grid, derivative_spectrum(grid, spec, a)))
        .collect();
    VectorField::from_components(comps).expect("components share the grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{laplacian, leray_project};
    use crate::random::{random_div_free, rng};
    use crate::spectral::spectral_radius;

    fn tg(g: &Grid) -> VectorField {
        VectorField::from_fn(g, |x| {
            [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]
        })
    }

    #[test]
    fn trivial_inputs() {
        let g = Grid::standard(2, 16).unwrap();
        let b = BAssembly::unit(&g);
        let z = VectorField::zeros(&g);
        assert_eq!(b.b(&z).unwrap().max_abs(), 0.0);
        let c = VectorField::constant(&g, &[0.3, -0.7]);
        assert!(b.b1(&c).unwrap().max_abs() < 1e-15);
        assert!(b.b2(&c).unwrap().max_abs() < 1e-15);
        assert!(BAssembly::new(&g, 0.0).is_err());
    }

    #[test]
    fn taylor_green_split() {
        // B₁ vanishes (products live on |ξ| = 2); B = -(cos 2x₁ + cos 2x₂)/4.
        let g = Grid::standard(2, 16).unwrap();
        let b = BAssembly::unit(&g);
        let u = tg(&g);
        assert!(b.b1(&u).unwrap().max_abs() < 1e-14);
        let want = ScalarField::from_fn(&g, |x| -((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) / 4.0);
        assert!((&b.b2(&u).unwrap() - &want).max_abs() < 1e-14);
        let p = b.pressure_from(&u).unwrap();
        assert!((&p + &want).max_abs() < 1e-14);
        assert!((&leray_pressure(&u) + &want).max_abs() < 1e-14);
    }

    #[test]
    fn supports_are_split() {
        let g = Grid::standard(2, 32).unwrap();
        let b = BAssembly::new(&g, 2.5).unwrap();
        let u = random_div_free(&g, 6, 2.0, 1.0, &mut rng(3)).unwrap();
        assert!(spectral_radius(&b.b1(&u).unwrap(), 1e-14) <= 2.5);
        let b2 = b.b2(&u).unwrap();
        let low = b2
            .spectrum()
            .iter()
            .zip(g.xi_sq())
            .filter(|(_, &q)| q <= 6.25)
            .fold(0.0f64, |m, (c, _)| m.max(c.norm()));
        assert_eq!(low, 0.0);
    }

    #[test]
    fn laplacian_of_b_and_gradient_identity() {
        let g = Grid::standard(2, 32).unwrap();
        let b = BAssembly::unit(&g);
        let u = random_div_free(&g, 6, 2.0, 1.0, &mut rng(9)).unwrap();
        let j = jacobian(&u);
        let mut src = ScalarField::zeros(&g);
        for i in 0..2 {
            for k in 0..2 {
                src = &src + &j.get(k, i).pointwise_mul(j.get(i, k));
            }
        }
        let src = crate::spectral::dealias(&src);
        let src = ScalarField::from_spectrum(&g, {
            let mut s = src.spectrum().to_vec();
            s[0] = ZERO;
            s
        });
        let lap = laplacian(&b.b(&u).unwrap());
        assert!((&lap - &src).sobolev_norm(0.0) < 1e-12 * src.sobolev_norm(0.0));
        let adv = advect(&u);
        let irrot = &adv - &leray_project(&adv);
        let gb = b.grad_b(&u).unwrap();
        assert!((&gb - &irrot).sobolev_norm(0.0) < 1e-12 * irrot.sobolev_norm(0.0));
    }

    #[test]
    fn polarization() {
        let g = Grid::standard(2, 32).unwrap();
        let b = BAssembly::unit(&g);
        let f = random_div_free(&g, 5, 2.0, 1.0, &mut rng(1)).unwrap();
        let h = random_div_free(&g, 5, 2.0, 1.0, &mut rng(2)).unwrap();
        let lhs = &b.b(&(&f + &h)).unwrap() - &b.b(&(&f - &h)).unwrap();
        let rhs = b.b_bilinear(&f, &h).unwrap().scale(4.0);
        assert!((&lhs - &rhs).max_abs() < 1e-12 * rhs.max_abs());
    }
}
