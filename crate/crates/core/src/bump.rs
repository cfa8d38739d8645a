//! Compactly supported test functions and the spectral mollifier.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Grid, MAX_DIM};
use crate::spectral::{derivative_spectrum, radial_filter, Sobolev};

/// `e^{-r²/(r²-|y-x|²)}` inside the ball, zero outside. Distances are taken to
/// the nearest periodic image so points slightly outside `[0, L)` still work.
#[derive(Clone, Debug, PartialEq)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
    period: f64,
}

impl Bump {
    /// Validates that the closed support ball sits inside `[0, L]^n`.
    pub fn new(grid: &Grid, center: &[f64], radius: f64, amplitude: f64) -> Result<Self> {
        check_support(grid, center, radius)?;
        Ok(Bump {
            center: center.to_vec(),
            radius,
            amplitude,
            period: grid.length(),
        })
    }

    fn offset(&self, y: &[f64]) -> [f64; MAX_DIM] {
        let mut d = [0.0; MAX_DIM];
        for (a, c) in self.center.iter().enumerate() {
            let mut z = y[a] - c;
            z -= self.period * (z / self.period).round();
            d[a] = z;
        }
        d
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let d = self.offset(y);
        let q = d.iter().map(|v| v * v).sum::<f64>() / (self.radius * self.radius);
        if q >= 1.0 {
            0.0
        } else {
            self.amplitude * (-1.0 / (1.0 - q)).exp()
        }
    }

    /// Analytic gradient.
    pub fn gradient(&self, y: &[f64]) -> [f64; MAX_DIM] {
        let d = self.offset(y);
        let r2 = self.radius * self.radius;
        let q = d.iter().map(|v| v * v).sum::<f64>() / r2;
        let mut g = [0.0; MAX_DIM];
        if q < 1.0 {
            let one = 1.0 - q;
            let v = self.amplitude * (-1.0 / one).exp();
            // d/dy e^{-1/(1-q)} = -e^{-1/(1-q)} (1-q)^{-2} 2(y-x)/r²
            let f = -v * 2.0 / (one * one * r2);
            for a in 0..self.center.len() {
                g[a] = f * d[a];
            }
        }
        g
    }

    pub fn sample(&self, grid: &Grid) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.eval(x))
    }
}

fn check_support(grid: &Grid, center: &[f64], radius: f64) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::param("radius", format!("must be positive, got {radius}")));
    }
    if center.len() != grid.dim() {
        return Err(Error::param(
            "center",
            format!("expected {} coordinates, got {}", grid.dim(), center.len()),
        ));
    }
    let l = grid.length();
    let fits = center.iter().all(|&c| c - radius >= 0.0 && c + radius <= l);
    if !fits {
        let need = center
            .iter()
            .map(|&c| (c + radius).max(2.0 * radius + (radius - c).max(0.0)))
            .fold(2.0 * radius, f64::max);
        return Err(Error::SupportViolation {
            center: center.to_vec(),
            radius,
            required_box: need,
        });
    }
    Ok(())
}

/// Sampled bump `amplitude · ψ_{center, r}`.
pub fn bump(grid: &Grid, center: &[f64], r: f64, amplitude: f64) -> Result<ScalarField> {
    Ok(Bump::new(grid, center, r, amplitude)?.sample(grid))
}

/// Smooth radial plateau: `1` on `|y - x| ≤ inner`, `0` beyond `outer`.
#[derive(Clone, Debug)]
pub struct Plateau {
    pub center: Vec<f64>,
    pub inner: f64,
    pub outer: f64,
    period: f64,
}

impl Plateau {
    pub fn new(grid: &Grid, center: &[f64], inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(Error::param("inner", "need 0 < inner < outer"));
        }
        check_support(grid, center, outer)?;
        Ok(Plateau {
            center: center.to_vec(),
            inner,
            outer,
            period: grid.length(),
        })
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let mut q = 0.0;
        for (a, c) in self.center.iter().enumerate() {
            let mut z = y[a] - c;
            z -= self.period * (z / self.period).round();
            q += z * z;
        }
        let t = (self.outer - q.sqrt()) / (self.outer - self.inner);
        smooth_step(t)
    }
}

fn smooth_step(t: f64) -> f64 {
    let h = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        h(t) / (h(t) + h(1.0 - t))
    }
}

/// Divergence-free field built from a bump stream function: `∇⊥ψ` in 2D and
/// `curl(0, 0, ψ)` in 3D, with derivatives taken spectrally so the discrete
/// divergence vanishes to round-off. Normalized to `‖·‖_s = 1`.
pub fn div_free_bump(grid: &Grid, center: &[f64], r: f64, s: f64) -> Result<VectorField> {
    let psi = bump(grid, center, r, 1.0)?;
    let u = perp_gradient(&psi);
    let norm = u.sobolev_norm(s);
    if norm == 0.0 {
        return Err(Error::param("radius", "bump vanishes on the grid; radius below resolution"));
    }
    Ok(u.scale(1.0 / norm))
}

/// `(-∂₂ψ, ∂₁ψ)` in 2D, `(∂₂ψ, -∂₁ψ, 0)` in 3D.
pub fn perp_gradient(psi: &ScalarField) -> VectorField {
    let grid = psi.grid();
    let d0 = ScalarField::from_hermitian_spectrum(grid, derivative_spectrum(grid, psi.spectrum(), 0));
    let d1 = ScalarField::from_hermitian_spectrum(grid, derivative_spectrum(grid, psi.spectrum(), 1));
    let comps = if grid.dim() == 2 {
        vec![d1.scale(-1.0), d0]
    } else {
        vec![d1, d0.scale(-1.0), ScalarField::zeros(grid)]
    };
    VectorField::from_components(comps).expect("components share the grid")
}

/// Fourier transform of the unit-mass radial bump `ρ(x) ∝ e^{-1/(1-|x|²)}`,
/// as a function of `|ζ|`.
struct MollifierSymbol {
    dim: usize,
    nodes: Vec<(f64, f64)>,
}

impl MollifierSymbol {
    const RADIAL_NODES: usize = 256;

    fn new(dim: usize) -> Self {
        // Composite Simpson on [0, 1]; the profile is flat at both ends.
        let m = Self::RADIAL_NODES;
        let h = 1.0 / m as f64;
        let mut nodes = Vec::with_capacity(m + 1);
        let mut mass = 0.0;
        for i in 0..=m {
            let r: f64 = i as f64 * h;
            let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            let rho = if r < 1.0 { (-1.0 / (1.0 - r * r)).exp() } else { 0.0 };
            let wt = w * h / 3.0 * rho * r.powi(dim as i32 - 1);
            mass += wt;
            nodes.push((r, wt));
        }
        for n in &mut nodes {
            n.1 /= mass;
        }
        MollifierSymbol { dim, nodes }
    }

    fn eval(&self, kappa: f64) -> f64 {
        if kappa == 0.0 {
            return 1.0;
        }
        self.nodes
            .iter()
            .map(|&(r, w)| {
                let z = kappa * r;
                let kernel = if self.dim == 2 {
                    bessel_j0(z)
                } else if z == 0.0 {
                    1.0
                } else {
                    z.sin() / z
                };
                w * kernel
            })
            .sum()
    }
}

/// `J₀(z) = (1/π)∫₀^π cos(z sin θ) dθ` by the trapezoid rule, which converges
/// geometrically for this periodic integrand once the node count exceeds `z`.
fn bessel_j0(z: f64) -> f64 {
    let m = (z.abs() * 0.75) as usize + 24;
    let h = PI / m as f64;
    // Endpoints θ = 0 and π both contribute cos(0) = 1 with weight 1/2.
    let mut acc = 1.0;
    for i in 1..m {
        acc += (z * (i as f64 * h).sin()).cos();
    }
    acc / m as f64
}

/// `J_ε f`: convolution with `ε^{-n} ρ(x/ε)`, applied as `ρ̂(εξ)`.
pub fn mollify(f: &ScalarField, eps: f64) -> Result<ScalarField> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::param("eps", format!("mollifier width must be positive, got {eps}")));
    }
    let symbol = MollifierSymbol::new(f.grid().dim());
    let unit = f.grid().xi_unit();
    // |ξ|² is an integer multiple of unit², so cache per lattice shell.
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let inv_unit2 = 1.0 / (unit * unit);
    Ok(radial_filter(f, |q| {
        let shell = (q * inv_unit2).round() as u64;
        *cache
            .entry(shell)
            .or_insert_with(|| symbol.eval(eps * q.sqrt()))
    }))
}

/// Componentwise [`mollify`].
pub fn mollify_vec(u: &VectorField, eps: f64) -> Result<VectorField> {
    let comps = u
        .components()
        .iter()
        .map(|c| mollify(c, eps))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(comps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::divergence;

    #[test]
    fn bump_values_and_support() {
        let g = Grid::new(2, 32, 8.0).unwrap();
        let c = [4.0, 4.0];
        let b = Bump::new(&g, &c, 2.0, 3.0).unwrap();
        assert!((b.eval(&c) - 3.0 * (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(b.eval(&[6.0, 4.0]), 0.0);
        let f = b.sample(&g);
        for p in 0..g.len() {
            let x = g.point(p);
            if (x[0] - 4.0).hypot(x[1] - 4.0) >= 2.0 {
                assert_eq!(f.samples()[p], 0.0);
            }
        }
    }

    #[test]
    fn bump_support_violation_reports_box() {
        let g = Grid::new(2, 32, 8.0).unwrap();
        match bump(&g, &[7.0, 4.0], 2.0, 1.0) {
            Err(Error::SupportViolation { required_box, .. }) => assert!(required_box >= 9.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_difference() {
        let g = Grid::new(2, 32, 8.0).unwrap();
        let b = Bump::new(&g, &[4.0, 4.0], 2.0, 1.5).unwrap();
        let y = [4.7, 3.6];
        let h = 1e-6;
        let gr = b.gradient(&y);
        for a in 0..2 {
            let mut p = y;
            let mut m = y;
            p[a] += h;
            m[a] -= h;
            let fd = (b.eval(&p) - b.eval(&m)) / (2.0 * h);
            assert!((fd - gr[a]).abs() < 1e-8);
        }
    }

    #[test]
    fn div_free_bump_properties() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let u = div_free_bump(&g, &[4.0, 4.0], 2.0, 2.5).unwrap();
        assert!((u.sobolev_norm(2.5) - 1.0).abs() < 1e-12);
        assert!(divergence(&u).max_abs() < 1e-12 * u.max_abs());
    }

    #[test]
    fn j0_reference_values() {
        // Abramowitz & Stegun table 9.1.
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j0(5.0) + 0.177_596_771_314_338_3).abs() < 1e-14);
        assert!((bessel_j0(30.0) + 0.086_367_983_581_040_2).abs() < 1e-13);
    }

    #[test]
    fn plateau_shape() {
        let g = Grid::new(2, 32, 8.0).unwrap();
        let p = Plateau::new(&g, &[4.0, 4.0], 0.5, 1.0).unwrap();
        assert_eq!(p.eval(&[4.3, 4.0]), 1.0);
        assert_eq!(p.eval(&[5.1, 4.0]), 0.0);
        let mid = p.eval(&[4.75, 4.0]);
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mollifier_basics() {
        let g = Grid::standard(2, 32).unwrap();
        let c = ScalarField::constant(&g, 2.5);
        assert!((&mollify(&c, 0.3).unwrap() - &c).max_abs() < 1e-13);
        let f = ScalarField::from_fn(&g, |x| (x[0] + x[1]).sin() + 0.3 * (3.0 * x[1]).cos());
        let j = mollify(&f, 1e-2).unwrap();
        assert!((&j - &f).max_abs() < 1e-3);
        let j = mollify(&f, 0.7).unwrap();
        assert!(j.sobolev_norm(0.0) <= f.sobolev_norm(0.0));
        assert!(mollify(&f, 0.0).is_err());
    }
}
