//! Fourier multipliers and Sobolev norms.
//!
//! All operators act on the normalized coefficients of [`Grid::forward`].
//! Symbols with a `1/|ξ|²` factor are defined as zero at `ξ = 0`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{MatrixField, ScalarField, VectorField};
use crate::grid::{Grid, MAX_DIM};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A real Fourier symbol evaluated at the physical wavevector of each mode.
pub struct SpectralMultiplier {
    symbol: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl SpectralMultiplier {
    /// Wrap a symbol. It should be even in `ξ` so real fields stay real.
    pub fn new(symbol: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        SpectralMultiplier {
            symbol: Box::new(symbol),
        }
    }

    /// Indicator of the closed ball `|ξ| ≤ radius`.
    pub fn cutoff(radius: f64) -> Self {
        let r2 = radius * radius;
        Self::new(move |xi| if norm_sq(xi) <= r2 * (1.0 + 1e-12) { 1.0 } else { 0.0 })
    }

    /// `χ(ξ) ξ_i ξ_k / |ξ|²` (zero at the origin). Axes are 0-based.
    pub fn riesz_lowpass(i: usize, k: usize, radius: f64) -> Self {
        let r2 = radius * radius;
        Self::new(move |xi| {
            let q = norm_sq(xi);
            if q == 0.0 || q > r2 * (1.0 + 1e-12) {
                0.0
            } else {
                xi[i] * xi[k] / q
            }
        })
    }

    /// `-(1 - χ(ξ)) / |ξ|²` (zero inside the ball, including the origin).
    pub fn inv_laplace_highpass(radius: f64) -> Self {
        let r2 = radius * radius;
        Self::new(move |xi| {
            let q = norm_sq(xi);
            if q <= r2 * (1.0 + 1e-12) {
                0.0
            } else {
                -1.0 / q
            }
        })
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        (self.symbol)(xi)
    }
}

impl std::fmt::Debug for SpectralMultiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SpectralMultiplier")
    }
}

#[inline]
fn norm_sq(xi: &[f64]) -> f64 {
    xi.iter().map(|v| v * v).sum()
}

/// Tolerance-aware test `|ξ|² ≤ r²` so that lattice points on the sphere count
/// as inside regardless of rounding.
#[inline]
pub(crate) fn inside(q: f64, radius: f64) -> bool {
    q <= radius * radius * (1.0 + 1e-12)
}

/// Types with a Sobolev `H^s` norm.
pub trait Sobolev {
    /// `Σ (1+|ξ|²)^s |f̂|²`, summed over components.
    fn sobolev_sq(&self, s: f64) -> f64;

    fn sobolev_norm(&self, s: f64) -> f64 {
        self.sobolev_sq(s).sqrt()
    }
}

fn weights(grid: &Grid, s: f64) -> Vec<f64> {
    grid.xi_sq().iter().map(|&q| (1.0 + q).powf(s)).collect()
}

fn weighted_sq(spec: &[Complex64], w: &[f64]) -> f64 {
    spec.iter().zip(w).map(|(c, w)| w * c.norm_sqr()).sum()
}

impl Sobolev for ScalarField {
    fn sobolev_sq(&self, s: f64) -> f64 {
        weighted_sq(self.spectrum(), &weights(self.grid(), s))
    }
}

impl Sobolev for VectorField {
    fn sobolev_sq(&self, s: f64) -> f64 {
        let w = weights(self.grid(), s);
        self.components()
            .iter()
            .map(|c| weighted_sq(c.spectrum(), &w))
            .sum()
    }
}

impl Sobolev for MatrixField {
    fn sobolev_sq(&self, s: f64) -> f64 {
        let w = weights(self.grid(), s);
        self.entries()
            .iter()
            .map(|c| weighted_sq(c.spectrum(), &w))
            .sum()
    }
}

/// `‖f‖_s`. Rejects a non-finite index.
pub fn sobolev_norm<F: Sobolev + ?Sized>(f: &F, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::param("s", "Sobolev index must be finite"));
    }
    Ok(f.sobolev_norm(s))
}

/// `‖f - g‖_s` for scalar fields on one grid.
pub fn sobolev_distance(f: &ScalarField, g: &ScalarField, s: f64) -> Result<f64> {
    f.same_grid(g)?;
    Ok((f - g).sobolev_norm(s))
}

/// `‖u - v‖_s` for vector fields on one grid.
pub fn sobolev_distance_vec(u: &VectorField, v: &VectorField, s: f64) -> Result<f64> {
    u.same_grid(v)?;
    Ok((u - v).sobolev_norm(s))
}

/// Real part of `Σ (1+|ξ|²)^s f̂ conj(ĝ)`.
pub fn sobolev_inner(f: &ScalarField, g: &ScalarField, s: f64) -> Result<f64> {
    f.same_grid(g)?;
    let w = weights(f.grid(), s);
    Ok(f
        .spectrum()
        .iter()
        .zip(g.spectrum())
        .zip(&w)
        .map(|((a, b), w)| w * (a * b.conj()).re)
        .sum())
}

/// Visit every mode with its flat index, physical wavevector and Nyquist flag.
pub(crate) fn for_each_xi(grid: &Grid, mut f: impl FnMut(usize, &[f64], bool)) {
    let unit = grid.xi_unit();
    let dim = grid.dim();
    grid.for_each_mode(|flat, k, nyq| {
        let mut xi = [0.0; MAX_DIM];
        for a in 0..dim {
            xi[a] = k[a] as f64 * unit;
        }
        f(flat, &xi[..dim], nyq)
    });
}

/// Scale the coefficients of `f` by `m(ξ)`.
pub fn apply_multiplier(m: &SpectralMultiplier, f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let src = f.spectrum();
    let mut out = vec![ZERO; src.len()];
    for_each_xi(grid, |flat, xi, _| {
        let w = m.eval(xi);
        if w != 0.0 {
            out[flat] = src[flat] * w;
        }
    });
    ScalarField::from_spectrum(grid, out)
}

/// Multiply the coefficients by a real even weight that depends only on `|ξ|²`.
pub(crate) fn radial_filter(f: &ScalarField, mut w: impl FnMut(f64) -> f64) -> ScalarField {
    let grid = f.grid();
    let xi_sq = grid.xi_sq();
    let out: Vec<Complex64> = f
        .spectrum()
        .iter()
        .zip(xi_sq)
        .map(|(c, &q)| {
            let k = w(q);
            if k == 0.0 {
                ZERO
            } else {
                c * k
            }
        })
        .collect();
    ScalarField::from_hermitian_spectrum(grid, out)
}

/// `χ(D) f`: keeps the modes with `|ξ| ≤ radius`.
pub fn chi_cutoff(f: &ScalarField, radius: f64) -> Result<ScalarField> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::param("radius", format!("cutoff radius must be positive, got {radius}")));
    }
    Ok(radial_filter(f, |q| if inside(q, radius) { 1.0 } else { 0.0 }))
}

/// Symbol `-(1-χ(ξ))/|ξ|²` with the unit cutoff.
pub fn inv_laplace_highpass(f: &ScalarField) -> ScalarField {
    inv_laplace_highpass_with(f, 1.0)
}

/// [`inv_laplace_highpass`] for an arbitrary cutoff radius.
pub fn inv_laplace_highpass_with(f: &ScalarField, radius: f64) -> ScalarField {
    radial_filter(f, |q| if inside(q, radius) { 0.0 } else { -1.0 / q })
}

/// `χ_k(D) f` with the ball of physical radius `k`. Once `k` reaches the
/// largest lattice wavenumber the field is returned unchanged.
pub fn spectral_truncate(f: &ScalarField, k: u32) -> Result<ScalarField> {
    if k == 0 {
        return Err(Error::param("k", "truncation index must be at least 1"));
    }
    let radius = k as f64;
    if radius >= f.grid().max_xi() {
        return Ok(f.clone());
    }
    chi_cutoff(f, radius)
}

fn check_axis(grid: &Grid, axis: usize) -> Result<()> {
    if axis >= grid.dim() {
        return Err(Error::param(
            "axis",
            format!("axis {axis} out of range for a {}-dimensional grid", grid.dim()),
        ));
    }
    Ok(())
}

/// Coefficients of `∂_axis f` given those of `f`. Modes touching a Nyquist
/// index are zeroed.
pub(crate) fn derivative_spectrum(grid: &Grid, spec: &[Complex64], axis: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; spec.len()];
    let unit = grid.xi_unit();
    grid.for_each_mode(|flat, k, nyq| {
        if !nyq && k[axis] != 0 {
            let xi = k[axis] as f64 * unit;
            let c = spec[flat];
            out[flat] = Complex64::new(-xi * c.im, xi * c.re);
        }
    });
    out
}

/// `∂_axis f` with a 0-based axis.
pub fn partial_derivative(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    check_axis(f.grid(), axis)?;
    Ok(ScalarField::from_hermitian_spectrum(
        f.grid(),
        derivative_spectrum(f.grid(), f.spectrum(), axis),
    ))
}

/// Zero every mode outside the 2/3-rule cube `|k_a| ≤ (N-1)/3`.
pub(crate) fn dealias_spectrum(grid: &Grid, spec: &mut [Complex64]) {
    let kmax = grid.dealias_k();
    grid.for_each_mode(|flat, k, _| {
        if k.iter().any(|c| c.abs() > kmax) {
            spec[flat] = ZERO;
        }
    });
}

/// 2/3-rule truncation.
pub fn dealias(f: &ScalarField) -> ScalarField {
    let mut spec = f.spectrum().to_vec();
    dealias_spectrum(f.grid(), &mut spec);
    ScalarField::from_hermitian_spectrum(f.grid(), spec)
}

/// Componentwise [`dealias`].
pub fn dealias_vec(u: &VectorField) -> VectorField {
    u.map_components(dealias)
}

/// True when every coefficient outside the 2/3-rule cube is below `tol`
/// relative to the largest coefficient.
pub fn is_dealiased(f: &ScalarField, tol: f64) -> bool {
    let spec = f.spectrum();
    let peak = spec.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let kmax = f.grid().dealias_k();
    let mut ok = true;
    f.grid().for_each_mode(|flat, k, _| {
        if k.iter().any(|c| c.abs() > kmax) && spec[flat].norm() > tol * peak.max(f64::MIN_POSITIVE) {
            ok = false;
        }
    });
    ok
}

/// Largest `|ξ|` carrying a coefficient above `tol` (relative to the peak).
pub fn spectral_radius(f: &ScalarField, tol: f64) -> f64 {
    let spec = f.spectrum();
    let peak = spec.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    if peak == 0.0 {
        return 0.0;
    }
    spec.iter()
        .zip(f.grid().xi_sq())
        .filter(|(c, _)| c.norm() > tol * peak)
        .fold(0.0f64, |m, (_, &q)| m.max(q.sqrt()))
}
