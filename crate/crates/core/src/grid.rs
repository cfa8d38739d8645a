//! Periodic box discretization and the discrete Fourier transform on it.
//!
//! A [`Grid`] covers the torus `[0, L)^n` with `N` points per axis. Samples are
//! stored in row-major axis order: axis 0 varies slowest. Spectral coefficients
//! use the normalization `f̂_k = N^{-n} Σ_x f(x) e^{-iξ_k·x}`, which is the
//! discrete form of `L^{-n} ∫ f e^{-iξ·x} dx`, so a single mode `cos(ξ·x)`
//! has coefficients `1/2` at `±ξ`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Periodic grid. Cloning is cheap; all clones share the FFT plans.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    dim: usize,
    n: usize,
    length: f64,
    /// Signed integer wavenumber per 1D index; the Nyquist index maps to `+N/2`.
    kint: Vec<i64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    xi_sq: OnceLock<Vec<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim())
            .field("n", &self.n())
            .field("length", &self.length())
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.dim() == other.dim()
                && self.n() == other.n()
                && self.length().to_bits() == other.length().to_bits())
    }
}

impl Grid {
    /// Build a grid. `n` must be a power of two, at least 8; `dim` is 2 or 3.
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if !(2..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{2, 3}}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {n} must be a power of two >= 8"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length {length} must be positive")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let half = (n / 2) as i64;
        let kint = (0..n as i64)
            .map(|i| if i <= half { i } else { i - n as i64 })
            .collect();
        Ok(Grid {
            inner: Arc::new(GridInner {
                dim,
                n,
                length,
                kint,
                forward,
                inverse,
                xi_sq: OnceLock::new(),
            }),
        })
    }

    /// The `[0, 2π)^dim` grid.
    pub fn standard(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Physical period `L`.
    pub fn length(&self) -> f64 {
        self.inner.length
    }

    /// Grid spacing `L / N`.
    pub fn spacing(&self) -> f64 {
        self.inner.length / self.inner.n as f64
    }

    /// Total number of samples, `N^dim`.
    pub fn len(&self) -> usize {
        self.inner.n.pow(self.inner.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Physical wavenumber unit `2π / L`.
    pub fn xi_unit(&self) -> f64 {
        2.0 * PI / self.inner.length
    }

    /// Signed integer wavenumber of a 1D index.
    #[inline]
    pub fn kint(&self, i: usize) -> i64 {
        self.inner.kint[i]
    }

    /// Highest retained integer wavenumber under the 2/3 rule: `K` with `3K < N`.
    pub fn dealias_k(&self) -> i64 {
        ((self.inner.n - 1) / 3) as i64
    }

    /// Largest physical `|ξ|` on the lattice.
    pub fn max_xi(&self) -> f64 {
        (self.inner.n as f64 / 2.0) * self.xi_unit() * (self.inner.dim as f64).sqrt()
    }

    /// Axis indices of a flat index (unused trailing entries are zero).
    #[inline]
    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let n = self.inner.n;
        let mut out = [0usize; MAX_DIM];
        let mut rem = flat;
        for a in (0..self.inner.dim).rev() {
            out[a] = rem % n;
            rem /= n;
        }
        out
    }

    #[inline]
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .take(self.inner.dim)
            .fold(0, |acc, &i| acc * self.inner.n + i)
    }

    /// Coordinates of a flat index.
    #[inline]
    pub fn point(&self, flat: usize) -> [f64; MAX_DIM] {
        let h = self.spacing();
        let idx = self.multi_index(flat);
        let mut x = [0.0; MAX_DIM];
        for a in 0..self.inner.dim {
            x[a] = idx[a] as f64 * h;
        }
        x
    }

    /// Visit every lattice mode with its flat index, integer wavenumbers and
    /// whether it touches the unpaired Nyquist index on some axis.
    pub fn for_each_mode(&self, mut f: impl FnMut(usize, [i64; MAX_DIM], bool)) {
        let n = self.inner.n;
        let half = n / 2;
        let kint = &self.inner.kint;
        match self.inner.dim {
            2 => {
                for i in 0..n {
                    for j in 0..n {
                        let nyq = i == half || j == half;
                        f(i * n + j, [kint[i], kint[j], 0], nyq);
                    }
                }
            }
            _ => {
                for i in 0..n {
                    for j in 0..n {
                        for l in 0..n {
                            let nyq = i == half || j == half || l == half;
                            f((i * n + j) * n + l, [kint[i], kint[j], kint[l]], nyq);
                        }
                    }
                }
            }
        }
    }

    /// `|ξ|²` for every flat index, computed once per grid.
    pub fn xi_sq(&self) -> &[f64] {
        self.inner.xi_sq.get_or_init(|| {
            let unit = self.xi_unit();
            let mut out = vec![0.0; self.len()];
            self.for_each_mode(|flat, k, _| {
                let k2: i64 = k.iter().map(|&c| c * c).sum();
                out[flat] = k2 as f64 * unit * unit;
            });
            out
        })
    }

    /// Normalized forward transform of real samples.
    pub fn forward(&self, samples: &[f64]) -> Vec<Complex64> {
        assert_eq!(samples.len(), self.len(), "sample count does not match grid");
        let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.inner.forward);
        let scale = 1.0 / self.len() as f64;
        for c in &mut data {
            *c *= scale;
        }
        data
    }

    /// Inverse of [`Grid::forward`]; returns the real part.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        assert_eq!(spectrum.len(), self.len(), "coefficient count does not match grid");
        let mut data = spectrum.to_vec();
        self.transform(&mut data, &self.inner.inverse);
        data.into_iter().map(|c| c.re).collect()
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.inner.n;
        let dim = self.inner.dim;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // Last axis is contiguous: one batched call.
        fft.process_with_scratch(data, &mut scratch);
        // Remaining axes: transpose each block so the axis becomes contiguous.
        let mut tmp = Vec::new();
        for axis in (0..dim - 1).rev() {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = n * stride;
            tmp.resize(block, Complex64::new(0.0, 0.0));
            for chunk in data.chunks_mut(block) {
                for r in 0..n {
                    for c in 0..stride {
                        tmp[c * n + r] = chunk[r * stride + c];
                    }
                }
                fft.process_with_scratch(&mut tmp, &mut scratch);
                for r in 0..n {
                    for c in 0..stride {
                        chunk[r * stride + c] = tmp[c * n + r];
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(1, 16, 1.0).is_err());
        assert!(Grid::new(4, 16, 1.0).is_err());
        assert!(Grid::new(2, 12, 1.0).is_err());
        assert!(Grid::new(2, 4, 1.0).is_err());
        assert!(Grid::new(2, 16, 0.0).is_err());
        assert!(Grid::new(2, 16, f64::NAN).is_err());
        assert!(Grid::new(3, 8, 1.0).is_ok());
    }

    #[test]
    fn single_mode_coefficients() {
        let g = Grid::standard(2, 16).unwrap();
        let samples: Vec<f64> = (0..g.len()).map(|i| g.point(i)[0].cos()).collect();
        let spec = g.forward(&samples);
        let at = |k0: usize, k1: usize| spec[g.flat_index(&[k0, k1])];
        assert!((at(1, 0).re - 0.5).abs() < 1e-14);
        assert!((at(15, 0).re - 0.5).abs() < 1e-14);
        let rest: f64 = spec.iter().map(|c| c.norm_sqr()).sum::<f64>() - 0.5;
        assert!(rest.abs() < 1e-14);
    }

    #[test]
    fn roundtrip_3d() {
        let g = Grid::new(3, 8, 3.0).unwrap();
        let samples: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let back = g.inverse(&g.forward(&samples));
        for (a, b) in samples.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn dealias_band_is_alias_free() {
        for n in [8usize, 16, 64, 128] {
            let g = Grid::standard(2, n).unwrap();
            let k = g.dealias_k();
            assert!(3 * k < n as i64);
            assert!(3 * (k + 1) >= n as i64);
        }
    }
}
