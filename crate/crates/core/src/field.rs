//! Sampled scalar, vector and matrix fields with lazily cached spectra.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, MAX_DIM};

/// Real samples on a [`Grid`] plus their spectral coefficients, computed on
/// first use. Any mutable access to the samples drops the cached spectrum.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid,
    samples: Vec<f64>,
    spectrum: OnceLock<Arc<Vec<Complex64>>>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self::from_raw(grid.clone(), vec![0.0; grid.len()])
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self::from_raw(grid.clone(), vec![value; grid.len()])
    }

    /// Validating constructor: length must match and all samples be finite.
    pub fn from_samples(grid: &Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::param(
                "samples",
                format!("expected {} samples, got {}", grid.len(), samples.len()),
            ));
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self::from_raw(grid.clone(), samples))
    }

    /// Sample `f` at every grid point. Only the first `dim` coordinates of the
    /// slice passed to `f` are meaningful.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let samples = (0..grid.len())
            .map(|i| {
                let x = grid.point(i);
                f(&x[..dim])
            })
            .collect();
        Self::from_raw(grid.clone(), samples)
    }

    /// Build from spectral coefficients. The real part of the inverse is kept.
    pub fn from_spectrum(grid: &Grid, spectrum: Vec<Complex64>) -> Self {
        let samples = grid.inverse(&spectrum);
        Self::from_raw(grid.clone(), samples)
    }

    /// Like [`ScalarField::from_spectrum`] but keeps `spectrum` as the cache.
    /// Callers guarantee conjugate symmetry (the output of an even real symbol
    /// or of an odd imaginary symbol with the Nyquist mode zeroed).
    pub(crate) fn from_hermitian_spectrum(grid: &Grid, spectrum: Vec<Complex64>) -> Self {
        let samples = grid.inverse(&spectrum);
        let field = Self::from_raw(grid.clone(), samples);
        let _ = field.spectrum.set(Arc::new(spectrum));
        field
    }

    pub(crate) fn from_raw(grid: Grid, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        ScalarField {
            grid,
            samples,
            spectrum: OnceLock::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        self.spectrum = OnceLock::new();
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Spectral coefficients (normalized as in [`Grid::forward`]).
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum
            .get_or_init(|| Arc::new(self.grid.forward(&self.samples)))
    }

    /// Drop the cached spectrum, e.g. before storing many fields.
    pub fn without_cache(mut self) -> Self {
        self.spectrum = OnceLock::new();
        self
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField::from_raw(self.grid.clone(), self.samples.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        assert!(self.grid == other.grid, "fields live on different grids");
        ScalarField::from_raw(
            self.grid.clone(),
            self.samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scale(&self, factor: f64) -> ScalarField {
        self.map(|v| v * factor)
    }

    /// Pointwise product without dealiasing.
    pub fn pointwise_mul(&self, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a * b)
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &ScalarField) -> ScalarField {
        self.zip_map(other, |a, b| a + factor * b)
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Box-averaged `L²` pairing `L^{-n} ∫ f g`.
    pub fn l2_pairing(&self, other: &ScalarField) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / self.samples.len() as f64)
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }
}

impl Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Mul<f64> for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: f64) -> ScalarField {
        self.scale(rhs)
    }
}

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        self.scale(-1.0)
    }
}

/// `dim` scalar components on one grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    comps: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            comps: (0..grid.dim()).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_components(comps: Vec<ScalarField>) -> Result<Self> {
        let first = comps
            .first()
            .ok_or_else(|| Error::param("components", "empty component list"))?;
        if comps.len() != first.grid().dim() {
            return Err(Error::param(
                "components",
                format!("expected {} components, got {}", first.grid().dim(), comps.len()),
            ));
        }
        for c in &comps[1..] {
            first.same_grid(c)?;
        }
        Ok(VectorField { comps })
    }

    /// Component `i` is sampled from `f(x)[i]`.
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> [f64; MAX_DIM]) -> Self {
        let dim = grid.dim();
        let mut comps: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); dim];
        for i in 0..grid.len() {
            let x = grid.point(i);
            let v = f(&x[..dim]);
            for (a, c) in comps.iter_mut().enumerate() {
                c.push(v[a]);
            }
        }
        VectorField {
            comps: comps
                .into_iter()
                .map(|s| ScalarField::from_raw(grid.clone(), s))
                .collect(),
        }
    }

    /// Uniform field equal to `c` everywhere.
    pub fn constant(grid: &Grid, c: &[f64]) -> Self {
        VectorField {
            comps: (0..grid.dim())
                .map(|a| ScalarField::constant(grid, c[a]))
                .collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.comps[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        &self.comps[i]
    }

    pub fn components_mut(&mut self) -> &mut [ScalarField] {
        &mut self.comps
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.comps
    }

    pub fn same_grid(&self, other: &VectorField) -> Result<()> {
        self.comps[0].same_grid(&other.comps[0])
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> VectorField {
        VectorField {
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> VectorField {
        self.map_components(|c| c.scale(factor))
    }

    pub fn axpy(&self, factor: f64, other: &VectorField) -> VectorField {
        VectorField {
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.axpy(factor, b))
                .collect(),
        }
    }

    /// Value at flat index `i`.
    #[inline]
    pub fn at(&self, i: usize) -> [f64; MAX_DIM] {
        let mut v = [0.0; MAX_DIM];
        for (a, c) in self.comps.iter().enumerate() {
            v[a] = c.samples()[i];
        }
        v
    }

    /// Largest pointwise Euclidean length.
    pub fn max_norm(&self) -> f64 {
        let len = self.grid().len();
        (0..len)
            .map(|i| self.at(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.is_finite())
    }

    pub fn without_cache(self) -> Self {
        VectorField {
            comps: self.comps.into_iter().map(|c| c.without_cache()).collect(),
        }
    }

    /// Box-averaged `L²` pairing summed over components.
    pub fn l2_pairing(&self, other: &VectorField) -> Result<f64> {
        self.same_grid(other)?;
        let mut acc = 0.0;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            acc += a.l2_pairing(b)?;
        }
        Ok(acc)
    }
}

impl Add for &VectorField {
    type Output = VectorField;
    fn add(self, rhs: &VectorField) -> VectorField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &VectorField {
    type Output = VectorField;
    fn sub(self, rhs: &VectorField) -> VectorField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &VectorField {
    type Output = VectorField;
    fn mul(self, rhs: f64) -> VectorField {
        self.scale(rhs)
    }
}

/// `dim × dim` scalar entries, row-major. Used for Jacobians and vorticities.
#[derive(Clone, Debug)]
pub struct MatrixField {
    dim: usize,
    entries: Vec<ScalarField>,
}

impl MatrixField {
    pub fn zeros(grid: &Grid) -> Self {
        let dim = grid.dim();
        MatrixField {
            dim,
            entries: (0..dim * dim).map(|_| ScalarField::zeros(grid)).collect(),
        }
    }

    pub fn from_entries(dim: usize, entries: Vec<ScalarField>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::param(
                "entries",
                format!("expected {} entries, got {}", dim * dim, entries.len()),
            ));
        }
        if entries[0].grid().dim() != dim {
            return Err(Error::param("entries", "matrix size differs from grid dimension"));
        }
        for e in &entries[1..] {
            entries[0].same_grid(e)?;
        }
        Ok(MatrixField { dim, entries })
    }

    /// Assemble a skew-symmetric field from its strict upper triangle,
    /// listed row by row: `(0,1), (0,2), …, (1,2), …`.
    pub fn skew_from_upper(grid: &Grid, upper: Vec<ScalarField>) -> Result<Self> {
        let dim = grid.dim();
        if upper.len() != dim * (dim - 1) / 2 {
            return Err(Error::param("upper", "wrong number of upper-triangle entries"));
        }
        let mut m = MatrixField::zeros(grid);
        let mut it = upper.into_iter();
        for i in 0..dim {
            for j in i + 1..dim {
                let e = it.next().expect("counted above");
                e.same_grid(m.get(0, 0))?;
                m.set(j, i, -&e);
                m.set(i, j, e);
            }
        }
        Ok(m)
    }

    pub fn grid(&self) -> &Grid {
        self.entries[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        &self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, f: ScalarField) {
        self.entries[i * self.dim + j] = f;
    }

    pub fn entries(&self) -> &[ScalarField] {
        &self.entries
    }

    pub fn map_entries(&self, f: impl Fn(&ScalarField) -> ScalarField) -> MatrixField {
        MatrixField {
            dim: self.dim,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> MatrixField {
        let d = self.dim;
        let mut out = self.clone();
        for i in 0..d {
            for j in 0..d {
                out.entries[i * d + j] = self.entries[j * d + i].clone();
            }
        }
        out
    }

    pub fn axpy(&self, factor: f64, other: &MatrixField) -> MatrixField {
        MatrixField {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.axpy(factor, b))
                .collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> MatrixField {
        self.map_entries(|e| e.scale(factor))
    }

    /// Strict upper triangle, row by row.
    pub fn upper_triangle(&self) -> Vec<ScalarField> {
        let d = self.dim;
        let mut out = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                out.push(self.get(i, j).clone());
            }
        }
        out
    }

    /// `max|M + Mᵀ| / max(max|M|, tiny)`.
    pub fn skew_defect(&self) -> f64 {
        let d = self.dim;
        let mut defect: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                let a = self.get(i, j).samples();
                let b = self.get(j, i).samples();
                for (x, y) in a.iter().zip(b) {
                    defect = defect.max((x + y).abs());
                }
            }
        }
        defect / self.max_abs().max(f64::MIN_POSITIVE)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.max_abs()).fold(0.0, f64::max)
    }

    /// Entry values at flat index `p`, row-major `dim × dim`.
    #[inline]
    pub fn at(&self, p: usize) -> [[f64; MAX_DIM]; MAX_DIM] {
        let mut m = [[0.0; MAX_DIM]; MAX_DIM];
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[i][j] = self.entries[i * self.dim + j].samples()[p];
            }
        }
        m
    }

    pub(crate) fn from_pointwise(
        grid: &Grid,
        f: impl Fn(usize) -> [[f64; MAX_DIM]; MAX_DIM],
    ) -> MatrixField {
        let d = grid.dim();
        let mut data: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); d * d];
        for p in 0..grid.len() {
            let m = f(p);
            for i in 0..d {
                for j in 0..d {
                    data[i * d + j].push(m[i][j]);
                }
            }
        }
        MatrixField {
            dim: d,
            entries: data
                .into_iter()
                .map(|s| ScalarField::from_raw(grid.clone(), s))
                .collect(),
        }
    }
}

impl Sub for &MatrixField {
    type Output = MatrixField;
    fn sub(self, rhs: &MatrixField) -> MatrixField {
        self.axpy(-1.0, rhs)
    }
}
