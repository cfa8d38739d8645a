//! Off-grid evaluation of periodic fields.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::field::ScalarField;
use crate::grid::{Grid, MAX_DIM};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Interpolation {
    /// Periodic cubic B-spline interpolant.
    #[default]
    CubicSpline,
    /// Periodic quintic B-spline interpolant.
    QuinticSpline,
    /// The trigonometric interpolant itself, summed over the occupied band.
    Fourier,
}

impl std::str::FromStr for Interpolation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cubic" | "cubic-spline" => Ok(Interpolation::CubicSpline),
            "quintic" | "quintic-spline" => Ok(Interpolation::QuinticSpline),
            "fourier" | "trig" => Ok(Interpolation::Fourier),
            other => Err(format!("unknown interpolation `{other}`")),
        }
    }
}

/// Fraction of energy in the outer third of the lattice above which
/// composition logs a warning.
const OUT_OF_BAND_WARN: f64 = 1e-2;

/// Prepared interpolant of one scalar field.
#[derive(Clone, Debug)]
pub struct Interpolant {
    grid: Grid,
    kind: Interpolation,
    /// Spline coefficients on the grid, or Fourier coefficients.
    coeffs: Vec<f64>,
    spectrum: Vec<Complex64>,
    /// Occupied integer band per axis for Fourier evaluation.
    band: i64,
}

impl Interpolant {
    pub fn new(f: &ScalarField, kind: Interpolation) -> Self {
        let grid = f.grid().clone();
        let spec = f.spectrum();
        warn_out_of_band(&grid, spec);
        match kind {
            Interpolation::CubicSpline | Interpolation::QuinticSpline => {
                let n = grid.n() as f64;
                let sym: Vec<f64> = (0..grid.n())
                    .map(|i| {
                        let th = 2.0 * PI * grid.kint(i) as f64 / n;
                        if kind == Interpolation::CubicSpline {
                            (4.0 + 2.0 * th.cos()) / 6.0
                        } else {
                            (66.0 + 52.0 * th.cos() + 2.0 * (2.0 * th).cos()) / 120.0
                        }
                    })
                    .collect();
                let mut pre = spec.to_vec();
                let dim = grid.dim();
                for (flat, c) in pre.iter_mut().enumerate() {
                    let idx = grid.multi_index(flat);
                    let d: f64 = idx[..dim].iter().map(|&i| sym[i]).product();
                    *c /= d;
                }
                Interpolant {
                    coeffs: grid.inverse(&pre),
                    grid,
                    kind,
                    spectrum: Vec::new(),
                    band: 0,
                }
            }
            Interpolation::Fourier => {
                let peak = spec.iter().fold(0.0f64, |m, c| m.max(c.norm()));
                let mut band = 0;
                grid.for_each_mode(|flat, k, _| {
                    if spec[flat].norm() > 1e-16 * peak {
                        band = k.iter().fold(band, |b, c| b.max(c.abs()));
                    }
                });
                Interpolant {
                    coeffs: Vec::new(),
                    spectrum: spec.to_vec(),
                    grid,
                    kind,
                    band,
                }
            }
        }
    }

    pub fn kind(&self) -> Interpolation {
        self.kind
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.eval_impl(x, false).0
    }

    /// Value and gradient.
    pub fn eval_grad(&self, x: &[f64]) -> (f64, [f64; MAX_DIM]) {
        self.eval_impl(x, true)
    }

    fn eval_impl(&self, x: &[f64], want_grad: bool) -> (f64, [f64; MAX_DIM]) {
        match self.kind {
            Interpolation::CubicSpline => self.spline::<4>(x, want_grad, cubic_weights),
            Interpolation::QuinticSpline => self.spline::<6>(x, want_grad, quintic_weights),
            Interpolation::Fourier => self.fourier(x, want_grad),
        }
    }

    fn spline<const P: usize>(
        &self,
        x: &[f64],
        want_grad: bool,
        weights: fn(f64) -> ([f64; P], [f64; P]),
    ) -> (f64, [f64; MAX_DIM]) {
        let n = self.grid.n() as i64;
        let h = self.grid.spacing();
        let dim = self.grid.dim();
        let lo = (P as i64 - 1) / 2;
        let mut base = [0i64; MAX_DIM];
        let mut w = [[0.0; P]; MAX_DIM];
        let mut dw = [[0.0; P]; MAX_DIM];
        for a in 0..dim {
            let u = x[a] / h;
            let i = u.floor();
            let (wa, da) = weights(u - i);
            base[a] = i as i64 - lo;
            w[a] = wa;
            dw[a] = da;
        }
        let idx = |a: usize, j: usize| (base[a] + j as i64).rem_euclid(n) as usize;
        let c = &self.coeffs;
        let nu = n as usize;
        let mut val = 0.0;
        let mut grad = [0.0; MAX_DIM];
        if dim == 2 {
            for j0 in 0..P {
                let row = idx(0, j0) * nu;
                let mut acc = 0.0;
                let mut acc_d = 0.0;
                for j1 in 0..P {
                    let v = c[row + idx(1, j1)];
                    acc += w[1][j1] * v;
                    if want_grad {
                        acc_d += dw[1][j1] * v;
                    }
                }
                val += w[0][j0] * acc;
                if want_grad {
                    grad[0] += dw[0][j0] * acc;
                    grad[1] += w[0][j0] * acc_d;
                }
            }
        } else {
            for j0 in 0..P {
                let i0 = idx(0, j0) * nu;
                for j1 in 0..P {
                    let row = (i0 + idx(1, j1)) * nu;
                    for j2 in 0..P {
                        let v = c[row + idx(2, j2)];
                        val += w[0][j0] * w[1][j1] * w[2][j2] * v;
                        if want_grad {
                            grad[0] += dw[0][j0] * w[1][j1] * w[2][j2] * v;
                            grad[1] += w[0][j0] * dw[1][j1] * w[2][j2] * v;
                            grad[2] += w[0][j0] * w[1][j1] * dw[2][j2] * v;
                        }
                    }
                }
            }
        }
        for g in grad.iter_mut().take(dim) {
            *g /= h;
        }
        (val, grad)
    }

    fn fourier(&self, x: &[f64], want_grad: bool) -> (f64, [f64; MAX_DIM]) {
        let grid = &self.grid;
        let n = grid.n() as i64;
        let dim = grid.dim();
        let unit = grid.xi_unit();
        let b = self.band;
        let width = (2 * b + 1) as usize;
        // e^{i k ξ_unit x_a} for k in -b..=b, per axis.
        let mut table: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
        for &xa in x.iter().take(dim) {
            let step = Complex64::from_polar(1.0, unit * xa);
            let mut row = vec![Complex64::new(0.0, 0.0); width];
            row[b as usize] = Complex64::new(1.0, 0.0);
            for k in 1..=b as usize {
                row[b as usize + k] = row[b as usize + k - 1] * step;
                row[b as usize - k] = row[b as usize + k].conj();
            }
            table.push(row);
        }
        let spec = &self.spectrum;
        let at = |k: &[i64]| -> Complex64 {
            let mut flat = 0usize;
            for &c in k {
                // The Nyquist index is represented once, as +N/2.
                if c == -n / 2 {
                    return Complex64::new(0.0, 0.0);
                }
                flat = flat * n as usize + c.rem_euclid(n) as usize;
            }
            spec[flat]
        };
        let mut val = Complex64::new(0.0, 0.0);
        let mut grad = [Complex64::new(0.0, 0.0); MAX_DIM];
        let ks: Vec<i64> = (-b..=b).collect();
        if dim == 2 {
            for (i0, &k0) in ks.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                let mut acc_d = Complex64::new(0.0, 0.0);
                for (i1, &k1) in ks.iter().enumerate() {
                    let term = at(&[k0, k1]) * table[1][i1];
                    acc += term;
                    if want_grad {
                        acc_d += term * (k1 as f64);
                    }
                }
                let e0 = table[0][i0];
                val += acc * e0;
                if want_grad {
                    grad[0] += acc * e0 * (k0 as f64);
                    grad[1] += acc_d * e0;
                }
            }
        } else {
            for (i0, &k0) in ks.iter().enumerate() {
                for (i1, &k1) in ks.iter().enumerate() {
                    for (i2, &k2) in ks.iter().enumerate() {
                        let term = at(&[k0, k1, k2]) * table[0][i0] * table[1][i1] * table[2][i2];
                        val += term;
                        if want_grad {
                            grad[0] += term * (k0 as f64);
                            grad[1] += term * (k1 as f64);
                            grad[2] += term * (k2 as f64);
                        }
                    }
                }
            }
        }
        let mut g = [0.0; MAX_DIM];
        for a in 0..dim {
            // d/dx e^{ikux} = iku e^{ikux}; real part of i z is -Im z.
            g[a] = -grad[a].im * unit;
        }
        (val.re, g)
    }

    /// Evaluate at many points.
    pub fn sample(&self, points: &[[f64; MAX_DIM]]) -> Vec<f64> {
        points.iter().map(|p| self.eval(p)).collect()
    }
}

fn warn_out_of_band(grid: &Grid, spec: &[Complex64]) {
    let third = grid.n() as i64 / 3;
    let mut total = 0.0;
    let mut outer = 0.0;
    grid.for_each_mode(|flat, k, _| {
        let e = spec[flat].norm_sqr();
        total += e;
        if k.iter().any(|c| c.abs() > third) {
            outer += e;
        }
    });
    if total > 0.0 && outer > OUT_OF_BAND_WARN * total {
        log::warn!(
            "interpolating a field with {:.1}% of its energy in the outer third of the lattice",
            100.0 * outer / total
        );
    }
}

fn cubic_weights(t: f64) -> ([f64; 4], [f64; 4]) {
    let s = 1.0 - t;
    let t2 = t * t;
    let t3 = t2 * t;
    (
        [
            s * s * s / 6.0,
            (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
            (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
            t3 / 6.0,
        ],
        [
            -s * s / 2.0,
            (3.0 * t2 - 4.0 * t) / 2.0,
            (-3.0 * t2 + 2.0 * t + 1.0) / 2.0,
            t2 / 2.0,
        ],
    )
}

fn quintic_weights(t: f64) -> ([f64; 6], [f64; 6]) {
    let s = 1.0 - t;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let s4 = s * s * s * s;
    (
        [
            s4 * s / 120.0,
            (26.0 - 50.0 * t + 20.0 * t2 + 20.0 * t3 - 20.0 * t4 + 5.0 * t5) / 120.0,
            (66.0 - 60.0 * t2 + 30.0 * t4 - 10.0 * t5) / 120.0,
            (26.0 + 50.0 * t + 20.0 * t2 - 20.0 * t3 - 20.0 * t4 + 10.0 * t5) / 120.0,
            (1.0 + 5.0 * t + 10.0 * t2 + 10.0 * t3 + 5.0 * t4 - 5.0 * t5) / 120.0,
            t5 / 120.0,
        ],
        [
            -5.0 * s4 / 120.0,
            (-50.0 + 40.0 * t + 60.0 * t2 - 80.0 * t3 + 25.0 * t4) / 120.0,
            (-120.0 * t + 120.0 * t3 - 50.0 * t4) / 120.0,
            (50.0 + 40.0 * t - 60.0 * t2 - 80.0 * t3 + 50.0 * t4) / 120.0,
            (5.0 + 20.0 * t + 30.0 * t2 + 20.0 * t3 - 25.0 * t4) / 120.0,
            5.0 * t4 / 120.0,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smooth(g: &Grid) -> ScalarField {
        ScalarField::from_fn(g, |x| (x[0] + 0.3).sin() * (2.0 * x[1]).cos() + 0.2 * x[1].sin())
    }

    fn exact(x: &[f64]) -> f64 {
        (x[0] + 0.3).sin() * (2.0 * x[1]).cos() + 0.2 * x[1].sin()
    }

    #[test]
    fn weights_partition_unity_and_derivatives() {
        for &t in &[0.0, 0.25, 0.5, 0.9] {
            let (w, d) = cubic_weights(t);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(d.iter().sum::<f64>().abs() < 1e-15);
            let (w, d) = quintic_weights(t);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(d.iter().sum::<f64>().abs() < 1e-14);
            let h = 1e-6;
            let (wp, _) = quintic_weights(t + h);
            let (wm, _) = quintic_weights(t - h);
            for j in 0..6 {
                assert!(((wp[j] - wm[j]) / (2.0 * h) - d[j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn all_modes_reproduce_grid_values() {
        let g = Grid::standard(2, 16).unwrap();
        let f = smooth(&g);
        for kind in [Interpolation::CubicSpline, Interpolation::QuinticSpline, Interpolation::Fourier] {
            let it = Interpolant::new(&f, kind);
            for p in (0..g.len()).step_by(7) {
                let x = g.point(p);
                assert!((it.eval(&x) - f.samples()[p]).abs() < 1e-13, "{kind:?}");
            }
        }
    }

    #[test]
    fn off_grid_accuracy_ordering() {
        let g = Grid::standard(2, 32).unwrap();
        let f = smooth(&g);
        let pts = [[0.123, 4.56, 0.0], [3.3, 1.01, 0.0], [6.2, 6.27, 0.0]];
        let err = |kind| {
            let it = Interpolant::new(&f, kind);
            pts.iter().map(|p| (it.eval(p) - exact(p)).abs()).fold(0.0, f64::max)
        };
        let c = err(Interpolation::CubicSpline);
        let q = err(Interpolation::QuinticSpline);
        let t = err(Interpolation::Fourier);
        assert!(c < 1e-4 && q < c && t < 1e-13, "{c} {q} {t}");
    }

    #[test]
    fn gradients_match_analytic() {
        let g = Grid::standard(2, 32).unwrap();
        let f = smooth(&g);
        let p = [1.7f64, 2.9];
        let want = [
            (p[0] + 0.3).cos() * (2.0 * p[1]).cos(),
            -2.0 * (p[0] + 0.3).sin() * (2.0 * p[1]).sin() + 0.2 * p[1].cos(),
        ];
        for (kind, tol) in [
            (Interpolation::CubicSpline, 1e-2),
            (Interpolation::QuinticSpline, 1e-4),
            (Interpolation::Fourier, 1e-12),
        ] {
            let (_, gr) = Interpolant::new(&f, kind).eval_grad(&p);
            assert!((gr[0] - want[0]).abs() < tol && (gr[1] - want[1]).abs() < tol, "{kind:?}");
        }
    }

    #[test]
    fn three_dimensional_spline() {
        let g = Grid::standard(3, 16).unwrap();
        let f = ScalarField::from_fn(&g, |x| x[0].sin() + (x[1] - x[2]).cos());
        let it = Interpolant::new(&f, Interpolation::QuinticSpline);
        let p = [0.4f64, 1.3, 2.2];
        let want = p[0].sin() + (p[1] - p[2]).cos();
        assert!((it.eval(&p) - want).abs() < 1e-4);
        let it = Interpolant::new(&f, Interpolation::Fourier);
        assert!((it.eval(&p) - want).abs() < 1e-12);
    }
}
