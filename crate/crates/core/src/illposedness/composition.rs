//! Separation for `ν(f, φ) = f∘φ⁻¹`.
//!
//! The base point is `(f•, id)` with `f•` a bump in one corner of the box. The
//! diffeomorphisms `φ_k = id + δφ/k` move points near the opposite corner
//! `x*` along the first axis; `δf_k` is a bump of radius
//! `δ_k = M / (2kL)` at `x*` normalized to `‖δf_k‖_s = R/2`. All maps are
//! explicit, so `f_k∘φ_k⁻¹` is evaluated from the analytic bump at the exact
//! preimage rather than through grid interpolation.

use super::{SeparationRow, SeparationSeries};
use crate::bump::{Bump, Plateau};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::{Grid, MAX_DIM};
use crate::spectral::Sobolev;

/// Profile of the perturbation `δφ = M·shape·e₁`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Perturbation {
    /// Bump normalized to `shape(x*) = 1`: `φ_k` is close to a translation
    /// near `x*`.
    Bump,
    /// Equal to 1 on `B_inner(x*)`: `φ_k` is exactly a translation there.
    Plateau { inner: f64 },
}

#[derive(Clone, Debug)]
pub struct CompositionConfig {
    pub n: usize,
    pub box_length: f64,
    pub dim: usize,
    pub base_radius: f64,
    pub base_amplitude: f64,
    /// `M = |δφ(x*)|`, must be below 1.
    pub m: f64,
    pub perturbation: Perturbation,
    /// Smallest admissible `δ_k` in grid cells.
    pub min_cells: f64,
}

impl Default for CompositionConfig {
    fn default() -> Self {
        CompositionConfig {
            n: 2048,
            box_length: 5.0,
            dim: 2,
            base_radius: 0.5,
            base_amplitude: 1.0,
            m: 0.4,
            perturbation: Perturbation::Bump,
            min_cells: 4.0,
        }
    }
}

/// `δφ` support radius. The construction needs `supp δφ ⊆ B₁(x*)`.
const PERTURBATION_RADIUS: f64 = 1.0;

enum Shape {
    Bump(Bump),
    Plateau(Plateau),
}

impl Shape {
    fn eval(&self, y: &[f64]) -> f64 {
        match self {
            Shape::Bump(b) => b.eval(y),
            Shape::Plateau(p) => p.eval(y),
        }
    }

    fn d0(&self, y: &[f64; MAX_DIM]) -> f64 {
        match self {
            Shape::Bump(b) => b.gradient(y)[0],
            Shape::Plateau(_) => self.fd(y, 0),
        }
    }

    fn grad(&self, y: &[f64; MAX_DIM], dim: usize) -> [f64; MAX_DIM] {
        match self {
            Shape::Bump(b) => b.gradient(y),
            Shape::Plateau(_) => {
                let mut g = [0.0; MAX_DIM];
                for (a, ga) in g.iter_mut().enumerate().take(dim) {
                    *ga = self.fd(y, a);
                }
                g
            }
        }
    }

    fn fd(&self, y: &[f64; MAX_DIM], a: usize) -> f64 {
        let h = 1e-6;
        let mut p = *y;
        let mut m = *y;
        p[a] += h;
        m[a] -= h;
        (self.eval(&p) - self.eval(&m)) / (2.0 * h)
    }
}

struct Layout {
    grid: Grid,
    base: Bump,
    x_star: Vec<f64>,
    shape: Shape,
    m: f64,
}

impl Layout {
    fn new(cfg: &CompositionConfig) -> Result<Self> {
        if !(cfg.m > 0.0 && cfg.m < 1.0) {
            return Err(Error::param("m", format!("need 0 < M < 1, got {}", cfg.m)));
        }
        if let Perturbation::Plateau { inner } = cfg.perturbation {
            if !(inner > 0.0 && inner < PERTURBATION_RADIUS) {
                return Err(Error::param("inner", "plateau radius must lie in (0, 1)"));
            }
        }
        let grid = Grid::new(cfg.dim, cfg.n, cfg.box_length)?;
        let l = cfg.box_length;
        let dim = cfg.dim as f64;
        // f• and x* sit on the diagonal at L/4 and 3L/4, at torus distance
        // L·√n/2. The argument needs dist(x*, K') > 2 with K' = supp f• + 1,
        // and every ball has to fit in its quarter of the box.
        let required = (2.0 * (cfg.base_radius + 3.0) / dim.sqrt())
            .max(4.0 * cfg.base_radius.max(PERTURBATION_RADIUS))
            .max(4.0 * PERTURBATION_RADIUS);
        let base_center = vec![0.25 * l; cfg.dim];
        let x_star = vec![0.75 * l; cfg.dim];
        if l < required {
            return Err(Error::SupportViolation {
                center: x_star,
                radius: PERTURBATION_RADIUS,
                required_box: required,
            });
        }
        let base = Bump::new(&grid, &base_center, cfg.base_radius, cfg.base_amplitude)?;
        let shape = match cfg.perturbation {
            // e·exp(-1/(1-q)) is 1 at the center.
            Perturbation::Bump => Shape::Bump(Bump::new(&grid, &x_star, PERTURBATION_RADIUS, std::f64::consts::E)?),
            Perturbation::Plateau { inner } => {
                Shape::Plateau(Plateau::new(&grid, &x_star, inner, PERTURBATION_RADIUS)?)
            }
        };
        Ok(Layout {
            grid,
            base,
            x_star,
            shape,
            m: cfg.m,
        })
    }

    fn near_star(&self, x: &[f64], radius: f64) -> bool {
        let l = self.grid.length();
        let mut q = 0.0;
        for (a, c) in self.x_star.iter().enumerate() {
            let mut z = x[a] - c;
            z -= l * (z / l).round();
            q += z * z;
        }
        q < radius * radius
    }

    /// Largest operator norm and smallest determinant of
    /// `dφ₁ = I + M e₁⊗∇shape` over the grid.
    fn lipschitz(&self) -> (f64, f64) {
        let dim = self.grid.dim();
        let mut worst: f64 = 1.0;
        let mut min_det: f64 = 1.0;
        for p in 0..self.grid.len() {
            let x = self.grid.point(p);
            if !self.near_star(&x, PERTURBATION_RADIUS) {
                continue;
            }
            let g = self.shape.grad(&x, dim);
            let mut j = [[0.0; MAX_DIM]; MAX_DIM];
            for (a, row) in j.iter_mut().enumerate().take(dim) {
                row[a] = 1.0;
            }
            for b in 0..dim {
                j[0][b] += self.m * g[b];
            }
            worst = worst.max(operator_norm(&j, dim));
            min_det = min_det.min(j[0][0]);
        }
        (worst, min_det)
    }

    fn delta_phi(&self) -> Result<VectorField> {
        let dim = self.grid.dim();
        let mut comps = vec![ScalarField::zeros(&self.grid); dim];
        comps[0] = ScalarField::from_fn(&self.grid, |x| self.m * self.shape.eval(x));
        VectorField::from_components(comps)
    }

    /// Preimage of `x` under `id + (M/k)·shape·e₁`. Only the first coordinate
    /// moves, so this is a monotone scalar equation solved by safeguarded
    /// Newton.
    fn preimage(&self, x: &[f64; MAX_DIM], k: usize) -> Result<[f64; MAX_DIM]> {
        let c = self.m / k as f64;
        if !self.near_star(x, PERTURBATION_RADIUS + c) {
            return Ok(*x);
        }
        let mut y = *x;
        let f = |y: &[f64; MAX_DIM]| y[0] + c * self.shape.eval(y) - x[0];
        // y₀ lies in [x₀ - c, x₀] because 0 ≤ shape ≤ 1.
        let (mut lo, mut hi) = (x[0] - c, x[0]);
        y[0] = x[0] - c * self.shape.eval(x);
        for _ in 0..100 {
            let r = f(&y);
            if r.abs() < 1e-14 {
                return Ok(y);
            }
            if r > 0.0 {
                hi = y[0];
            } else {
                lo = y[0];
            }
            let slope = 1.0 + c * self.shape.d0(&y);
            let mut next = y[0] - r / slope;
            if !(slope > 0.0) || next <= lo || next >= hi {
                next = 0.5 * (lo + hi);
            }
            y[0] = next;
            if hi - lo < 1e-15 {
                return Ok(y);
            }
        }
        Err(Error::Inversion {
            iterations: 100,
            residual: f(&y).abs(),
        })
    }
}

fn operator_norm(j: &[[f64; MAX_DIM]; MAX_DIM], dim: usize) -> f64 {
    // Power iteration on JᵀJ.
    let mut v = [1.0, 0.7, 0.3];
    let mut lambda = 0.0;
    for _ in 0..60 {
        let mut jv = [0.0; MAX_DIM];
        for a in 0..dim {
            for b in 0..dim {
                jv[a] += j[a][b] * v[b];
            }
        }
        let mut w = [0.0; MAX_DIM];
        for b in 0..dim {
            for a in 0..dim {
                w[b] += j[a][b] * jv[a];
            }
        }
        let norm = w[..dim].iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        for b in 0..dim {
            v[b] = w[b] / norm;
        }
    }
    lambda.sqrt()
}

/// Composition separation with default layout and grid.
pub fn composition_experiment(r: f64, k_max: usize, s: f64) -> Result<SeparationSeries> {
    composition_experiment_with(&CompositionConfig::default(), r, k_max, s)
}

/// Rows `k = 1..=k_max` (fewer when `δ_k` drops below `min_cells` grid cells).
///
/// `input_gap = ‖δφ‖_s/k`, `output_gap = ‖f_k∘φ_k⁻¹ − f_k‖_s`. Auxiliary
/// columns: `moved = ‖δf_k∘φ_k⁻¹‖_s`, `still = ‖δf_k‖_s`, their
/// Pythagorean combination, the ratio `moved/still` and `delta_k`.
pub fn composition_experiment_with(cfg: &CompositionConfig, r: f64, k_max: usize, s: f64) -> Result<SeparationSeries> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::param("R", format!("must be positive, got {r}")));
    }
    if k_max == 0 {
        return Err(Error::param("kmax", "need at least one k"));
    }
    if !(s.is_finite() && s > cfg.dim as f64 / 2.0 + 1.0) {
        return Err(Error::param("s", format!("need s > n/2 + 1, got {s}")));
    }
    let lay = Layout::new(cfg)?;
    let grid = &lay.grid;
    let h = grid.spacing();
    let (lip, min_det) = lay.lipschitz();
    if !(min_det > 0.0) {
        return Err(Error::param(
            "m",
            format!("id + δφ is not a diffeomorphism (min det {min_det:.3}); lower M"),
        ));
    }
    let dphi_norm = lay.delta_phi()?.sobolev_norm(s);
    let delta = |k: usize| lay.m / (2.0 * k as f64 * lip);
    let resolvable = (1..=k_max).take_while(|&k| delta(k) >= cfg.min_cells * h).last();

    let mut series = SeparationSeries::new("composition", &["moved", "still", "pythagoras", "moved_over_still", "delta_k"]);
    series.set_meta("R", r);
    series.set_meta("s", s);
    series.set_meta("grid", format!("dim={} N={} L={}", cfg.dim, cfg.n, cfg.box_length));
    series.set_meta("M", lay.m);
    series.set_meta("lipschitz", lip);
    series.set_meta("delta_phi_norm", dphi_norm);
    series.set_meta("perturbation", format!("{:?}", cfg.perturbation));
    series.set_meta("x_star", format!("{:?}", lay.x_star));
    let last = match resolvable {
        Some(k) => k,
        None => {
            series.truncated_at = Some(1);
            series.watermark = delta(1) / h;
            log::warn!("composition: δ_1 = {:.3e} is below {} grid cells", delta(1), cfg.min_cells);
            return Ok(series);
        }
    };
    if last < k_max {
        series.truncated_at = Some(last + 1);
        log::warn!("composition: series truncated at k = {} by grid resolution", last + 1);
    }
    series.watermark = delta(last) / h;

    let dim = grid.dim();
    for k in 1..=last {
        let dk = delta(k);
        let unit = Bump::new(grid, &lay.x_star, dk, 1.0)?;
        let unit_norm = unit.sample(grid).sobolev_norm(s);
        if unit_norm == 0.0 {
            return Err(Error::param("kmax", format!("bump of radius {dk:.3e} vanishes on the grid")));
        }
        let df = Bump::new(grid, &lay.x_star, dk, 0.5 * r / unit_norm)?;
        let mut moved = vec![0.0; grid.len()];
        let mut gap = vec![0.0; grid.len()];
        let mut still = vec![0.0; grid.len()];
        for p in 0..grid.len() {
            let x = grid.point(p);
            let y = lay.preimage(&x, k)?;
            let a = df.eval(&y[..dim]);
            let b = df.eval(&x[..dim]);
            moved[p] = a;
            still[p] = b;
            gap[p] = (lay.base.eval(&y[..dim]) + a) - (lay.base.eval(&x[..dim]) + b);
        }
        let moved = ScalarField::from_samples(grid, moved)?.sobolev_norm(s);
        let still = ScalarField::from_samples(grid, still)?.sobolev_norm(s);
        let out = ScalarField::from_samples(grid, gap)?.sobolev_norm(s);
        series.push(SeparationRow {
            k,
            input_gap: dphi_norm / k as f64,
            output_gap: out,
            aux: vec![moved, still, moved.hypot(still), moved / still, dk],
            flags: String::new(),
        })?;
    }
    let inv_c = series.aux("moved_over_still").unwrap_or_default().into_iter().fold(f64::INFINITY, f64::min);
    series.set_meta("inv_c", inv_c);
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(perturbation: Perturbation) -> CompositionConfig {
        CompositionConfig {
            n: 256,
            m: 0.3,
            perturbation,
            ..Default::default()
        }
    }

    #[test]
    fn preimage_inverts_forward_map() {
        let lay = Layout::new(&small(Perturbation::Bump)).unwrap();
        for k in [1, 3] {
            let c = lay.m / k as f64;
            for p in [[3.6, 3.8, 0.0], [3.75, 3.75, 0.0], [4.4, 3.4, 0.0], [1.0, 1.0, 0.0]] {
                let y = lay.preimage(&p, k).unwrap();
                let fwd = y[0] + c * lay.shape.eval(&y[..2]);
                assert!((fwd - p[0]).abs() < 1e-12);
                assert_eq!(y[1], p[1]);
            }
        }
    }

    #[test]
    fn plateau_moves_center_by_m_over_k() {
        let lay = Layout::new(&small(Perturbation::Plateau { inner: 0.25 })).unwrap();
        let y = lay.preimage(&[3.75 + 0.3 / 2.0, 3.75, 0.0], 2).unwrap();
        assert!((y[0] - 3.75).abs() < 1e-12);
    }

    #[test]
    fn small_box_rejected_with_required_size() {
        let cfg = CompositionConfig {
            box_length: 3.0,
            n: 64,
            ..Default::default()
        };
        let too_big = CompositionConfig {
            n: 256,
            m: 0.9,
            ..Default::default()
        };
        assert!(composition_experiment_with(&too_big, 0.1, 2, 2.5).is_err());
        match composition_experiment_with(&cfg, 0.1, 2, 2.5) {
            Err(Error::SupportViolation { required_box, .. }) => assert!(required_box > 3.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gaps_on_coarse_grid() {
        let s = composition_experiment_with(&small(Perturbation::Bump), 0.1, 3, 2.5).unwrap();
        assert!(!s.rows.is_empty());
        for row in &s.rows {
            assert!((row.aux[1] - 0.05).abs() < 1e-12);
            assert!(row.output_gap > 0.5 * 0.1 * row.aux[3]);
        }
    }
}
