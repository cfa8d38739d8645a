//! Seeded random band-limited test fields.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::leray_project;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::Grid;
use crate::spectral::Sobolev;

/// Deterministic generator used across tests, the CLI and experiments.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real field with random coefficients on `0 < max_a |k_a| ≤ band` (integer
/// wavenumbers), amplitudes decaying like `(1+|k|²)^{-decay/2}`, mean zero.
pub fn random_scalar<R: Rng>(grid: &Grid, band: i64, decay: f64, rng: &mut R) -> Result<ScalarField> {
    if band < 1 || band > grid.dealias_k() {
        return Err(Error::param(
            "band",
            format!("must lie in 1..={} for this grid", grid.dealias_k()),
        ));
    }
    let n = grid.n() as i64;
    let dim = grid.dim();
    let mut spec = vec![Complex64::new(0.0, 0.0); grid.len()];
    let idx = |k: i64| k.rem_euclid(n) as usize;
    // Draw on one half-space and mirror to keep conjugate symmetry.
    let mut modes = Vec::new();
    grid.for_each_mode(|_, k, _| {
        if k[..dim].iter().all(|c| c.abs() <= band) {
            let first = k[..dim].iter().copied().find(|&c| c != 0);
            if matches!(first, Some(c) if c > 0) {
                modes.push(k);
            }
        }
    });
    for k in modes {
        let k2: i64 = k[..dim].iter().map(|c| c * c).sum();
        let amp = (1.0 + k2 as f64).powf(-decay / 2.0);
        let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
        let pos: Vec<usize> = k[..dim].iter().map(|&c| idx(c)).collect();
        let neg: Vec<usize> = k[..dim].iter().map(|&c| idx(-c)).collect();
        spec[grid.flat_index(&pos)] = c;
        spec[grid.flat_index(&neg)] = c.conj();
    }
    Ok(ScalarField::from_hermitian_spectrum(grid, spec))
}

/// Random vector field with independent [`random_scalar`] components.
pub fn random_vector<R: Rng>(grid: &Grid, band: i64, decay: f64, rng: &mut R) -> Result<VectorField> {
    let comps = (0..grid.dim())
        .map(|_| random_scalar(grid, band, decay, rng))
        .collect::<Result<Vec<_>>>()?;
    VectorField::from_components(comps)
}

/// Mean-free divergence-free random field scaled to `‖u‖_s = norm`.
pub fn random_div_free<R: Rng>(
    grid: &Grid,
    band: i64,
    s: f64,
    norm: f64,
    rng: &mut R,
) -> Result<VectorField> {
    let u = leray_project(&random_vector(grid, band, 2.0, rng)?);
    let current = u.sobolev_norm(s);
    Ok(u.scale(norm / current))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::divergence;
    use crate::spectral::is_dealiased;

    #[test]
    fn deterministic_and_band_limited() {
        let g = Grid::standard(2, 32).unwrap();
        let a = random_scalar(&g, 4, 1.0, &mut rng(7)).unwrap();
        let b = random_scalar(&g, 4, 1.0, &mut rng(7)).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert!(a.mean().abs() < 1e-15);
        assert!(is_dealiased(&a, 1e-14));
        assert!(random_scalar(&g, 11, 1.0, &mut rng(7)).is_err());
    }

    #[test]
    fn div_free_normalized() {
        let g = Grid::standard(2, 32).unwrap();
        let u = random_div_free(&g, 5, 3.0, 0.5, &mut rng(1)).unwrap();
        assert!((u.sobolev_norm(3.0) - 0.5).abs() < 1e-13);
        assert!(divergence(&u).max_abs() < 1e-13);
    }
}
