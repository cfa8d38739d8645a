//! Binary field snapshots.
//!
//! Layout, all little-endian: magic `EGL1`, `dim: u8`, `N: u32`, `L: f64`,
//! `kind: u8`, `components: u8`, then `components · N^dim` `f64` samples,
//! component-major, each in row-major axis order. A file may hold several
//! records back to back.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::{MatrixField, ScalarField, VectorField};
use crate::grid::Grid;
use crate::lagrangian::Diffeo;

pub const MAGIC: &[u8; 4] = b"EGL1";
const HEADER_LEN: usize = 4 + 1 + 4 + 8 + 1 + 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Scalar = 0,
    Vector = 1,
    Matrix = 2,
    /// Displacement `φ − id` of a diffeomorphism.
    Diffeo = 3,
    /// Strict upper triangle of a skew matrix field.
    Vorticity = 4,
}

impl Kind {
    fn from_tag(tag: u8) -> Result<Kind> {
        Ok(match tag {
            0 => Kind::Scalar,
            1 => Kind::Vector,
            2 => Kind::Matrix,
            3 => Kind::Diffeo,
            4 => Kind::Vorticity,
            other => return Err(Error::Snapshot(format!("unknown kind tag {other}"))),
        })
    }

    pub fn components(self, dim: usize) -> usize {
        match self {
            Kind::Scalar => 1,
            Kind::Vector | Kind::Diffeo => dim,
            Kind::Matrix => dim * dim,
            Kind::Vorticity => dim * (dim - 1) / 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Scalar => "scalar",
            Kind::Vector => "vector",
            Kind::Matrix => "matrix",
            Kind::Diffeo => "diffeo",
            Kind::Vorticity => "vorticity",
        }
    }
}

/// One decoded record.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub kind: Kind,
    pub grid: Grid,
    pub components: Vec<ScalarField>,
}

impl Snapshot {
    pub fn scalar(f: &ScalarField) -> Self {
        Snapshot {
            kind: Kind::Scalar,
            grid: f.grid().clone(),
            components: vec![f.clone()],
        }
    }

    pub fn vector(u: &VectorField) -> Self {
        Snapshot {
            kind: Kind::Vector,
            grid: u.grid().clone(),
            components: u.components().to_vec(),
        }
    }

    pub fn matrix(m: &MatrixField) -> Self {
        Snapshot {
            kind: Kind::Matrix,
            grid: m.grid().clone(),
            components: m.entries().to_vec(),
        }
    }

    pub fn diffeo(phi: &Diffeo) -> Self {
        Snapshot {
            kind: Kind::Diffeo,
            grid: phi.grid().clone(),
            components: phi.displacement().components().to_vec(),
        }
    }

    /// Stores only the strict upper triangle; fails for non-skew input.
    pub fn vorticity(omega: &MatrixField) -> Result<Self> {
        let defect = omega.skew_defect();
        if defect > crate::calculus::STRUCTURE_TOL {
            return Err(Error::NotSkew { asymmetry: defect });
        }
        Ok(Snapshot {
            kind: Kind::Vorticity,
            grid: omega.grid().clone(),
            components: omega.upper_triangle(),
        })
    }

    pub fn into_scalar(self) -> Result<ScalarField> {
        self.expect(Kind::Scalar)?;
        Ok(self.components.into_iter().next().expect("one component"))
    }

    pub fn into_vector(self) -> Result<VectorField> {
        self.expect(Kind::Vector)?;
        VectorField::from_components(self.components)
    }

    pub fn into_matrix(self) -> Result<MatrixField> {
        match self.kind {
            Kind::Matrix => MatrixField::from_entries(self.grid.dim(), self.components),
            Kind::Vorticity => MatrixField::skew_from_upper(&self.grid, self.components),
            other => Err(Error::Snapshot(format!("expected a matrix record, found {}", other.name()))),
        }
    }

    /// Rebuilds the map without a Jacobian check: a stored map is taken as is.
    pub fn into_diffeo(self) -> Result<Diffeo> {
        self.expect(Kind::Diffeo)?;
        Ok(Diffeo::from_displacement_unchecked(VectorField::from_components(self.components)?))
    }

    fn expect(&self, kind: Kind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Snapshot(format!(
                "expected a {} record, found {}",
                kind.name(),
                self.kind.name()
            )));
        }
        Ok(())
    }

    pub fn encode(&self, out: &mut impl Write) -> Result<()> {
        let dim = self.grid.dim();
        let count = self.kind.components(dim);
        if self.components.len() != count {
            return Err(Error::Snapshot(format!(
                "{} record needs {count} components, has {}",
                self.kind.name(),
                self.components.len()
            )));
        }
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(MAGIC);
        header.push(dim as u8);
        header.extend_from_slice(&(self.grid.n() as u32).to_le_bytes());
        header.extend_from_slice(&self.grid.length().to_le_bytes());
        header.push(self.kind as u8);
        header.push(count as u8);
        out.write_all(&header)?;
        let mut buf = Vec::with_capacity(self.grid.len() * 8);
        for c in &self.components {
            buf.clear();
            for v in c.samples() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.encode(&mut out)?;
        Ok(out)
    }
}

/// Decodes one record from the front of `bytes`, returning it with the
/// number of bytes consumed. Sizes are checked against the input before
/// anything is allocated.
pub fn decode(bytes: &[u8]) -> Result<(Snapshot, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Snapshot(format!("truncated header: {} bytes", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let dim = bytes[4] as usize;
    let n = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
    let length = f64::from_le_bytes(bytes[9..17].try_into().expect("8 bytes"));
    let kind = Kind::from_tag(bytes[17])?;
    let count = bytes[18] as usize;
    if !(2..=3).contains(&dim) {
        return Err(Error::Snapshot(format!("unsupported dimension {dim}")));
    }
    if count != kind.components(dim) {
        return Err(Error::Snapshot(format!(
            "{} record in {dim}D needs {} components, header says {count}",
            kind.name(),
            kind.components(dim)
        )));
    }
    let points = (0..dim).try_fold(1usize, |acc, _| acc.checked_mul(n));
    let payload = points
        .and_then(|p| p.checked_mul(count))
        .and_then(|p| p.checked_mul(8))
        .ok_or_else(|| Error::Snapshot("payload size overflows".into()))?;
    let available = bytes.len() - HEADER_LEN;
    if available < payload {
        return Err(Error::Snapshot(format!("truncated payload: need {payload} bytes, have {available}")));
    }
    let grid = Grid::new(dim, n, length).map_err(|e| Error::Snapshot(e.to_string()))?;
    let points = grid.len();
    let mut components = Vec::with_capacity(count);
    let mut at = HEADER_LEN;
    for c in 0..count {
        let samples: Vec<f64> = bytes[at..at + points * 8]
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        at += points * 8;
        let field = ScalarField::from_samples(&grid, samples)
            .map_err(|e| Error::Snapshot(format!("component {c}: {e}")))?;
        components.push(field);
    }
    Ok((Snapshot { kind, grid, components }, at))
}

/// Decodes every record in `bytes`.
pub fn decode_all(bytes: &[u8]) -> Result<Vec<Snapshot>> {
    let mut out = Vec::new();
    let mut rest = bytes;
    while !rest.is_empty() {
        let (snap, used) = decode(rest)?;
        out.push(snap);
        rest = &rest[used..];
    }
    Ok(out)
}

pub fn read_all(input: &mut impl Read) -> Result<Vec<Snapshot>> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    decode_all(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::vorticity;

    fn grid() -> Grid {
        Grid::new(2, 8, 3.0).unwrap()
    }

    #[test]
    fn round_trips_every_kind() {
        let g = grid();
        let u = VectorField::from_fn(&g, |x| [x[0].sin(), (x[0] + 2.0 * x[1]).cos(), 0.0]);
        let f = u.component(0).clone();
        let om = vorticity(&u);
        let phi = Diffeo::shift(&g, &[0.1, -0.2]);
        let mut bytes = Vec::new();
        for s in [
            Snapshot::scalar(&f),
            Snapshot::vector(&u),
            Snapshot::matrix(&om),
            Snapshot::diffeo(&phi),
            Snapshot::vorticity(&om).unwrap(),
        ] {
            s.encode(&mut bytes).unwrap();
        }
        let back = decode_all(&bytes).unwrap();
        assert_eq!(back.len(), 5);
        let mut it = back.into_iter();
        assert_eq!(it.next().unwrap().into_scalar().unwrap().samples(), f.samples());
        assert_eq!((&it.next().unwrap().into_vector().unwrap() - &u).max_abs(), 0.0);
        assert_eq!((&it.next().unwrap().into_matrix().unwrap() - &om).max_abs(), 0.0);
        let d = it.next().unwrap().into_diffeo().unwrap();
        assert_eq!((d.displacement() - phi.displacement()).max_abs(), 0.0);
        assert_eq!((&it.next().unwrap().into_matrix().unwrap() - &om).max_abs(), 0.0);
    }

    #[test]
    fn header_layout() {
        let bytes = Snapshot::scalar(&ScalarField::constant(&grid(), 1.5)).to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"EGL1");
        assert_eq!(bytes[4], 2);
        assert_eq!(u32::from_le_bytes(bytes[5..9].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(bytes[9..17].try_into().unwrap()), 3.0);
        assert_eq!((bytes[17], bytes[18]), (0, 1));
        assert_eq!(bytes.len(), HEADER_LEN + 64 * 8);
        assert_eq!(f64::from_le_bytes(bytes[19..27].try_into().unwrap()), 1.5);
    }

    #[test]
    fn rejects_corrupt_input() {
        let good = Snapshot::scalar(&ScalarField::constant(&grid(), 1.0)).to_bytes().unwrap();
        assert!(decode(&good[..10]).is_err());
        assert!(decode(&good[..good.len() - 1]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode(&bad).is_err());
        let mut bad = good.clone();
        bad[18] = 2;
        assert!(decode(&bad).is_err());
        let mut bad = good.clone();
        bad[5..9].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode(&bad).is_err());
        let mut bad = good.clone();
        bad[19..27].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(decode(&bad).is_err());
        let mut bad = good;
        bad[9..17].copy_from_slice(&(-1.0f64).to_le_bytes());
        assert!(decode(&bad).is_err());
    }

    #[test]
    fn vorticity_requires_skew() {
        let g = grid();
        let m = MatrixField::from_entries(2, vec![ScalarField::constant(&g, 1.0); 4]).unwrap();
        assert!(Snapshot::vorticity(&m).is_err());
    }
}
