//! Pseudo-spectral laboratory for the incompressible Euler equation on a
//! periodic box, written in a pressure-free form `∂_t u + (u·∇)u = ∇B(u)` and
//! in Lagrangian form as a geodesic flow on diffeomorphisms.

pub mod bform;
pub mod bump;
pub mod calculus;
pub mod error;
pub mod eulerian;
pub mod field;
pub mod grid;
pub mod illposedness;
pub mod invariants;
pub mod io;
pub mod lagrangian;
pub mod random;
pub mod spectral;

pub use bform::BAssembly;
pub use error::{Error, Result};
pub use field::{MatrixField, ScalarField, VectorField};
pub use grid::Grid;
pub use spectral::{Sobolev, SpectralMultiplier};
