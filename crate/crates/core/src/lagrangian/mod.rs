//! Lagrangian side: diffeomorphisms, the geodesic system and flow maps.

pub mod diffeo;
pub mod flow;
pub mod geodesic;
pub mod interp;

pub use diffeo::{
    compose_matrix, compose_scalar, compose_vector, lipschitz_ratio, sample_at, Diffeo,
    InversionConfig, InversionReport,
};
pub use flow::{eulerian_from_lagrangian, flow_of, support_radius, vorticity_pullback};
pub use geodesic::{Geodesic, GeodesicConfig, GeodesicState};
pub use interp::{Interpolant, Interpolation};
