//! Persistence and report output: binary snapshots, run configuration, CSV
//! tables and SVG plots.

pub mod config;
pub mod csv;
pub mod snapshot;
pub mod svg;

pub use config::{Experiment, Initial, Mode, RunConfig};
pub use snapshot::{decode, decode_all, Kind, Snapshot};
