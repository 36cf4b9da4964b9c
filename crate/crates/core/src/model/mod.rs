//! Shared value types: time grids, paths, drifts, initial laws and random streams.

mod config;
mod drift;
mod grid;
mod law;
mod path;
mod rng;
mod sum;

pub use config::SimConfig;
pub use drift::{sign, DriftFn, DriftKind, DriftSpec, Smoothness};
pub use grid::{make_grid, TimeGrid};
pub use law::{sample_initial, InitialLaw, LawRepr};
pub use path::PathBundle;
pub use rng::{brownian_increments, experiment_key, Purpose, RngStream, StreamId};
pub(crate) use sum::FixedSum;
