//! One-dimensional conditional law of the centred state in the regime with
//! individual noise: a finite-volume solver for its density, co-evolved with
//! the common process, conditional copies along a realised path, the
//! empirical-mean gap `Δ^N`, and mollified drifts.

mod copies;
mod density;
mod mollify;
mod solver;

pub use copies::{conditional_drift_sample, delta_moment_estimate, sample_conditional_copies, DeltaStats};
pub use density::{write_density_csv, DensityField, SpatialGrid1D};
pub use mollify::mollify_drift;
pub use solver::{
    admissible_dt, coevolve_grid, coevolve_limit_b, coevolve_replication, coevolve_with_noise, fp_step,
    CoevolveOptions, CoevolvedPath,
};
