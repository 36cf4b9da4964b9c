//! Simulation and verification toolkit for McKean-Vlasov dynamics whose
//! interaction is through the conditional mean given a common noise.
//!
//! Two regimes are covered. Without individual noise (`sigma == 0`) the drift
//! must be Lipschitz in the state and the limit is sampled exactly through a
//! deterministic flow map plus a Girsanov reweighting. With individual noise the
//! drift may be merely bounded and measurable; in one dimension the limit is
//! realised by co-evolving the common-noise process with a Fokker-Planck density.

pub mod cli;
pub mod error;
pub mod flow;
pub mod fokker_planck;
pub mod metrics;
pub mod model;
pub mod simulate;

pub use error::{Error, Result};
