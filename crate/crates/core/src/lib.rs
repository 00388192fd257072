//! Conformal kernel, lattice loop sampler, events and estimators for
//! stress-tensor insertions in loop ensembles.

pub mod conformal;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod domains;
pub mod events;
pub mod sampler;
pub mod stats;
pub mod derivative;
pub mod estimators;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
