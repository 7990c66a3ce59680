//! Numerical laboratory for the bi-Yang-Baxter sigma-model.

pub mod algebra;
pub mod error;
pub mod fourier;
pub mod group;
pub mod ladder;
pub mod lax;
pub mod model;
pub mod registry;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
