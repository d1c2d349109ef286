//! Simulation of the geometrically exact nonlinear stiff string.

pub mod banded;
pub mod config;
pub mod dispersion;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod output;
pub mod params;
pub mod reference;
pub mod spatial;
pub mod stepper;

pub use error::{Error, Result};
