//! Numerical toolkit for α-modulation spaces and fractional Schrödinger propagators.

pub mod cli;
pub mod error;
pub mod experiments;
pub(crate) mod fft;
pub mod frequency_partition;
pub mod nls4;
pub mod propagator;
pub mod regions;
pub mod spaces;

pub use error::{Error, Result};
