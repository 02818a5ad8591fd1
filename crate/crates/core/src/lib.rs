//! Matched-filter and short-window cross-correlation detection of chirp-like
//! signals in coloured noise, with a synthetic-data and Monte-Carlo harness.

pub mod conditioning;
pub mod detection;
pub mod error;
pub mod harness;
pub mod series;
pub mod simulation;
pub mod templates;

pub use error::{Error, Result};
pub use series::{PowerSpectrum, TimeSeries};
