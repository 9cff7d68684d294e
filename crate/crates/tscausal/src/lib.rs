//! Causal discovery toolkit for IT-monitoring time series.
//!
//! The crate covers the full benchmark pipeline: ingesting raw, possibly
//! misaligned metric series ([`data`]), resampling them onto a shared clock
//! ([`align`]), running a suite of discovery algorithms ([`discovery`]),
//! projecting their native outputs down to summary causal graphs
//! ([`graphs`]), and scoring those against a ground-truth graph ([`eval`]).
//! A linear-SEM simulator ([`sim`]) provides synthetic data with known
//! structure, and [`runner`] ties everything together behind a config file.

pub mod align;
pub mod data;
pub mod discovery;
pub mod error;
pub mod eval;
pub mod graphs;
pub mod runner;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
