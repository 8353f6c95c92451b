//! Radio-navigation (RNSS) inter-system compatibility toolkit.
//!
//! The crate models GNSS and LEO navigation signal spectra, computes spectral
//! separation coefficients and the resulting C/N0 degradation of incumbent
//! signals, estimates constellation aggregation gain, and cross-checks the
//! analytic predictions with a genie-aided baseband correlator simulation.
//!
//! Module map:
//!
//! * [`catalog`] signal, noise-environment and constellation data model, JSON
//!   ingestion and the built-in `paper-2025` catalog.
//! * [`waveform`] PRN generation, BPSK and EFQPSK baseband modulation.
//! * [`spectrum`] closed-form and Welch-estimated power spectral densities,
//!   occupied bandwidth.
//! * [`interference`] spectral separation, noise aggregation and degradation
//!   reports.
//! * [`aggregation`] circular Walker constellations, link budget and the
//!   aggregation gain factor.
//! * [`basebandsim`] synthetic victim + interferer + noise scenarios and the
//!   power-ramp protocol.

// `!(x > lo)` style guards are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod basebandsim;
pub mod catalog;
pub mod error;
pub mod interference;
pub mod rng;
pub mod spectrum;
pub mod units;
pub mod waveform;

pub use error::{Error, Result, Violation};
