//! Localization-aided initial access and coverage analysis for millimetre-wave
//! road-side networks.
//!
//! Base stations sit on a line as a Poisson process. Each one serves the users
//! of its cell through a dictionary of progressively thinner beams, picked
//! from range and angle-of-arrival estimates whose accuracy follows the
//! Cramér–Rao bound. The crate evaluates the resulting beam-selection and
//! misalignment errors, the SINR and rate coverage, the delay of the access
//! procedure, and the localization/data split that maximizes rate coverage.

pub mod antenna;
pub mod config;
pub mod coverage;
pub mod dictionary;
pub mod error;
pub mod geometry;
pub mod initial_access;
pub mod localization;
pub mod montecarlo;
pub mod optimizer;
pub mod quad;
pub mod special;

pub use config::{CcdfForm, Config, ConfigError, NetworkConfig};
pub use error::{Error, Result};
