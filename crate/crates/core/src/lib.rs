//! Agent-based epidemic simulation over layered contact networks.
//!
//! The crate builds a synthetic population with home, school, work, and
//! community contact layers, runs a discrete-time stochastic disease model
//! with a COVID-like course over it, applies policy interventions (testing,
//! tracing, quarantine, masking, vaccination and boosting, distancing), and
//! provides the calibration, R0-estimation, and scenario-sweep machinery to
//! compare policy counterfactuals at desk scale.

pub mod analysis;
pub mod config;
pub mod engine;
pub mod epi;
pub mod error;
pub mod interventions;
pub mod population;
pub mod rng;
pub mod scenarios;
pub mod sweep;
pub mod tables;

pub use error::{Error, Result};
