//! Simulation and duty-cycle control of a biomass/toxin plant whose toxin is
//! removed by a pulse-width-modulated input.
//!
//! The crate covers the plant model and its equilibria ([`model`]), RK4
//! integration aligned to the pulse edges ([`integrator`]), the averaged model
//! and feedforward duty design ([`averaging`]), open-loop, PI and
//! receding-horizon controllers ([`controllers`], [`ga`]), performance
//! metrics ([`metrics`]) and the tuning and robustness experiments
//! ([`experiments`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod config;
pub mod controllers;
pub mod error;
pub mod experiments;
pub mod ga;
pub mod integrator;
pub mod metrics;
pub mod model;
pub mod rng;

pub use error::{PsnfError, Result};
pub use model::{PlantParams, PulseWave, State};
