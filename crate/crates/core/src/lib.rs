//! Entanglement distribution over memory-equipped satellite optical links.
//!
//! The crate is split along the data flow of an experiment:
//!
//! * [`pass_model`] produces (or ingests) per-second link geometry and
//!   transmission for a ground station during a satellite pass.
//! * [`analytics`] holds the closed-form rate model: single-link rates, the
//!   differential-latency correction, dual-link rates and the onboard memory
//!   allocation rules.
//! * [`sim_engine`] is a seeded discrete-event simulation of the
//!   sender/receiver link protocol over one or two legs, with onboard
//!   entanglement swapping.
//! * [`validation`] predicts per-bin moments of the simulated counts and
//!   scores a simulation against them.
//! * [`scenario`] bundles reference geometries used by the CLI and tests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod error;
pub mod pass_model;
pub mod scenario;
pub mod sim_engine;
pub mod validation;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
