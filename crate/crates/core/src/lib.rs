//! Performance analysis and optimization of asynchronous wireless-powered
//! backscatter networks.
//!
//! Reader-tag pairs arrive as a Poisson process over the plane and time. Each
//! tag first harvests energy from every active reader for `T1`, then
//! backscatters its reader's carrier for `T2`. This crate provides:
//!
//! - the parameter model and derived constants ([`model`]),
//! - closed-form energy/information outage and spatial throughput ([`analytic`]),
//! - slot and density optimization ([`optimize`]),
//! - a time-space Poisson Monte Carlo simulator that checks all of the above
//!   ([`montecarlo`]).

pub mod analytic;
pub mod model;
pub mod montecarlo;
pub mod optimize;
pub mod special;

pub use analytic::{CantelliBounds, EnergyMoments, GammaFit, NoiseRegime, Performance};
pub use model::{DerivedConstants, LinkTargets, NetworkParams, SlotConfig, ValidationError};
