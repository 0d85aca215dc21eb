//! Time-space Poisson network simulator.
//!
//! Every trial draws its own realization from a counter-based stream, so each
//! estimate is a pure function of the parameters, the seed and the trial
//! count, whatever the number of worker threads.

pub mod energy;
pub mod estimate;
pub mod joint;
pub mod network;
pub(crate) mod rng;
pub mod sinr;

pub use energy::{
    harvested_energy, integrate_power, interferer_energy, riemann_power, Contribution,
};
pub use estimate::{
    estimate_energy_moments, estimate_energy_outage, estimate_energy_outage_sweep,
    estimate_info_outage, estimate_outage_grid, estimate_throughput, truncation_sensitivity,
    EnergyMomentEstimate, EstimatorResult, McSettings, Mode, OutageGrid, TruncationSensitivity,
    TruncationShift, MIN_TRIALS, Z_99,
};
pub use network::{
    sample_network, NetworkRealization, SimWindow, WindowKind, DEFAULT_R_HARVEST, DEFAULT_R_INTERF,
};
pub use sinr::{simulate_sinr, Activity};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("at least {minimum} trials are required, got {trials}")]
    TooFewTrials { trials: u64, minimum: u64 },
    #[error("invalid simulation window: {0}")]
    InvalidWindow(String),
    #[error("interference-plus-noise matrix is not positive definite")]
    NotPositiveDefinite,
    #[error(
        "typical tag never reached E_C = {e_c} uJ in {trials} trials; conditional outage undefined"
    )]
    Degenerate { e_c: f64, trials: u64 },
    #[error("worker pool: {0}")]
    Workers(String),
}
