//! Network parameters, slot division, link targets and the constants derived
//! from them.
//!
//! Units are fixed to metres, milliseconds, milliwatts and microjoules, so
//! that `mW * ms = uJ` and no conversion factor appears anywhere else.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analytic;

/// Static physical and network constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    /// Time-space density of reader-tag pairs, per m^2 per ms.
    pub lambda: f64,
    /// Antennas per reader.
    pub antennas: usize,
    /// Multi-antenna gain factor; the dedicated link gain is `rho * antennas`.
    pub rho: f64,
    /// Reader transmit power, mW.
    pub p_t: f64,
    /// Energy-harvest efficiency.
    pub eta: f64,
    /// Reader-tag distance inside each pair, m.
    pub d0: f64,
    /// Short-range path-loss cutoff, m.
    pub r_o: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Backscatter coefficient.
    pub beta: f64,
    /// Receiver noise power, mW.
    pub n0: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            lambda: 0.03,
            antennas: 3,
            rho: 2.0 / 3.0,
            p_t: 100.0,
            eta: 0.8,
            d0: 2.0,
            r_o: 2.0,
            alpha: 3.0,
            beta: 0.8,
            n0: 1e-9,
        }
    }
}

impl NetworkParams {
    /// Gain of the beamformed dedicated link, `G = rho * M`.
    pub fn gain(&self) -> f64 {
        self.rho * self.antennas as f64
    }

    /// Bounded distance `max(d, r_o)` used by the energy-transfer path loss.
    pub fn bounded_distance(&self, d: f64) -> f64 {
        d.max(self.r_o)
    }

    /// Received power factor `G * d0^-alpha` of the dedicated link.
    pub fn dedicated_gain(&self) -> f64 {
        self.gain() * self.d0.powf(-self.alpha)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_antennas(mut self, antennas: usize) -> Self {
        self.antennas = antennas;
        self
    }
}

/// Division of one transmission slot into harvest and backscatter phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotConfig {
    /// Energy-harvest phase, ms.
    pub t1: f64,
    /// Backscatter-modulation phase, ms.
    pub t2: f64,
}

impl Default for SlotConfig {
    fn default() -> Self {
        SlotConfig { t1: 0.5, t2: 0.5 }
    }
}

impl SlotConfig {
    pub fn new(t1: f64, t2: f64) -> Self {
        SlotConfig { t1, t2 }
    }

    /// Whole slot length `T = T1 + T2`.
    pub fn total(&self) -> f64 {
        self.t1 + self.t2
    }
}

/// Per-link targets and outage caps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkTargets {
    /// Target SINR, linear.
    pub gamma_r: f64,
    /// Activation energy, uJ.
    pub e_c: f64,
    /// Energy-outage cap.
    pub eps_e: f64,
    /// Information-outage cap.
    pub eps_i: f64,
}

impl Default for LinkTargets {
    fn default() -> Self {
        LinkTargets {
            gamma_r: db_to_linear(5.0),
            e_c: 6.0,
            eps_e: 0.4,
            eps_i: 0.4,
        }
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub requirement: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.requirement)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "invalid configuration: {}", msgs.join("; "))
    }
}

/// Checks every invariant and reports all violations at once.
pub fn validate(
    params: &NetworkParams,
    slot: &SlotConfig,
    targets: &LinkTargets,
) -> Result<(), ValidationError> {
    let mut violations = Vec::new();
    let mut check = |ok: bool, field: &'static str, requirement: &'static str| {
        if !ok {
            violations.push(Violation { field, requirement });
        }
    };

    // NaN fails every comparison below, which is what we want.
    check(params.alpha > 2.0, "alpha", "must exceed 2");
    check(params.d0 >= 1.0, "d0", "must be at least 1");
    check(params.r_o >= 1.0, "r_o", "must be at least 1");
    check(
        params.eta > 0.0 && params.eta <= 1.0,
        "eta",
        "must lie in (0, 1]",
    );
    check(
        params.beta > 0.0 && params.beta <= 1.0,
        "beta",
        "must lie in (0, 1]",
    );
    check(
        params.lambda >= 0.0 && params.lambda.is_finite(),
        "lambda",
        "must be non-negative",
    );
    check(
        params.p_t > 0.0 && params.p_t.is_finite(),
        "P_T",
        "must be positive",
    );
    check(
        params.n0 >= 0.0 && params.n0.is_finite(),
        "N0",
        "must be non-negative",
    );
    check(params.antennas >= 1, "M", "must be at least 1");
    check(
        params.rho > 0.0 && params.rho.is_finite(),
        "rho",
        "must be positive",
    );
    check(
        slot.t1 > 0.0 && slot.t1.is_finite(),
        "T1",
        "must be positive",
    );
    check(
        slot.t2 > 0.0 && slot.t2.is_finite(),
        "T2",
        "must be positive",
    );
    check(
        targets.gamma_r > 0.0 && targets.gamma_r.is_finite(),
        "gamma_R",
        "must be positive",
    );
    check(
        targets.e_c >= 0.0 && targets.e_c.is_finite(),
        "E_C",
        "must be non-negative",
    );
    check(
        targets.eps_e > 0.0 && targets.eps_e < 1.0,
        "eps_e",
        "must lie in (0, 1)",
    );
    check(
        targets.eps_i > 0.0 && targets.eps_i < 1.0,
        "eps_i",
        "must lie in (0, 1)",
    );

    if violations.is_empty() {
        Ok(())
    } else {
        Err(ValidationError { violations })
    }
}

/// Constants shared by the outage and throughput expressions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// `2 / alpha`
    pub delta: f64,
    /// `4 pi^2 / ((2 + alpha) sin(delta pi))`
    pub big_delta: f64,
    /// `gamma_R * d0^alpha`
    pub vartheta: f64,
    /// `vartheta^delta * big_delta`
    pub tau: f64,
    /// Average incident power at a tag, mW.
    pub ybar_sq: f64,
    /// Noise normalised by the backscattered power.
    pub sigma_sq: f64,
    /// Density of tags that survive the harvest phase.
    pub lambda_t: f64,
}

/// `Delta(alpha) = 4 pi^2 / ((2 + alpha) sin(2 pi / alpha))`.
pub fn interference_delta(alpha: f64) -> f64 {
    let delta = 2.0 / alpha;
    4.0 * PI * PI / ((2.0 + alpha) * (delta * PI).sin())
}

/// Average incident power `E{E_H} / (eta T1)` at any tag.
pub fn mean_incident_power(params: &NetworkParams, slot: &SlotConfig) -> f64 {
    analytic::mean_harvested_energy(params, slot) / (params.eta * slot.t1)
}

pub fn derive(
    params: &NetworkParams,
    slot: &SlotConfig,
    targets: &LinkTargets,
    p_eo: f64,
) -> DerivedConstants {
    let delta = 2.0 / params.alpha;
    let big_delta = interference_delta(params.alpha);
    let vartheta = targets.gamma_r * params.d0.powf(params.alpha);
    let tau = vartheta.powf(delta) * big_delta;
    let ybar_sq = mean_incident_power(params, slot);
    let sigma_sq = params.n0 / (params.beta * ybar_sq);
    let lambda_t = (1.0 - p_eo.clamp(0.0, 1.0)) * params.lambda;
    DerivedConstants {
        delta,
        big_delta,
        vartheta,
        tau,
        ybar_sq,
        sigma_sq,
        lambda_t,
    }
}

/// Per-link rate `log2(1 + gamma_R)` in bits per ms of backscatter phase.
pub fn link_rate(gamma_r: f64) -> f64 {
    (1.0 + gamma_r).log2()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear(dbm)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    linear_to_db(mw)
}
