//! Closed-form performance expressions: harvested-energy moments, the
//! moment-matched Gamma approximation of the energy outage, its Cantelli
//! bounds, the information outage and the spatial throughput.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::model::{self, DerivedConstants, LinkTargets, NetworkParams, SlotConfig};
use crate::special::{poisson_cdf, regularized_lower_gamma};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticError {
    #[error("harvested energy is deterministic (variance {variance}); no Gamma fit exists")]
    DegenerateEnergy { variance: f64 },
    #[error("non-positive mean harvested energy {mean}")]
    NonPositiveMean { mean: f64 },
}

/// Mean and variance of the energy harvested in phase one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyMoments {
    /// uJ
    pub mean: f64,
    /// uJ^2
    pub variance: f64,
}

/// Gamma distribution with shape `k` and scale `theta` (uJ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub shape: f64,
    pub scale: f64,
}

/// Which terms enter the information-outage argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseRegime {
    /// Interference plus normalised receiver noise.
    Full,
    /// Noise neglected.
    InterferenceLimited,
}

/// `pi lambda alpha/(alpha-2) r_o^(2-alpha)`, the mean network power per unit
/// slot length (before multiplying by `T`).
fn network_power_density(p: &NetworkParams) -> f64 {
    PI * p.lambda * p.alpha / (p.alpha - 2.0) * p.r_o.powf(2.0 - p.alpha)
}

pub fn mean_harvested_energy(p: &NetworkParams, s: &SlotConfig) -> f64 {
    p.eta * p.p_t * s.t1 * (p.dedicated_gain() + network_power_density(p) * s.total())
}

pub fn variance_harvested_energy(p: &NetworkParams, s: &SlotConfig) -> f64 {
    let (t1, t2) = (s.t1, s.t2);
    let scale = p.eta * p.p_t * t1;
    let cross = 2.0 / 3.0
        * (2.0 * t1 + 3.0 * t2)
        * PI
        * p.lambda
        * p.alpha
        * p.r_o.powf(2.0 - p.alpha)
        * (p.dedicated_gain() / (p.alpha - 2.0) + p.r_o.powf(-p.alpha) / (p.alpha - 1.0));
    let network =
        network_power_density(p).powi(2) * (3.0 * t1 * t1 + 8.0 * t1 * t2 + 6.0 * t2 * t2) / 6.0;
    scale * scale * (cross + network)
}

pub fn energy_moments(p: &NetworkParams, s: &SlotConfig) -> EnergyMoments {
    EnergyMoments {
        mean: mean_harvested_energy(p, s),
        variance: variance_harvested_energy(p, s),
    }
}

/// Second-order moment matching.
pub fn gamma_fit(m: &EnergyMoments) -> Result<GammaFit, AnalyticError> {
    if !(m.mean > 0.0) {
        return Err(AnalyticError::NonPositiveMean { mean: m.mean });
    }
    if !(m.variance > 0.0) {
        return Err(AnalyticError::DegenerateEnergy {
            variance: m.variance,
        });
    }
    Ok(GammaFit {
        shape: m.mean * m.mean / m.variance,
        scale: m.variance / m.mean,
    })
}

/// Gamma CDF of the fitted distribution at `e_c`.
pub fn energy_outage_approx(fit: &GammaFit, e_c: f64) -> f64 {
    if e_c <= 0.0 {
        return 0.0;
    }
    regularized_lower_gamma(fit.shape, e_c / fit.scale)
}

/// Approximate energy-outage probability for a parameter set.
///
/// With zero variance (no interferers) the harvested energy is the constant
/// mean and the outage is the indicator `E_C > mean`.
pub fn energy_outage(p: &NetworkParams, s: &SlotConfig, e_c: f64) -> f64 {
    let m = energy_moments(p, s);
    match gamma_fit(&m) {
        Ok(fit) => energy_outage_approx(&fit, e_c),
        Err(_) => {
            if e_c > m.mean {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// One-sided Chebyshev bounds on the energy outage. `upper` is present for
/// `E_C <= mean`, `lower` for `E_C >= mean`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantelliBounds {
    pub upper: Option<f64>,
    pub lower: Option<f64>,
}

pub fn energy_outage_cantelli(m: &EnergyMoments, e_c: f64) -> CantelliBounds {
    let gap2 = (e_c - m.mean).powi(2);
    let denom = m.variance + gap2;
    let upper = (e_c <= m.mean).then(|| if denom > 0.0 { m.variance / denom } else { 1.0 });
    let lower = (e_c >= m.mean).then(|| if denom > 0.0 { gap2 / denom } else { 0.0 });
    CantelliBounds { upper, lower }
}

/// Argument of `H` in the information outage.
pub fn outage_argument(dc: &DerivedConstants, slot: &SlotConfig, regime: NoiseRegime) -> f64 {
    let interference = dc.lambda_t * dc.tau * slot.t2;
    match regime {
        NoiseRegime::Full => interference + dc.sigma_sq * dc.vartheta,
        NoiseRegime::InterferenceLimited => interference,
    }
}

/// `P_io = 1 - H(lambda_t tau T2 [+ sigma^2 vartheta])`.
pub fn info_outage(
    dc: &DerivedConstants,
    slot: &SlotConfig,
    antennas: usize,
    regime: NoiseRegime,
) -> f64 {
    1.0 - poisson_cdf(outage_argument(dc, slot, regime), antennas)
}

/// `lambda_t T2 (1 - P_io) B` for a given energy outage.
pub fn spatial_throughput(
    p: &NetworkParams,
    s: &SlotConfig,
    t: &LinkTargets,
    p_eo: f64,
    regime: NoiseRegime,
) -> f64 {
    let dc = model::derive(p, s, t, p_eo);
    let success = poisson_cdf(outage_argument(&dc, s, regime), p.antennas);
    dc.lambda_t * s.t2 * success * model::link_rate(t.gamma_r)
}

/// Every closed-form metric for one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub moments: EnergyMoments,
    pub p_eo: f64,
    pub derived: DerivedConstants,
    pub p_io: f64,
    pub throughput: f64,
}

/// Evaluates the energy outage first, then the quantities that depend on it.
pub fn evaluate(
    p: &NetworkParams,
    s: &SlotConfig,
    t: &LinkTargets,
    regime: NoiseRegime,
) -> Performance {
    let moments = energy_moments(p, s);
    let p_eo = energy_outage(p, s, t.e_c);
    let derived = model::derive(p, s, t, p_eo);
    let p_io = info_outage(&derived, s, p.antennas, regime);
    let throughput = derived.lambda_t * s.t2 * (1.0 - p_io) * model::link_rate(t.gamma_r);
    Performance {
        moments,
        p_eo,
        derived,
        p_io,
        throughput,
    }
}
