//! Outage and throughput estimators with 99% normal-approximation intervals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::energy::harvested_energy;
use super::joint::JointTrial;
use super::network::{sample_network, SimWindow, WindowKind};
use super::sinr::{sinr_with, Activity};
use super::SimError;
use crate::analytic;
use crate::model::{self, LinkTargets, NetworkParams, SlotConfig};

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.5758293035489004;
pub const MIN_TRIALS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSettings {
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; `0` uses every available core.
    pub workers: usize,
}

impl McSettings {
    pub fn new(trials: u64, seed: u64) -> Self {
        McSettings {
            trials,
            seed,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings::new(100_000, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub estimate: f64,
    pub half_width_99: f64,
    pub trials: u64,
    /// Trials that entered the estimate; fewer than `trials` when conditioning.
    pub samples: u64,
    pub seed: u64,
}

impl EstimatorResult {
    pub fn proportion(hits: u64, samples: u64, settings: &McSettings) -> Self {
        let p = hits as f64 / samples as f64;
        EstimatorResult {
            estimate: p,
            half_width_99: Z_99 * (p * (1.0 - p) / samples as f64).sqrt(),
            trials: settings.trials,
            samples,
            seed: settings.seed,
        }
    }

    pub fn sample_mean(values: &[f64], settings: &McSettings) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        EstimatorResult {
            estimate: mean,
            half_width_99: Z_99 * (var / n).sqrt(),
            trials: settings.trials,
            samples: values.len() as u64,
            seed: settings.seed,
        }
    }

    pub fn scaled(mut self, c: f64) -> Self {
        self.estimate *= c;
        self.half_width_99 *= c.abs();
        self
    }

    pub fn lower(&self) -> f64 {
        self.estimate - self.half_width_99
    }

    pub fn upper(&self) -> f64 {
        self.estimate + self.half_width_99
    }

    pub fn covers(&self, x: f64) -> bool {
        (x - self.estimate).abs() <= self.half_width_99
    }
}

/// Runs `f` for every trial index and returns the results in trial order.
pub(crate) fn run_trials<T, F>(settings: &McSettings, f: F) -> Result<Vec<T>, SimError>
where
    T: Send,
    F: Fn(u64) -> Result<T, SimError> + Sync + Send,
{
    if settings.trials < MIN_TRIALS {
        return Err(SimError::TooFewTrials {
            trials: settings.trials,
            minimum: MIN_TRIALS,
        });
    }
    if settings.workers == 1 {
        return (0..settings.trials).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| SimError::Workers(e.to_string()))?;
    pool.install(|| (0..settings.trials).into_par_iter().map(&f).collect())
}

fn require_kind(window: &SimWindow, allowed: &[WindowKind]) -> Result<(), SimError> {
    if allowed.contains(&window.kind) {
        Ok(())
    } else {
        Err(SimError::InvalidWindow(format!(
            "{:?} window cannot be used here; expected one of {allowed:?}",
            window.kind
        )))
    }
}

/// Noise normalised by the common average backscattered power.
pub fn normalised_noise(params: &NetworkParams, slot: &SlotConfig) -> f64 {
    params.n0 / (params.beta * model::mean_incident_power(params, slot))
}

/// Harvested energy of the typical tag in every trial, uJ.
pub fn typical_energies(
    params: &NetworkParams,
    slot: &SlotConfig,
    window: &SimWindow,
    settings: &McSettings,
) -> Result<Vec<f64>, SimError> {
    window.validate(params)?;
    require_kind(window, &[WindowKind::Energy, WindowKind::Joint])?;
    run_trials(settings, |t| {
        let real = sample_network(params, slot, window, settings.seed, t);
        Ok(harvested_energy(&real, params, slot))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyMomentEstimate {
    pub mean: EstimatorResult,
    pub variance: f64,
    pub variance_half_width_99: f64,
}

pub fn energy_moments_from(values: &[f64], settings: &McSettings) -> EnergyMomentEstimate {
    let mean = EstimatorResult::sample_mean(values, settings);
    let n = values.len() as f64;
    let m = mean.estimate;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = values.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    EnergyMomentEstimate {
        mean,
        variance: var,
        variance_half_width_99: Z_99 * ((m4 - var * var).max(0.0) / n).sqrt(),
    }
}

pub fn estimate_energy_moments(
    params: &NetworkParams,
    slot: &SlotConfig,
    window: &SimWindow,
    settings: &McSettings,
) -> Result<EnergyMomentEstimate, SimError> {
    let values = typical_energies(params, slot, window, settings)?;
    Ok(energy_moments_from(&values, settings))
}

pub fn energy_outage_from(values: &[f64], e_c: f64, settings: &McSettings) -> EstimatorResult {
    let hits = values.iter().filter(|&&e| e < e_c).count() as u64;
    EstimatorResult::proportion(hits, values.len() as u64, settings)
}

/// Energy outage at every threshold, on shared trials.
pub fn estimate_energy_outage_sweep(
    params: &NetworkParams,
    slot: &SlotConfig,
    e_cs: &[f64],
    window: &SimWindow,
    settings: &McSettings,
) -> Result<Vec<EstimatorResult>, SimError> {
    let values = typical_energies(params, slot, window, settings)?;
    Ok(e_cs
        .iter()
        .map(|&e| energy_outage_from(&values, e, settings))
        .collect())
}

pub fn estimate_energy_outage(
    params: &NetworkParams,
    slot: &SlotConfig,
    e_c: f64,
    window: &SimWindow,
    settings: &McSettings,
) -> Result<EstimatorResult, SimError> {
    Ok(estimate_energy_outage_sweep(params, slot, &[e_c], window, settings)?[0])
}

/// How interferer activity is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Each interferer is active independently with probability `1 - P_eo`.
    Thinned,
    /// Each interferer is active iff its own simulated energy reaches `E_C`.
    Joint,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Thinned => "thinned",
            Mode::Joint => "joint",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "thinned" => Ok(Mode::Thinned),
            "joint" => Ok(Mode::Joint),
            other => Err(format!("unknown mode '{other}', expected thinned or joint")),
        }
    }
}

struct TrialOutcome {
    /// Per `E_C`; `None` when the window does not cover the typical harvest.
    energized: Option<Vec<bool>>,
    /// Per `E_C`, per `gamma_R`.
    outage: Vec<Vec<bool>>,
}

/// Estimates on a grid of energy thresholds and SINR targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageGrid {
    pub mode: Mode,
    pub e_c: Vec<f64>,
    pub gamma_r: Vec<f64>,
    /// Per `E_C`; present when the window covers the typical harvest.
    pub energy_outage: Option<Vec<EstimatorResult>>,
    /// Per `E_C`, per `gamma_R`. Conditional on the typical tag being
    /// energized in joint mode.
    pub info_outage: Vec<Vec<EstimatorResult>>,
    /// Per `E_C`, per `gamma_R`, with `log2(1 + gamma_R)` bits per link.
    pub throughput: Option<Vec<Vec<EstimatorResult>>>,
}

fn simulate_outcome(
    params: &NetworkParams,
    slot: &SlotConfig,
    e_cs: &[f64],
    gammas: &[f64],
    p_active: &[f64],
    sigma_sq: f64,
    window: &SimWindow,
    mode: Mode,
    seed: u64,
    trial: u64,
) -> Result<TrialOutcome, SimError> {
    let real = sample_network(params, slot, window, seed, trial);
    match mode {
        Mode::Thinned => {
            let energized = (window.kind == WindowKind::Joint).then(|| {
                let e = harvested_energy(&real, params, slot);
                e_cs.iter().map(|&c| e >= c).collect()
            });
            let mut outage = Vec::with_capacity(e_cs.len());
            for &p in p_active {
                let activity = Activity::Thinned { p_active: p };
                let s = sinr_with(&real, params, sigma_sq, |k| {
                    activity.is_active(real.interferers[k].mark)
                })?;
                outage.push(gammas.iter().map(|&g| s < g).collect());
            }
            Ok(TrialOutcome { energized, outage })
        }
        Mode::Joint => {
            let mut jt = JointTrial::new(&real, params, slot, sigma_sq);
            let e = jt.typical_energy();
            let energized: Vec<bool> = e_cs.iter().map(|&c| e >= c).collect();
            let mut outage = Vec::with_capacity(e_cs.len());
            for (&c, &ok) in e_cs.iter().zip(&energized) {
                outage.push(if ok {
                    jt.outage(c, gammas)?
                } else {
                    vec![false; gammas.len()]
                });
            }
            Ok(TrialOutcome {
                energized: Some(energized),
                outage,
            })
        }
    }
}

/// Information outage, energy outage and throughput over a grid, with every
/// grid point evaluated on the same realizations.
pub fn estimate_outage_grid(
    params: &NetworkParams,
    slot: &SlotConfig,
    e_cs: &[f64],
    gammas: &[f64],
    window: &SimWindow,
    mode: Mode,
    settings: &McSettings,
) -> Result<OutageGrid, SimError> {
    window.validate(params)?;
    match mode {
        Mode::Thinned => require_kind(window, &[WindowKind::Interference, WindowKind::Joint])?,
        Mode::Joint => require_kind(window, &[WindowKind::Joint])?,
    }
    let sigma_sq = normalised_noise(params, slot);
    let p_active: Vec<f64> = e_cs
        .iter()
        .map(|&c| 1.0 - analytic::energy_outage(params, slot, c))
        .collect();
    let outcomes = run_trials(settings, |t| {
        simulate_outcome(
            params,
            slot,
            e_cs,
            gammas,
            &p_active,
            sigma_sq,
            window,
            mode,
            settings.seed,
            t,
        )
    })?;

    let n = settings.trials;
    let rates: Vec<f64> = gammas
        .iter()
        .map(|&g| params.lambda * slot.t2 * model::link_rate(g))
        .collect();
    let has_energy = outcomes
        .first()
        .map(|o| o.energized.is_some())
        .unwrap_or(false);

    let mut energy_outage = Vec::new();
    let mut info_outage = Vec::new();
    let mut throughput = Vec::new();
    for (c, &e_c) in e_cs.iter().enumerate() {
        let energized: Vec<bool> = outcomes
            .iter()
            .map(|o| o.energized.as_ref().map(|v| v[c]).unwrap_or(true))
            .collect();
        let n_on = energized.iter().filter(|&&b| b).count() as u64;
        if has_energy {
            energy_outage.push(EstimatorResult::proportion(n - n_on, n, settings));
        }
        let conditional = mode == Mode::Joint;
        if conditional && n_on == 0 {
            return Err(SimError::Degenerate { e_c, trials: n });
        }

        let mut info_row = Vec::with_capacity(gammas.len());
        let mut rate_row = Vec::with_capacity(gammas.len());
        for (g, &rate) in rates.iter().enumerate() {
            let mut out = 0u64;
            let mut out_on = 0u64;
            let mut success_on = 0u64;
            for (o, &on) in outcomes.iter().zip(&energized) {
                let x = o.outage[c][g];
                out += x as u64;
                if on {
                    out_on += x as u64;
                    success_on += (!x) as u64;
                }
            }
            let info = if conditional {
                EstimatorResult::proportion(out_on, n_on, settings)
            } else {
                EstimatorResult::proportion(out, n, settings)
            };
            info_row.push(info);
            if has_energy {
                let r = if conditional {
                    EstimatorResult::proportion(success_on, n, settings).scaled(rate)
                } else {
                    product_estimate(n_on, n - out, success_on, n, settings).scaled(rate)
                };
                rate_row.push(r);
            }
        }
        info_outage.push(info_row);
        if has_energy {
            throughput.push(rate_row);
        }
    }

    Ok(OutageGrid {
        mode,
        e_c: e_cs.to_vec(),
        gamma_r: gammas.to_vec(),
        energy_outage: has_energy.then_some(energy_outage),
        info_outage,
        throughput: has_energy.then_some(throughput),
    })
}

/// `a * b` for two proportions estimated on the same trials, with a
/// delta-method interval that includes their covariance.
fn product_estimate(
    a_hits: u64,
    b_hits: u64,
    both: u64,
    n: u64,
    settings: &McSettings,
) -> EstimatorResult {
    let nf = n as f64;
    let a = a_hits as f64 / nf;
    let b = b_hits as f64 / nf;
    let cov = both as f64 / nf - a * b;
    let var = (b * b * a * (1.0 - a) + a * a * b * (1.0 - b) + 2.0 * a * b * cov) / nf;
    EstimatorResult {
        estimate: a * b,
        half_width_99: Z_99 * var.max(0.0).sqrt(),
        trials: settings.trials,
        samples: n,
        seed: settings.seed,
    }
}

pub fn estimate_info_outage(
    params: &NetworkParams,
    slot: &SlotConfig,
    targets: &LinkTargets,
    window: &SimWindow,
    mode: Mode,
    settings: &McSettings,
) -> Result<EstimatorResult, SimError> {
    let grid = estimate_outage_grid(
        params,
        slot,
        &[targets.e_c],
        &[targets.gamma_r],
        window,
        mode,
        settings,
    )?;
    Ok(grid.info_outage[0][0])
}

/// `lambda (1 - P_eo) T2 (1 - P_io) B` from simulated outages. Needs a joint
/// window so that both outages come from the same realizations.
pub fn estimate_throughput(
    params: &NetworkParams,
    slot: &SlotConfig,
    targets: &LinkTargets,
    window: &SimWindow,
    mode: Mode,
    settings: &McSettings,
) -> Result<EstimatorResult, SimError> {
    require_kind(window, &[WindowKind::Joint])?;
    let grid = estimate_outage_grid(
        params,
        slot,
        &[targets.e_c],
        &[targets.gamma_r],
        window,
        mode,
        settings,
    )?;
    grid.throughput
        .map(|t| t[0][0])
        .ok_or_else(|| SimError::InvalidWindow("window does not cover the typical harvest".into()))
}

/// Paired estimate of how much an outage moves when a truncation radius is
/// doubled, on common random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationShift {
    pub radius: f64,
    pub at_radius: EstimatorResult,
    pub at_double: EstimatorResult,
    /// `at_double - at_radius`.
    pub shift: EstimatorResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSensitivity {
    /// Energy outage at `E_C` versus the harvest radius.
    pub energy: TruncationShift,
    /// Thinned-mode information outage at `(E_C, gamma_R)` versus the
    /// interference radius.
    pub info: TruncationShift,
}

fn paired(pairs: &[(bool, bool)], radius: f64, settings: &McSettings) -> TruncationShift {
    let n = pairs.len() as u64;
    let a = pairs.iter().filter(|p| p.0).count() as u64;
    let b = pairs.iter().filter(|p| p.1).count() as u64;
    let diffs: Vec<f64> = pairs
        .iter()
        .map(|p| p.1 as u8 as f64 - p.0 as u8 as f64)
        .collect();
    TruncationShift {
        radius,
        at_radius: EstimatorResult::proportion(a, n, settings),
        at_double: EstimatorResult::proportion(b, n, settings),
        shift: EstimatorResult::sample_mean(&diffs, settings),
    }
}

pub fn truncation_sensitivity(
    params: &NetworkParams,
    slot: &SlotConfig,
    targets: &LinkTargets,
    r_harvest: f64,
    r_interf: f64,
    settings: &McSettings,
) -> Result<TruncationSensitivity, SimError> {
    let energy_window = SimWindow::energy(params, slot, 2.0 * r_harvest);
    energy_window.validate(params)?;
    let energy_pairs = run_trials(settings, |t| {
        let real = sample_network(params, slot, &energy_window, settings.seed, t);
        let near = real.truncated(r_harvest, 0.0);
        Ok((
            harvested_energy(&near, params, slot) < targets.e_c,
            harvested_energy(&real, params, slot) < targets.e_c,
        ))
    })?;

    let interf_window = SimWindow::interference(params, slot, 2.0 * r_interf);
    interf_window.validate(params)?;
    let sigma_sq = normalised_noise(params, slot);
    let activity = Activity::Thinned {
        p_active: 1.0 - analytic::energy_outage(params, slot, targets.e_c),
    };
    let info_pairs = run_trials(settings, |t| {
        let real = sample_network(params, slot, &interf_window, settings.seed, t);
        let near = real.truncated(0.0, r_interf);
        let s_near = sinr_with(&near, params, sigma_sq, |k| {
            activity.is_active(near.interferers[k].mark)
        })?;
        let s_far = sinr_with(&real, params, sigma_sq, |k| {
            activity.is_active(real.interferers[k].mark)
        })?;
        Ok((s_near < targets.gamma_r, s_far < targets.gamma_r))
    })?;

    Ok(TruncationSensitivity {
        energy: paired(&energy_pairs, r_harvest, settings),
        info: paired(&info_pairs, r_interf, settings),
    })
}
