//! Subcommands, figure presets and the tables they produce.

use bwpc_core::analytic::{self, NoiseRegime};
use bwpc_core::model::{self, LinkTargets, SlotConfig};
use bwpc_core::montecarlo::{
    estimate_energy_outage_sweep, estimate_outage_grid, truncation_sensitivity, McSettings, Mode,
    SimError, SimWindow,
};
use bwpc_core::optimize::{self, OptimizeError};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::config::{Config, ConfigError};
use crate::table::{Cell, Table};

/// Largest truncation shift accepted by `sensitivity`.
pub const SENSITIVITY_LIMIT: f64 = 0.005;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Infeasible(String),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<OptimizeError> for RunError {
    fn from(e: OptimizeError) -> Self {
        match e {
            OptimizeError::Infeasible { .. } => RunError::Infeasible(e.to_string()),
            other => RunError::Config(ConfigError::Invalid(other.to_string())),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Infeasible(_) => 3,
            RunError::Simulation(SimError::Degenerate { .. }) => 4,
            RunError::Simulation(SimError::TooFewTrials { .. }) => 2,
            RunError::Simulation(SimError::InvalidWindow(_)) => 2,
            RunError::Simulation(_) | RunError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum SweepVar {
    #[value(name = "E_C")]
    #[serde(rename = "E_C")]
    EnergyThreshold,
    #[value(name = "gamma_R_dB")]
    #[serde(rename = "gamma_R_dB")]
    SinrTargetDb,
    #[value(name = "lambda")]
    #[serde(rename = "lambda")]
    Density,
    #[value(name = "T1")]
    #[serde(rename = "T1")]
    HarvestTime,
    #[value(name = "T2")]
    #[serde(rename = "T2")]
    BackscatterTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub variable: SweepVar,
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

impl Sweep {
    pub fn values(&self) -> Result<Vec<f64>, ConfigError> {
        if self.points == 0 || !self.from.is_finite() || !self.to.is_finite() {
            return Err(ConfigError::Invalid(
                "sweep grid must be nonempty and finite".into(),
            ));
        }
        if self.points == 1 {
            return Ok(vec![self.from]);
        }
        if self.to <= self.from {
            return Err(ConfigError::Invalid(format!(
                "sweep grid must be strictly ascending, got {} to {}",
                self.from, self.to
            )));
        }
        let step = (self.to - self.from) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| self.from + step * i as f64)
            .collect())
    }

    fn apply(&self, base: &Config, v: f64) -> Result<Config, ConfigError> {
        let mut c = *base;
        match self.variable {
            SweepVar::EnergyThreshold => c.targets.e_c = v,
            SweepVar::SinrTargetDb => c.targets.gamma_r = model::db_to_linear(v),
            SweepVar::Density => c.params.lambda = v,
            SweepVar::HarvestTime => c.slot.t1 = v,
            SweepVar::BackscatterTime => c.slot.t2 = v,
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    /// Energy outage versus E_C for three slot divisions, with Cantelli bounds.
    Fig3,
    /// Conditional information outage versus the SINR target.
    Fig4,
    /// Energy outage versus density for several antenna counts.
    Fig5,
    /// Spatial throughput over the (T1, T2) plane.
    Fig6,
    /// Optimal (T1, T2) curves and optimal throughput versus eps_i.
    Fig7,
    /// Spatial throughput versus density with and without constraints.
    Fig8,
}

impl Figure {
    pub fn name(&self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
        }
    }

    pub fn default_trials(&self) -> u64 {
        match self {
            Figure::Fig3 | Figure::Fig5 => 20_000,
            Figure::Fig4 => 10_000,
            Figure::Fig6 => 1_000,
            Figure::Fig7 | Figure::Fig8 => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Task {
    Analytic {
        sweep: Sweep,
    },
    Simulate {
        sweep: Sweep,
        modes: Vec<Mode>,
    },
    Optimize {
        grid: usize,
    },
    Density {
        grid: usize,
        lambda_min: f64,
        lambda_max: f64,
    },
    Reproduce {
        figure: Figure,
        mode: Option<Mode>,
        grid: Option<usize>,
    },
    Sensitivity,
}

/// A complete, replayable request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    pub task: Task,
    pub config: Config,
    pub seed: u64,
    pub trials: u64,
}

impl Invocation {
    pub fn output_name(&self) -> String {
        match &self.task {
            Task::Analytic { .. } => "analytic".into(),
            Task::Simulate { .. } => "simulate".into(),
            Task::Optimize { .. } => "optimize".into(),
            Task::Density { .. } => "density".into(),
            Task::Reproduce { figure, .. } => figure.name().into(),
            Task::Sensitivity => "sensitivity".into(),
        }
    }

    fn settings(&self, workers: usize) -> McSettings {
        McSettings::new(self.trials, self.seed).with_workers(workers)
    }

    /// Runs the task. `workers` only affects speed, never the output.
    pub fn run(&self, workers: usize) -> Result<Table, RunError> {
        self.config.validate()?;
        let mc = self.settings(workers);
        match &self.task {
            Task::Analytic { sweep } => analytic_sweep(&self.config, sweep),
            Task::Simulate { sweep, modes } => simulate_sweep(&self.config, sweep, modes, &mc),
            Task::Optimize { grid } => optimize_table(&self.config, *grid),
            Task::Density {
                grid,
                lambda_min,
                lambda_max,
            } => density_table(&self.config, *grid, *lambda_min, *lambda_max),
            Task::Reproduce { figure, mode, grid } => {
                reproduce(&self.config, *figure, *mode, *grid, &mc)
            }
            Task::Sensitivity => sensitivity_table(&self.config, &mc),
        }
    }
}

const OPERATING_POINT: [&str; 7] = [
    "lambda",
    "M",
    "T1_ms",
    "T2_ms",
    "E_C_uJ",
    "gamma_R",
    "gamma_R_dB",
];

fn operating_point(c: &Config) -> Vec<Cell> {
    vec![
        c.params.lambda.into(),
        c.params.antennas.into(),
        c.slot.t1.into(),
        c.slot.t2.into(),
        c.targets.e_c.into(),
        c.targets.gamma_r.into(),
        model::linear_to_db(c.targets.gamma_r).into(),
    ]
}

fn columns(head: &[&'static str], tail: &[&'static str]) -> Vec<&'static str> {
    head.iter().chain(tail).copied().collect()
}

fn analytic_sweep(base: &Config, sweep: &Sweep) -> Result<Table, RunError> {
    let mut table = Table::new(&columns(
        &OPERATING_POINT,
        &[
            "E_H_mean_uJ",
            "E_H_var_uJ2",
            "P_eo_analytic",
            "P_eo_cantelli_upper",
            "P_eo_cantelli_lower",
            "lambda_t",
            "P_io_analytic",
            "P_io_interference_limited",
            "R_analytic",
        ],
    ));
    for v in sweep.values()? {
        let c = sweep.apply(base, v)?;
        let perf = analytic::evaluate(&c.params, &c.slot, &c.targets, NoiseRegime::Full);
        let limited = analytic::info_outage(
            &perf.derived,
            &c.slot,
            c.params.antennas,
            NoiseRegime::InterferenceLimited,
        );
        let bounds = analytic::energy_outage_cantelli(&perf.moments, c.targets.e_c);
        let mut row = operating_point(&c);
        row.extend([
            perf.moments.mean.into(),
            perf.moments.variance.into(),
            perf.p_eo.into(),
            bounds.upper.into(),
            bounds.lower.into(),
            perf.derived.lambda_t.into(),
            perf.p_io.into(),
            limited.into(),
            perf.throughput.into(),
        ]);
        table.push(row);
    }
    Ok(table)
}

fn simulate_sweep(
    base: &Config,
    sweep: &Sweep,
    modes: &[Mode],
    mc: &McSettings,
) -> Result<Table, RunError> {
    let mut table = Table::new(&columns(
        &[&["mode"][..], &OPERATING_POINT[..]].concat(),
        &[
            "P_eo_sim",
            "P_eo_ci99",
            "P_eo_analytic",
            "P_io_sim",
            "P_io_ci99",
            "P_io_analytic",
            "R_sim",
            "R_ci99",
            "R_analytic",
            "trials",
            "samples",
        ],
    ));
    let values = sweep.values()?;
    let configs = values
        .iter()
        .map(|&v| sweep.apply(base, v))
        .collect::<Result<Vec<_>, _>>()?;
    let shared = matches!(
        sweep.variable,
        SweepVar::EnergyThreshold | SweepVar::SinrTargetDb
    );
    for &mode in modes {
        // (config, energy estimate, info estimate, throughput estimate)
        let mut results = Vec::new();
        if shared {
            let e_cs: Vec<f64> = configs.iter().map(|c| c.targets.e_c).collect();
            let gammas: Vec<f64> = configs.iter().map(|c| c.targets.gamma_r).collect();
            let (e_cs, gammas) = match sweep.variable {
                SweepVar::EnergyThreshold => (e_cs, vec![base.targets.gamma_r]),
                _ => (vec![base.targets.e_c], gammas),
            };
            let grid = estimate_outage_grid(
                &base.params,
                &base.slot,
                &e_cs,
                &gammas,
                &base.joint_window(),
                mode,
                mc,
            )?;
            for (i, c) in configs.iter().enumerate() {
                let (ci, gi) = match sweep.variable {
                    SweepVar::EnergyThreshold => (i, 0),
                    _ => (0, i),
                };
                let eo = grid.energy_outage.as_ref().map(|v| v[ci]);
                let tp = grid.throughput.as_ref().map(|t| t[ci][gi]);
                results.push((*c, eo, grid.info_outage[ci][gi], tp));
            }
        } else {
            for c in &configs {
                let grid = estimate_outage_grid(
                    &c.params,
                    &c.slot,
                    &[c.targets.e_c],
                    &[c.targets.gamma_r],
                    &c.joint_window(),
                    mode,
                    mc,
                )?;
                let eo = grid.energy_outage.as_ref().map(|v| v[0]);
                let tp = grid.throughput.as_ref().map(|t| t[0][0]);
                results.push((*c, eo, grid.info_outage[0][0], tp));
            }
        }
        for (c, eo, io, tp) in results {
            let perf = analytic::evaluate(&c.params, &c.slot, &c.targets, NoiseRegime::Full);
            let mut row = vec![Cell::from(mode.to_string())];
            row.extend(operating_point(&c));
            row.extend([
                eo.map(|e| e.estimate).into(),
                eo.map(|e| e.half_width_99).into(),
                perf.p_eo.into(),
                io.estimate.into(),
                io.half_width_99.into(),
                perf.p_io.into(),
                tp.map(|t| t.estimate).into(),
                tp.map(|t| t.half_width_99).into(),
                perf.throughput.into(),
                io.trials.into(),
                io.samples.into(),
            ]);
            table.push(row);
        }
    }
    Ok(table)
}

fn optimize_table(c: &Config, grid: usize) -> Result<Table, RunError> {
    let opt = optimize::optimize_slot(&c.params, &c.targets, grid)?;
    let o = opt.optimum;
    let mut table = Table::new(&[
        "T2_ms", "T1_ms", "feasible", "R_opt", "chi_star", "x_M", "T2_LB_ms", "T2_UB_ms", "eps_e",
        "eps_i",
    ]);
    for p in &opt.curve {
        table.push(vec![
            p.t2.into(),
            p.t1.into(),
            p.feasible.into(),
            o.r_opt.into(),
            o.chi_star.into(),
            o.x_m.into(),
            o.t2_lb.into(),
            o.t2_ub.into(),
            c.targets.eps_e.into(),
            c.targets.eps_i.into(),
        ]);
    }
    Ok(table)
}

fn geometric(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>, ConfigError> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(ConfigError::Invalid(format!(
            "density grid needs 0 < lambda_min < lambda_max and at least 2 points, got {lo}, {hi}, {n}"
        )));
    }
    Ok((0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect())
}

const DENSITY_COLUMNS: [&str; 9] = [
    "M",
    "lambda",
    "R_analytic",
    "P_eo_analytic",
    "P_io_analytic",
    "feasible",
    "R_constrained",
    "best",
    "best_feasible",
];

fn density_rows(table: &mut Table, c: &Config, grid: &[f64]) -> Result<bool, RunError> {
    let pts = optimize::density_sweep(&c.params, &c.slot, &c.targets, grid, NoiseRegime::Full)?;
    let best = optimize::best_density(&pts, false).map(|p| p.lambda);
    let best_feasible = optimize::best_density(&pts, true).map(|p| p.lambda);
    for p in &pts {
        table.push(vec![
            c.params.antennas.into(),
            p.lambda.into(),
            p.throughput.into(),
            p.p_eo.into(),
            p.p_io.into(),
            p.feasible.into(),
            p.feasible.then_some(p.throughput).into(),
            (Some(p.lambda) == best).into(),
            (Some(p.lambda) == best_feasible).into(),
        ]);
    }
    Ok(best_feasible.is_some())
}

fn density_table(c: &Config, grid: usize, lo: f64, hi: f64) -> Result<Table, RunError> {
    let lambdas = geometric(lo, hi, grid)?;
    let mut table = Table::new(&DENSITY_COLUMNS);
    if !density_rows(&mut table, c, &lambdas)? {
        return Err(RunError::Infeasible(format!(
            "no density in [{lo}, {hi}] meets eps_e = {} and eps_i = {}",
            c.targets.eps_e, c.targets.eps_i
        )));
    }
    Ok(table)
}

fn sensitivity_table(c: &Config, mc: &McSettings) -> Result<Table, RunError> {
    let s = truncation_sensitivity(&c.params, &c.slot, &c.targets, c.r_harvest, c.r_interf, mc)?;
    let mut table = Table::new(&[
        "quantity",
        "radius_m",
        "doubled_radius_m",
        "at_radius",
        "at_radius_ci99",
        "at_double",
        "at_double_ci99",
        "shift",
        "shift_ci99",
        "within_limit",
    ]);
    for (name, shift) in [("P_eo", s.energy), ("P_io", s.info)] {
        table.push(vec![
            name.into(),
            shift.radius.into(),
            (2.0 * shift.radius).into(),
            shift.at_radius.estimate.into(),
            shift.at_radius.half_width_99.into(),
            shift.at_double.estimate.into(),
            shift.at_double.half_width_99.into(),
            shift.shift.estimate.into(),
            shift.shift.half_width_99.into(),
            (shift.shift.estimate.abs() < SENSITIVITY_LIMIT).into(),
        ]);
    }
    Ok(table)
}

fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn reproduce(
    base: &Config,
    figure: Figure,
    mode: Option<Mode>,
    grid: Option<usize>,
    mc: &McSettings,
) -> Result<Table, RunError> {
    match figure {
        Figure::Fig3 => fig3(base, grid.unwrap_or(10), mc),
        Figure::Fig4 => fig4(base, mode.unwrap_or(Mode::Joint), grid.unwrap_or(8), mc),
        Figure::Fig5 => fig5(base, grid.unwrap_or(10), mc),
        Figure::Fig6 => fig6(base, mode.unwrap_or(Mode::Thinned), grid.unwrap_or(8), mc),
        Figure::Fig7 => fig7(base, grid.unwrap_or(optimize::DEFAULT_T2_GRID)),
        Figure::Fig8 => fig8(base, grid.unwrap_or(200)),
    }
}

fn fig3(base: &Config, grid: usize, mc: &McSettings) -> Result<Table, RunError> {
    let mut table = Table::new(&[
        "T1_ms",
        "T2_ms",
        "E_C_uJ",
        "P_eo_sim",
        "P_eo_ci99",
        "P_eo_analytic",
        "P_eo_cantelli_upper",
        "P_eo_cantelli_lower",
    ]);
    let e_cs = linear_grid(2.0, 20.0, grid);
    let mut c = *base;
    c.params.lambda = 0.1;
    for slot in [
        SlotConfig::new(0.5, 0.5),
        SlotConfig::new(0.2, 0.5),
        SlotConfig::new(0.5, 0.2),
    ] {
        c.slot = slot;
        c.validate()?;
        let window = SimWindow::energy(&c.params, &slot, c.r_harvest);
        let sims = estimate_energy_outage_sweep(&c.params, &slot, &e_cs, &window, mc)?;
        let moments = analytic::energy_moments(&c.params, &slot);
        for (&e_c, sim) in e_cs.iter().zip(&sims) {
            let bounds = analytic::energy_outage_cantelli(&moments, e_c);
            table.push(vec![
                slot.t1.into(),
                slot.t2.into(),
                e_c.into(),
                sim.estimate.into(),
                sim.half_width_99.into(),
                analytic::energy_outage(&c.params, &slot, e_c).into(),
                bounds.upper.into(),
                bounds.lower.into(),
            ]);
        }
    }
    Ok(table)
}

fn fig4(base: &Config, mode: Mode, grid: usize, mc: &McSettings) -> Result<Table, RunError> {
    let mut table = Table::new(&[
        "mode",
        "E_C_uJ",
        "gamma_R_dB",
        "gamma_R",
        "P_io_sim",
        "P_io_ci99",
        "P_io_analytic",
        "samples",
    ]);
    let db = linear_grid(0.0, 14.0, grid);
    let gammas: Vec<f64> = db.iter().map(|&d| model::db_to_linear(d)).collect();
    let e_cs = [2.0, 6.0];
    let g = estimate_outage_grid(
        &base.params,
        &base.slot,
        &e_cs,
        &gammas,
        &base.joint_window(),
        mode,
        mc,
    )?;
    for (ci, &e_c) in e_cs.iter().enumerate() {
        for (gi, (&d, &gamma_r)) in db.iter().zip(&gammas).enumerate() {
            let t = LinkTargets {
                gamma_r,
                e_c,
                ..base.targets
            };
            let exact = analytic::evaluate(&base.params, &base.slot, &t, NoiseRegime::Full).p_io;
            let sim = g.info_outage[ci][gi];
            table.push(vec![
                mode.to_string().into(),
                e_c.into(),
                d.into(),
                gamma_r.into(),
                sim.estimate.into(),
                sim.half_width_99.into(),
                exact.into(),
                sim.samples.into(),
            ]);
        }
    }
    Ok(table)
}

fn fig5(base: &Config, grid: usize, mc: &McSettings) -> Result<Table, RunError> {
    let mut table = Table::new(&[
        "M",
        "lambda",
        "E_C_uJ",
        "P_eo_sim",
        "P_eo_ci99",
        "P_eo_analytic",
    ]);
    let e_c = 8.0;
    for m in 2..=5 {
        for lambda in linear_grid(0.01, 0.1, grid) {
            let mut c = *base;
            c.params.antennas = m;
            c.params.lambda = lambda;
            c.targets.e_c = e_c;
            c.validate()?;
            let sim =
                estimate_energy_outage_sweep(&c.params, &c.slot, &[e_c], &c.energy_window(), mc)?
                    [0];
            table.push(vec![
                m.into(),
                lambda.into(),
                e_c.into(),
                sim.estimate.into(),
                sim.half_width_99.into(),
                analytic::energy_outage(&c.params, &c.slot, e_c).into(),
            ]);
        }
    }
    Ok(table)
}

fn fig6(base: &Config, mode: Mode, grid: usize, mc: &McSettings) -> Result<Table, RunError> {
    let mut table = Table::new(&[
        "mode",
        "T1_ms",
        "T2_ms",
        "R_sim",
        "R_ci99",
        "R_analytic",
        "P_eo_analytic",
        "P_io_analytic",
    ]);
    let mut c = *base;
    c.targets.e_c = 6.0;
    c.targets.gamma_r = model::db_to_linear(5.0);
    let axis = linear_grid(0.05, 1.0, grid);
    for &t1 in &axis {
        for &t2 in &axis {
            c.slot = SlotConfig::new(t1, t2);
            c.validate()?;
            let g = estimate_outage_grid(
                &c.params,
                &c.slot,
                &[c.targets.e_c],
                &[c.targets.gamma_r],
                &c.joint_window(),
                mode,
                mc,
            )?;
            let r = g.throughput.as_ref().map(|t| t[0][0]);
            let perf = analytic::evaluate(&c.params, &c.slot, &c.targets, NoiseRegime::Full);
            table.push(vec![
                mode.to_string().into(),
                t1.into(),
                t2.into(),
                r.map(|x| x.estimate).into(),
                r.map(|x| x.half_width_99).into(),
                perf.throughput.into(),
                perf.p_eo.into(),
                perf.p_io.into(),
            ]);
        }
    }
    Ok(table)
}

fn fig7(base: &Config, grid: usize) -> Result<Table, RunError> {
    let mut table = Table::new(&[
        "alpha", "eps_i", "eps_e", "T2_ms", "T1_ms", "feasible", "R_opt", "chi_star",
    ]);
    for alpha in [3.0, 4.0] {
        for eps_i in [0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1] {
            let mut c = *base;
            c.params.alpha = alpha;
            c.targets = LinkTargets {
                gamma_r: model::db_to_linear(5.0),
                e_c: 6.0,
                eps_e: 0.4,
                eps_i,
            };
            c.validate()?;
            let opt = optimize::optimize_slot(&c.params, &c.targets, grid)?;
            for p in &opt.curve {
                table.push(vec![
                    alpha.into(),
                    eps_i.into(),
                    c.targets.eps_e.into(),
                    p.t2.into(),
                    p.t1.into(),
                    p.feasible.into(),
                    opt.optimum.r_opt.into(),
                    opt.optimum.chi_star.into(),
                ]);
            }
        }
    }
    Ok(table)
}

fn fig8(base: &Config, grid: usize) -> Result<Table, RunError> {
    let lambdas = geometric(1e-3, 1.0, grid)?;
    let mut table = Table::new(&DENSITY_COLUMNS);
    for m in 2..=5 {
        let mut c = *base;
        c.params.antennas = m;
        c.targets = LinkTargets {
            gamma_r: model::db_to_linear(5.0),
            e_c: 6.0,
            eps_e: 0.35,
            eps_i: 0.35,
        };
        c.validate()?;
        density_rows(&mut table, &c, &lambdas)?;
    }
    Ok(table)
}
