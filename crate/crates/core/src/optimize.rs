//! Spatial-throughput maximization over the slot division and the density.
//!
//! With the noise neglected the throughput is `(chi / tau) H(chi) B` where
//! `chi = tau lambda T2 (1 - P_eo)`. `x H(x)` is quasi-concave with a unique
//! maximiser `x_M`, so the optimum fixes `chi` and leaves a one-dimensional
//! family of `(T1, T2)` pairs that all reach it.

use serde::{Deserialize, Serialize};

use crate::analytic::{self, NoiseRegime};
use crate::model::{self, LinkTargets, NetworkParams, SlotConfig};
use crate::special::{poisson_cdf, throughput_slope};

/// Absolute tolerance of every bisection.
pub const ROOT_TOL: f64 = 1e-9;
/// Initial bracket for `T1`, ms.
pub const T1_BRACKET: (f64, f64) = (1e-6, 1.0);
/// `T1` beyond which a grid point is declared infeasible, ms.
pub const T1_CAP: f64 = 100.0;
pub const DEFAULT_T2_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizeError {
    #[error("probability {0} must lie strictly between 0 and 1")]
    ProbabilityOutOfRange(f64),
    #[error("density must be positive, got {0}")]
    NonPositiveDensity(f64),
    #[error(
        "no T1 up to {cap} ms reaches the optimal operating point at any of {points} T2 values"
    )]
    Infeasible { points: usize, cap: f64 },
    #[error("density grid must be positive and strictly ascending")]
    BadGrid,
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol` or can no longer be split in
/// floating point, so a zero tolerance runs to full precision.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let f_lo = f(lo);
    let lo_negative = f_lo < 0.0;
    for _ in 0..2048 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maximiser of `f(x) = x H(x, M)`, the root of `Q` in `[M/2, M]`.
pub fn solve_x_m(antennas: usize) -> f64 {
    assert!(antennas >= 1);
    if antennas == 1 {
        return 1.0;
    }
    let m = antennas as f64;
    bisect(|x| throughput_slope(x, antennas), 0.5 * m, m, 0.0)
}

/// `x >= 0` with `H(x, M) = y`.
pub fn h_inverse(y: f64, antennas: usize) -> Result<f64, OptimizeError> {
    if !(y > 0.0 && y < 1.0) {
        return Err(OptimizeError::ProbabilityOutOfRange(y));
    }
    let mut hi = (antennas as f64).max(1.0);
    while poisson_cdf(hi, antennas) > y {
        hi *= 2.0;
    }
    Ok(bisect(|x| poisson_cdf(x, antennas) - y, 0.0, hi, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThroughputOptimum {
    pub x_m: f64,
    pub chi_up: f64,
    pub chi_star: f64,
    /// bits per m^2 per ms
    pub r_opt: f64,
    /// ms
    pub t2_lb: f64,
    /// ms
    pub t2_ub: f64,
    pub tau: f64,
}

/// One point of the optimal `(T1, T2)` curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub t1: f64,
    pub t2: f64,
    pub feasible: bool,
    /// `T2 (1 - P_eo(T1, T2))`, ms.
    pub achieved_p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotOptimization {
    pub optimum: ThroughputOptimum,
    pub curve: Vec<TradeoffPoint>,
    /// Grid points where `T2 (1 - P_eo)` did not behave monotonically in `T1`.
    pub diagnostics: Vec<String>,
}

impl SlotOptimization {
    pub fn feasible_points(&self) -> impl Iterator<Item = &TradeoffPoint> {
        self.curve.iter().filter(|p| p.feasible)
    }
}

/// `chi*`, the `T2` range and the optimal throughput; no root-finding in `T1`.
pub fn throughput_optimum(
    params: &NetworkParams,
    targets: &LinkTargets,
) -> Result<ThroughputOptimum, OptimizeError> {
    if !(params.lambda > 0.0) {
        return Err(OptimizeError::NonPositiveDensity(params.lambda));
    }
    let m = params.antennas;
    let x_m = solve_x_m(m);
    let chi_up = h_inverse(1.0 - targets.eps_i, m)?;
    let chi_star = x_m.min(chi_up);
    // tau does not depend on the slot or on P_eo
    let dc = model::derive(params, &SlotConfig::default(), targets, 0.0);
    let tau = dc.tau;
    let t2_lb = chi_star / (tau * params.lambda);
    let t2_ub = t2_lb / (1.0 - targets.eps_e);
    let r_opt = chi_star / tau * poisson_cdf(chi_star, m) * model::link_rate(targets.gamma_r);
    Ok(ThroughputOptimum {
        x_m,
        chi_up,
        chi_star,
        r_opt,
        t2_lb,
        t2_ub,
        tau,
    })
}

/// `T2 (1 - P_eo(T1, T2))` under the Gamma approximation.
pub fn effective_active_time(params: &NetworkParams, e_c: f64, t1: f64, t2: f64) -> f64 {
    t2 * (1.0 - analytic::energy_outage(params, &SlotConfig::new(t1, t2), e_c))
}

/// Optimal throughput and the `(T1, T2)` curve reaching it, with `T2` on a
/// geometric grid over `(T2_LB, T2_UB]`.
pub fn optimize_slot(
    params: &NetworkParams,
    targets: &LinkTargets,
    grid_size: usize,
) -> Result<SlotOptimization, OptimizeError> {
    let optimum = throughput_optimum(params, targets)?;
    let target = optimum.t2_lb;
    let ratio = optimum.t2_ub / optimum.t2_lb;
    let n = grid_size.max(1);
    let mut diagnostics = Vec::new();

    let curve: Vec<TradeoffPoint> = (1..=n)
        .map(|i| {
            let t2 = optimum.t2_lb * ratio.powf(i as f64 / n as f64);
            let t2 = if i == n { optimum.t2_ub } else { t2 };
            let (point, note) = solve_t1(params, targets.e_c, t2, target);
            if let Some(note) = note {
                diagnostics.push(note);
            }
            point
        })
        .collect();

    if curve.iter().all(|p| !p.feasible) {
        return Err(OptimizeError::Infeasible {
            points: curve.len(),
            cap: T1_CAP,
        });
    }
    Ok(SlotOptimization {
        optimum,
        curve,
        diagnostics,
    })
}

fn solve_t1(
    params: &NetworkParams,
    e_c: f64,
    t2: f64,
    target: f64,
) -> (TradeoffPoint, Option<String>) {
    let g = |t1: f64| effective_active_time(params, e_c, t1, t2) - target;
    let infeasible = |note| {
        (
            TradeoffPoint {
                t1: f64::NAN,
                t2,
                feasible: false,
                achieved_p: f64::NAN,
            },
            note,
        )
    };

    let (lo, mut hi) = T1_BRACKET;
    if g(lo) > 0.0 {
        return infeasible(Some(format!(
            "T2={t2}: T2(1-P_eo) already exceeds the target at T1={lo}"
        )));
    }
    let mut g_prev = g(lo);
    let mut note = None;
    loop {
        let g_hi = g(hi);
        if g_hi < g_prev - 1e-12 {
            note = Some(format!(
                "T2={t2}: T2(1-P_eo) decreased in T1 between brackets ending at {hi}"
            ));
        }
        if g_hi >= 0.0 {
            break;
        }
        if hi >= T1_CAP {
            return infeasible(note);
        }
        g_prev = g_hi;
        hi = (2.0 * hi).min(T1_CAP);
    }
    let t1 = bisect(g, lo, hi, 0.0);
    let achieved_p = effective_active_time(params, e_c, t1, t2);
    let feasible = ((achieved_p - target) / target).abs() <= 1e-6;
    (
        TradeoffPoint {
            t1,
            t2,
            feasible,
            achieved_p,
        },
        note,
    )
}

/// Closed-form metrics at one density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub lambda: f64,
    pub throughput: f64,
    pub p_eo: f64,
    pub p_io: f64,
    pub feasible: bool,
}

/// Evaluates throughput and both outage constraints along a density grid.
pub fn density_sweep(
    params: &NetworkParams,
    slot: &SlotConfig,
    targets: &LinkTargets,
    lambda_grid: &[f64],
    regime: NoiseRegime,
) -> Result<Vec<DensityPoint>, OptimizeError> {
    let ascending = lambda_grid.windows(2).all(|w| w[1] > w[0]);
    if lambda_grid.is_empty() || !ascending || lambda_grid[0] <= 0.0 {
        return Err(OptimizeError::BadGrid);
    }
    Ok(lambda_grid
        .iter()
        .map(|&lambda| {
            let p = params.with_lambda(lambda);
            let perf = analytic::evaluate(&p, slot, targets, regime);
            DensityPoint {
                lambda,
                throughput: perf.throughput,
                p_eo: perf.p_eo,
                p_io: perf.p_io,
                feasible: perf.p_eo <= targets.eps_e && perf.p_io <= targets.eps_i,
            }
        })
        .collect())
}

/// Grid point with the largest throughput, optionally among feasible points.
pub fn best_density(points: &[DensityPoint], feasible_only: bool) -> Option<&DensityPoint> {
    points
        .iter()
        .filter(|p| !feasible_only || p.feasible)
        .max_by(|a, b| a.throughput.total_cmp(&b.throughput))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(x: f64, m: usize) -> f64 {
        x * poisson_cdf(x, m)
    }

    fn grid_argmax(m: usize) -> f64 {
        let n = 2_000_000;
        let hi = 2.0 * m as f64;
        (0..=n)
            .map(|i| hi * i as f64 / n as f64)
            .max_by(|a, b| f(*a, m).total_cmp(&f(*b, m)))
            .unwrap()
    }

    #[test]
    fn x_m_single_antenna() {
        assert_eq!(solve_x_m(1), 1.0);
    }

    #[test]
    fn x_m_three_antennas() {
        let x = solve_x_m(3);
        assert!((x - 2.2695).abs() < 1e-4, "{x}");
        assert!((x - grid_argmax(3)).abs() < 1e-3);
    }

    #[test]
    fn x_m_five_antennas() {
        let x = solve_x_m(5);
        assert!(x > 2.5 && x < 5.0);
        assert!((x - grid_argmax(5)).abs() < 1e-3);
    }

    #[test]
    fn q_changes_sign_on_bracket() {
        for m in 2..12 {
            let mf = m as f64;
            assert!(throughput_slope(0.5 * mf, m) > 0.0);
            assert!(throughput_slope(mf, m) < 0.0);
            assert!(throughput_slope(solve_x_m(m), m).abs() < 1e-8);
        }
    }

    #[test]
    fn objective_is_unimodal() {
        for m in 1..=8 {
            let x_m = solve_x_m(m);
            let xs: Vec<f64> = (0..=4000)
                .map(|i| 3.0 * m as f64 * i as f64 / 4000.0)
                .collect();
            for w in xs.windows(2) {
                let (a, b) = (f(w[0], m), f(w[1], m));
                if w[1] <= x_m {
                    assert!(b >= a - 1e-15, "m={m} x={}", w[1]);
                } else if w[0] >= x_m {
                    assert!(b <= a + 1e-15, "m={m} x={}", w[1]);
                }
            }
        }
    }

    #[test]
    fn h_inverse_single_antenna_half() {
        let x = h_inverse(0.5, 1).unwrap();
        assert!((x - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn h_inverse_round_trips() {
        for m in [1usize, 3, 5] {
            for y in [0.1, 0.5, 0.9] {
                let x = h_inverse(y, m).unwrap();
                assert!((poisson_cdf(x, m) - y).abs() < 1e-8);
            }
        }
        let x = h_inverse(0.65, 3).unwrap();
        assert!((poisson_cdf(x, 3) - 0.65).abs() < 1e-9);
        assert!(x > 0.0);
    }

    #[test]
    fn h_inverse_rejects_bad_probability() {
        assert!(h_inverse(0.0, 3).is_err());
        assert!(h_inverse(1.0, 3).is_err());
        assert!(h_inverse(-0.2, 3).is_err());
    }

    #[test]
    fn bisect_finds_simple_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, ROOT_TOL);
        assert!((r - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn optimum_with_loose_information_constraint() {
        let p = NetworkParams::default();
        let mut t = LinkTargets::default();
        t.eps_i = 0.7;
        let o = throughput_optimum(&p, &t).unwrap();
        assert_eq!(o.chi_star, o.x_m);
        assert!(o.t2_lb < o.t2_ub);
        for eps in [0.6, 0.5, 0.4] {
            t.eps_i = eps;
            let o2 = throughput_optimum(&p, &t).unwrap();
            assert_eq!(o2.r_opt, o.r_opt);
        }
    }

    #[test]
    fn tradeoff_points_reach_the_optimum() {
        let p = NetworkParams::default();
        let t = LinkTargets::default();
        let sol = optimize_slot(&p, &t, 16).unwrap();
        assert!(sol.feasible_points().count() > 0);
        for pt in sol.feasible_points() {
            let s = SlotConfig::new(pt.t1, pt.t2);
            let p_eo = analytic::energy_outage(&p, &s, t.e_c);
            let r =
                analytic::spatial_throughput(&p, &s, &t, p_eo, NoiseRegime::InterferenceLimited);
            assert!(((r - sol.optimum.r_opt) / sol.optimum.r_opt).abs() < 1e-3);
        }
    }

    #[test]
    fn unreachable_energy_threshold_is_infeasible() {
        let p = NetworkParams::default();
        let mut t = LinkTargets::default();
        t.e_c = 1e9;
        assert!(matches!(
            optimize_slot(&p, &t, 8),
            Err(OptimizeError::Infeasible { .. })
        ));
    }

    #[test]
    fn density_sweep_rejects_bad_grids() {
        let (p, s, t) = Default::default();
        for g in [vec![], vec![0.0, 0.1], vec![0.2, 0.1]] {
            assert_eq!(
                density_sweep(&p, &s, &t, &g, NoiseRegime::Full),
                Err(OptimizeError::BadGrid)
            );
        }
    }

    #[test]
    fn density_sweep_throughput_vanishes_at_low_density() {
        let (p, s, t) = Default::default();
        let pts = density_sweep(&p, &s, &t, &[1e-9, 1e-6, 0.03], NoiseRegime::Full).unwrap();
        assert!(pts[0].throughput < 1e-7);
        assert!(pts[0].throughput < pts[1].throughput && pts[1].throughput < pts[2].throughput);
    }
}
