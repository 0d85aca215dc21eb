//! Exact harvested-energy integral over a realization.
//!
//! A tag harvests `eta * |S(t)|^2` where `S(t)` is the coherent sum of the
//! amplitudes of all readers transmitting at `t`. The active set only changes
//! at slot starts and slot ends, so the integral is a finite sum.

use num_complex::Complex64;

use super::network::NetworkRealization;
use super::rng::{self, complex_normal, LANE_TAG_BASE};
use crate::model::{NetworkParams, SlotConfig};

/// A reader transmitting in `[start, start + T]` with complex amplitude
/// `amp` at the tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contribution {
    pub start: f64,
    pub amp: Complex64,
}

/// `sqrt(P_T) * xi * L(d)^(-alpha/2)` with the bounded path loss.
pub fn reader_amplitude(params: &NetworkParams, d: f64, xi: Complex64) -> Complex64 {
    amplitude_sq_dist(params, d * d, xi)
}

fn amplitude_sq_dist(params: &NetworkParams, d_sq: f64, xi: Complex64) -> Complex64 {
    let x = d_sq.max(params.r_o * params.r_o);
    // x^(-alpha/4)
    let loss = if params.alpha == 3.0 {
        let r = x.sqrt();
        1.0 / (r * r.sqrt())
    } else if params.alpha == 4.0 {
        1.0 / x
    } else {
        x.powf(-params.alpha / 4.0)
    };
    xi * (params.p_t.sqrt() * loss)
}

fn dist_sq(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Dedicated-reader amplitude `sqrt(P_T G d0^-alpha)`.
pub fn dedicated_amplitude(params: &NetworkParams) -> f64 {
    (params.p_t * params.dedicated_gain()).sqrt()
}

/// `int_a^{a+T1} |d + sum_active amp|^2 dt` for contributions sorted by start.
///
/// Contributions starting outside `[a - T, a + T1]` are ignored.
pub fn integrate_power(
    dedicated: f64,
    contributions: &[Contribution],
    a: f64,
    t1: f64,
    total: f64,
) -> f64 {
    let end = a + t1;
    let mut sum = Complex64::new(dedicated, 0.0);
    for c in contributions {
        if c.start <= a && c.start + total > a {
            sum += c.amp;
        }
    }

    let mut ups = contributions
        .iter()
        .filter(|c| c.start > a && c.start < end)
        .peekable();
    let mut downs = contributions
        .iter()
        .filter(|c| c.start + total > a && c.start + total < end)
        .peekable();

    let mut t = a;
    let mut acc = 0.0;
    loop {
        let up = ups.peek().map(|c| c.start);
        let down = downs.peek().map(|c| c.start + total);
        let (at, rising) = match (up, down) {
            (None, None) => break,
            (Some(u), None) => (u, true),
            (None, Some(d)) => (d, false),
            (Some(u), Some(d)) => {
                if d <= u {
                    (d, false)
                } else {
                    (u, true)
                }
            }
        };
        acc += sum.norm_sqr() * (at - t);
        t = at;
        if rising {
            sum += ups.next().map(|c| c.amp).unwrap_or_default();
        } else {
            sum -= downs.next().map(|c| c.amp).unwrap_or_default();
        }
    }
    acc + sum.norm_sqr() * (end - t)
}

/// Midpoint Riemann sum of the same integral; a reference for the exact one.
pub fn riemann_power(
    dedicated: f64,
    contributions: &[Contribution],
    a: f64,
    t1: f64,
    total: f64,
    steps: usize,
) -> f64 {
    let h = t1 / steps as f64;
    let mut acc = 0.0;
    for i in 0..steps {
        let t = a + (i as f64 + 0.5) * h;
        let mut s = Complex64::new(dedicated, 0.0);
        for c in contributions {
            if c.start <= t && t <= c.start + total {
                s += c.amp;
            }
        }
        acc += s.norm_sqr();
    }
    acc * h
}

fn start_range(real: &NetworkRealization, lo: f64, hi: f64) -> std::ops::Range<usize> {
    let first = real.points.partition_point(|p| p.start < lo);
    let last = real.points.partition_point(|p| p.start <= hi);
    first..last.max(first)
}

/// Contributions of the non-dedicated readers to the typical tag, which
/// starts its slot at `0`.
pub fn typical_contributions(
    real: &NetworkRealization,
    params: &NetworkParams,
    slot: &SlotConfig,
) -> Vec<Contribution> {
    let tag = real.typical_tag(params);
    let r_sq = real.window.r_harvest * real.window.r_harvest;
    start_range(real, -slot.total(), slot.t1)
        .map(|i| &real.points[i])
        .filter_map(|p| {
            let d_sq = dist_sq(p.reader, tag);
            (d_sq <= r_sq).then(|| Contribution {
                start: p.start,
                amp: amplitude_sq_dist(params, d_sq, p.xi),
            })
        })
        .collect()
}

/// Energy harvested by the typical tag over `[0, T1]`, uJ.
pub fn harvested_energy(
    real: &NetworkRealization,
    params: &NetworkParams,
    slot: &SlotConfig,
) -> f64 {
    let contributions = typical_contributions(real, params, slot);
    params.eta
        * integrate_power(
            dedicated_amplitude(params),
            &contributions,
            0.0,
            slot.t1,
            slot.total(),
        )
}

/// Energy harvested by the tag of interferer `k` over its own harvest phase.
///
/// Forward fading towards this tag is drawn from the tag's own stream, in
/// start-time order, for every reader within `r_harvest` whose slot overlaps
/// the phase. The typical reader is one of them.
pub fn interferer_energy(
    real: &NetworkRealization,
    params: &NetworkParams,
    slot: &SlotConfig,
    k: usize,
) -> f64 {
    let idx = real.interferers[k].point;
    let me = real.points[idx];
    let a = me.start;
    let total = slot.total();
    let r_sq = real.window.r_harvest * real.window.r_harvest;
    let mut fading = rng::stream(real.seed, real.trial, LANE_TAG_BASE + idx as u64);

    let typical_reader = real.typical_reader();
    let mut typical_pending = {
        let d_sq = dist_sq(typical_reader, me.tag);
        (d_sq <= r_sq && 0.0 >= a - total && 0.0 <= a + slot.t1).then_some(d_sq)
    };

    let mut contributions = Vec::new();
    for i in start_range(real, a - total, a + slot.t1) {
        if i == idx {
            continue;
        }
        let p = &real.points[i];
        if let Some(d0) = typical_pending {
            if 0.0 < p.start {
                let amp = amplitude_sq_dist(params, d0, complex_normal(&mut fading));
                contributions.push(Contribution { start: 0.0, amp });
                typical_pending = None;
            }
        }
        let d_sq = dist_sq(p.reader, me.tag);
        if d_sq <= r_sq {
            let amp = amplitude_sq_dist(params, d_sq, complex_normal(&mut fading));
            contributions.push(Contribution {
                start: p.start,
                amp,
            });
        }
    }
    if let Some(d0) = typical_pending {
        let amp = amplitude_sq_dist(params, d0, complex_normal(&mut fading));
        contributions.push(Contribution { start: 0.0, amp });
    }

    params.eta
        * integrate_power(
            dedicated_amplitude(params),
            &contributions,
            a,
            slot.t1,
            total,
        )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::network::{sample_network, SimWindow};

    fn c(start: f64, re: f64, im: f64) -> Contribution {
        Contribution {
            start,
            amp: Complex64::new(re, im),
        }
    }

    #[test]
    fn dedicated_only() {
        let e = integrate_power(2.0, &[], 0.0, 0.5, 1.0);
        assert!((e - 4.0 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn hand_computed_piecewise() {
        // active on [0, 0.2) with 1 + 1 = 2, then [0.2, 0.3) with 1, then [0.3, 0.5] with 1 + i
        let cs = [c(-0.8, 1.0, 0.0), c(0.3, 0.0, 1.0)];
        let e = integrate_power(1.0, &cs, 0.0, 0.5, 1.0);
        let expected = 4.0 * 0.2 + 1.0 * 0.1 + 2.0 * 0.2;
        assert!((e - expected).abs() < 1e-14, "{e}");
    }

    #[test]
    fn matches_riemann_sum() {
        let cs = [
            c(-0.95, 0.3, -0.2),
            c(-0.7, -0.5, 0.4),
            c(-0.1, 0.2, 0.2),
            c(0.05, 0.7, -0.1),
            c(0.33, -0.4, -0.6),
        ];
        let exact = integrate_power(0.9, &cs, 0.0, 0.5, 1.0);
        let approx = riemann_power(0.9, &cs, 0.0, 0.5, 1.0, 200_000);
        assert!((exact - approx).abs() / exact < 1e-5);
    }

    #[test]
    fn zero_density_gives_dedicated_energy() {
        let p = NetworkParams::default().with_lambda(0.0);
        let s = SlotConfig::default();
        let w = SimWindow::energy(&p, &s, 100.0);
        let real = sample_network(&p, &s, &w, 1, 0);
        let e = harvested_energy(&real, &p, &s);
        let expected = p.eta * p.p_t * p.dedicated_gain() * s.t1;
        assert!((e - expected).abs() < 1e-12);
    }

    #[test]
    fn interferer_energy_is_reproducible() {
        let p = NetworkParams::default();
        let s = SlotConfig::default();
        let w = SimWindow::joint(&p, &s, 30.0, 30.0);
        let real = sample_network(&p, &s, &w, 11, 2);
        assert!(!real.interferers.is_empty());
        for k in 0..real.interferers.len() {
            let e = interferer_energy(&real, &p, &s, k);
            assert!(e > 0.0);
            assert_eq!(e, interferer_energy(&real, &p, &s, k));
        }
    }
}
