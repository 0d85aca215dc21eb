//! Sampling windows and time-space Poisson realizations.
//!
//! Coordinates put the typical reader at the origin with its slot starting at
//! `t = 0`; its tag sits at `(d0, 0)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::rng::{self, complex_normal, LANE_NETWORK, LANE_THINNING, LANE_TYPICAL};
use super::SimError;
use crate::model::{NetworkParams, SlotConfig};

pub const DEFAULT_R_HARVEST: f64 = 100.0;
pub const DEFAULT_R_INTERF: f64 = 100.0;

/// What a window has to cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowKind {
    /// Readers around the typical tag during its harvest phase.
    Energy,
    /// Tags around the typical reader during its backscatter phase.
    Interference,
    /// Both, plus every reader that powers an interfering tag.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimWindow {
    pub kind: WindowKind,
    /// Readers further than this from a tag are ignored when integrating its energy, m.
    pub r_harvest: f64,
    /// Tags further than this from the typical reader do not interfere, m.
    pub r_interf: f64,
    /// Centre of the sampling disc.
    pub center: [f64; 2],
    /// Radius of the sampling disc, m.
    pub radius: f64,
    /// Earliest sampled slot start, ms.
    pub t_lo: f64,
    /// Latest sampled slot start, ms.
    pub t_hi: f64,
}

impl SimWindow {
    /// Readers within `r_harvest` of the typical tag whose slot overlaps
    /// `[0, T1]`.
    pub fn energy(params: &NetworkParams, slot: &SlotConfig, r_harvest: f64) -> Self {
        SimWindow {
            kind: WindowKind::Energy,
            r_harvest,
            r_interf: 0.0,
            center: [params.d0, 0.0],
            radius: r_harvest,
            t_lo: -slot.total(),
            t_hi: slot.t1,
        }
    }

    /// Pairs whose tag can interfere with the typical reader: tag within
    /// `r_interf`, slot start in `[-T2, T2]`.
    pub fn interference(params: &NetworkParams, slot: &SlotConfig, r_interf: f64) -> Self {
        SimWindow {
            kind: WindowKind::Interference,
            r_harvest: 0.0,
            r_interf,
            center: [0.0, 0.0],
            radius: r_interf + params.d0,
            t_lo: -slot.t2,
            t_hi: slot.t2,
        }
    }

    /// Covers the typical tag's harvest, every candidate interferer, and the
    /// readers that power each candidate during its own harvest phase.
    pub fn joint(params: &NetworkParams, slot: &SlotConfig, r_harvest: f64, r_interf: f64) -> Self {
        SimWindow {
            kind: WindowKind::Joint,
            r_harvest,
            r_interf,
            center: [0.0, 0.0],
            radius: r_interf.max(params.d0) + r_harvest,
            t_lo: -(slot.total() + slot.t2),
            t_hi: slot.total(),
        }
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn duration(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    pub fn expected_points(&self, lambda: f64) -> f64 {
        lambda * self.area() * self.duration()
    }

    pub fn validate(&self, params: &NetworkParams) -> Result<(), SimError> {
        let harvest_ok = self.r_harvest >= params.r_o;
        let interf_ok = self.r_interf >= params.d0;
        let ok = self.radius > 0.0
            && self.t_hi > self.t_lo
            && match self.kind {
                WindowKind::Energy => harvest_ok,
                WindowKind::Interference => interf_ok,
                WindowKind::Joint => harvest_ok && interf_ok,
            };
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidWindow(format!("{self:?}")))
        }
    }

    /// Same window with smaller truncation radii; sampling geometry unchanged.
    pub fn truncated(&self, r_harvest: f64, r_interf: f64) -> Self {
        SimWindow {
            r_harvest: r_harvest.min(self.r_harvest),
            r_interf: r_interf.min(self.r_interf),
            ..*self
        }
    }
}

/// One reader-tag pair of the process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPoint {
    pub reader: [f64; 2],
    pub tag: [f64; 2],
    /// Slot start, ms.
    pub start: f64,
    /// Forward fading from this reader to the typical tag, with the beam
    /// and carrier phase folded in.
    pub xi: Complex64,
}

/// A pair whose tag may interfere with the typical reader.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    /// Index into `NetworkRealization::points`.
    pub point: usize,
    /// Tag to typical reader, m.
    pub distance: f64,
    /// Overlap of its backscatter phase with the typical one, in `(0, 1]`.
    pub weight: f64,
    /// Uniform mark used for independent thinning.
    pub mark: f64,
}

impl Interferer {
    /// `w(t_x) r^-alpha`
    pub fn strength(&self, alpha: f64) -> f64 {
        self.weight * self.distance.powf(-alpha)
    }
}

/// One sampled space-time pattern with all fading attached.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    pub window: SimWindow,
    pub seed: u64,
    pub trial: u64,
    pub antennas: usize,
    /// Sorted by slot start.
    pub points: Vec<PairPoint>,
    pub interferers: Vec<Interferer>,
    /// Reverse channel of each interferer, `antennas` entries each.
    reverse_fading: Vec<Complex64>,
    /// Reverse channel of the typical pair.
    pub g0: Vec<Complex64>,
}

impl NetworkRealization {
    pub fn typical_reader(&self) -> [f64; 2] {
        [0.0, 0.0]
    }

    pub fn typical_tag(&self, params: &NetworkParams) -> [f64; 2] {
        [params.d0, 0.0]
    }

    pub fn interferer_fading(&self, k: usize) -> &[Complex64] {
        &self.reverse_fading[k * self.antennas..(k + 1) * self.antennas]
    }

    /// View with smaller truncation radii, for truncation-sensitivity checks
    /// on common random numbers.
    pub fn truncated(&self, r_harvest: f64, r_interf: f64) -> NetworkRealization {
        let window = self.window.truncated(r_harvest, r_interf);
        let mut interferers = Vec::new();
        let mut reverse_fading = Vec::new();
        for (k, i) in self.interferers.iter().enumerate() {
            if i.distance <= window.r_interf {
                interferers.push(*i);
                reverse_fading.extend_from_slice(self.interferer_fading(k));
            }
        }
        NetworkRealization {
            window,
            interferers,
            reverse_fading,
            ..self.clone()
        }
    }
}

/// Backscatter overlap weight `(T2 - |t|)/T2` on `[-T2, T2]`.
pub fn overlap_weight(start: f64, t2: f64) -> f64 {
    let w = (t2 - start.abs()) / t2;
    w.max(0.0)
}

pub(crate) fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Draws one realization; a pure function of `(seed, trial)`.
pub fn sample_network(
    params: &NetworkParams,
    slot: &SlotConfig,
    window: &SimWindow,
    seed: u64,
    trial: u64,
) -> NetworkRealization {
    let mut rng = rng::stream(seed, trial, LANE_NETWORK);
    let mean = window.expected_points(params.lambda);
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map(|d| d.sample(&mut rng) as usize)
            .unwrap_or(0)
    } else {
        0
    };

    let span = window.duration();
    let mut points: Vec<PairPoint> = (0..count)
        .map(|_| {
            let r = window.radius * rng.random::<f64>().sqrt();
            let theta = 2.0 * PI * rng.random::<f64>();
            let reader = [
                window.center[0] + r * theta.cos(),
                window.center[1] + r * theta.sin(),
            ];
            let start = window.t_lo + span * rng.random::<f64>();
            let heading = 2.0 * PI * rng.random::<f64>();
            let tag = [
                reader[0] + params.d0 * heading.cos(),
                reader[1] + params.d0 * heading.sin(),
            ];
            PairPoint {
                reader,
                tag,
                start,
                xi: Complex64::new(0.0, 0.0),
            }
        })
        .collect();
    points.sort_by(|a, b| a.start.total_cmp(&b.start));
    for p in points.iter_mut() {
        p.xi = complex_normal(&mut rng);
    }

    let m = params.antennas;
    let mut marks = rng::stream(seed, trial, LANE_THINNING);
    let mut interferers = Vec::new();
    let mut reverse_fading = Vec::new();
    if window.r_interf > 0.0 {
        for (idx, p) in points.iter().enumerate() {
            let d = distance(p.tag, [0.0, 0.0]);
            let weight = overlap_weight(p.start, slot.t2);
            if d <= window.r_interf && weight > 0.0 && d > 0.0 {
                interferers.push(Interferer {
                    point: idx,
                    distance: d,
                    weight,
                    mark: marks.random(),
                });
                reverse_fading.extend((0..m).map(|_| complex_normal(&mut rng)));
            }
        }
    }

    let mut typical = rng::stream(seed, trial, LANE_TYPICAL);
    let g0 = (0..m).map(|_| complex_normal(&mut typical)).collect();

    NetworkRealization {
        window: *window,
        seed,
        trial,
        antennas: m,
        points,
        interferers,
        reverse_fading,
        g0,
    }
}
