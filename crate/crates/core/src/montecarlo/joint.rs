//! Joint energy/information evaluation of one realization.
//!
//! An interferer transmits only if its own tag harvested at least `E_C`.
//! SINR is monotone in the interference matrix, so the outage decision can be
//! bracketed by assuming every undecided interferer silent (upper SINR) or
//! active (lower SINR). Interferers are energized strongest first, and only
//! until every threshold is decided; the result equals the exhaustive one.

use super::energy::{harvested_energy, interferer_energy};
use super::network::NetworkRealization;
use super::sinr::{sinr_from_matrix, Hermitian};
use super::SimError;
use crate::model::{NetworkParams, SlotConfig};

const FIRST_BATCH: usize = 4;

pub struct JointTrial<'a> {
    real: &'a NetworkRealization,
    params: &'a NetworkParams,
    slot: &'a SlotConfig,
    sigma_sq: f64,
    order: Vec<usize>,
    strengths: Vec<f64>,
    /// `suffix[j]` sums the outer products of `order[j..]`.
    suffix: Vec<Hermitian>,
    energies: Vec<Option<f64>>,
    typical_energy: f64,
}

impl<'a> JointTrial<'a> {
    pub fn new(
        real: &'a NetworkRealization,
        params: &'a NetworkParams,
        slot: &'a SlotConfig,
        sigma_sq: f64,
    ) -> Self {
        let n = real.interferers.len();
        let m = real.antennas;
        let strengths: Vec<f64> = real
            .interferers
            .iter()
            .map(|i| i.strength(params.alpha))
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| strengths[b].total_cmp(&strengths[a]).then(a.cmp(&b)));
        let mut suffix = vec![Hermitian::zeros(m); n + 1];
        for j in (0..n).rev() {
            let mut next = suffix[j + 1].clone();
            next.add_outer(strengths[order[j]], real.interferer_fading(order[j]));
            suffix[j] = next;
        }
        JointTrial {
            real,
            params,
            slot,
            sigma_sq,
            order,
            strengths,
            suffix,
            energies: vec![None; n],
            typical_energy: harvested_energy(real, params, slot),
        }
    }

    pub fn typical_energy(&self) -> f64 {
        self.typical_energy
    }

    /// Number of interferers whose energy has been integrated so far.
    pub fn energized_evaluations(&self) -> usize {
        self.energies.iter().filter(|e| e.is_some()).count()
    }

    fn energy(&mut self, k: usize) -> f64 {
        if let Some(e) = self.energies[k] {
            return e;
        }
        let e = interferer_energy(self.real, self.params, self.slot, k);
        self.energies[k] = Some(e);
        e
    }

    fn sinr(&self, a: &Hermitian, any: bool) -> Result<f64, SimError> {
        if self.sigma_sq == 0.0 && !any {
            return Ok(f64::INFINITY);
        }
        sinr_from_matrix(a, &self.real.g0, self.params, self.sigma_sq)
    }

    /// Outage indicator `SINR < gamma` for each threshold, with interferers
    /// active iff their harvested energy reaches `e_c`.
    pub fn outage(&mut self, e_c: f64, gammas: &[f64]) -> Result<Vec<bool>, SimError> {
        let m = self.real.antennas;
        let n = self.order.len();
        let mut known = Hermitian::scaled_identity(m, self.sigma_sq);
        let mut any_known = false;
        let mut decided: Vec<Option<bool>> = vec![None; gammas.len()];
        let mut pos = 0;
        let mut batch = FIRST_BATCH;
        loop {
            let hi = self.sinr(&known, any_known)?;
            let lo = if pos < n {
                let mut full = known.clone();
                full.add(&self.suffix[pos]);
                self.sinr(&full, true)?
            } else {
                hi
            };
            for (d, &g) in decided.iter_mut().zip(gammas) {
                if d.is_none() {
                    if hi < g {
                        *d = Some(true);
                    } else if lo >= g {
                        *d = Some(false);
                    }
                }
            }
            if decided.iter().all(Option::is_some) || pos >= n {
                break;
            }
            let end = (pos + batch).min(n);
            for j in pos..end {
                let k = self.order[j];
                if self.energy(k) >= e_c {
                    known.add_outer(self.strengths[k], self.real.interferer_fading(k));
                    any_known = true;
                }
            }
            pos = end;
            batch *= 2;
        }
        Ok(decided.into_iter().map(|d| d.unwrap_or(false)).collect())
    }

    /// Same decision with every interferer energized.
    pub fn outage_exhaustive(&mut self, e_c: f64, gammas: &[f64]) -> Result<Vec<bool>, SimError> {
        let m = self.real.antennas;
        let mut a = Hermitian::scaled_identity(m, self.sigma_sq);
        let mut any = false;
        for k in 0..self.order.len() {
            if self.energy(k) >= e_c {
                a.add_outer(self.strengths[k], self.real.interferer_fading(k));
                any = true;
            }
        }
        let s = self.sinr(&a, any)?;
        Ok(gammas.iter().map(|&g| s < g).collect())
    }
}
