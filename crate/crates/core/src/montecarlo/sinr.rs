//! MMSE receiver SINR at the typical reader.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::network::NetworkRealization;
use super::SimError;
use crate::model::{DerivedConstants, NetworkParams};

/// Relative residual above which one refinement step is taken.
pub const REFINE_THRESHOLD: f64 = 1e-10;

/// Dense Hermitian matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian {
    n: usize,
    a: Vec<Complex64>,
}

impl Hermitian {
    pub fn zeros(n: usize) -> Self {
        Hermitian {
            n,
            a: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut h = Self::zeros(n);
        for i in 0..n {
            h.a[i * n + i] = Complex64::new(s, 0.0);
        }
        h
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.a[i * self.n + j]
    }

    /// `self += w v v^H`
    pub fn add_outer(&mut self, w: f64, v: &[Complex64]) {
        let n = self.n;
        for i in 0..n {
            let vi = v[i] * w;
            for j in 0..n {
                self.a[i * n + j] += vi * v[j].conj();
            }
        }
    }

    pub fn add(&mut self, other: &Hermitian) {
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += *y;
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn cholesky(&self) -> Option<Vec<Complex64>> {
        let n = self.n;
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut d = self.get(j, j).re;
            for k in 0..j {
                d -= l[j * n + k].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[j * n + j] = Complex64::new(djj, 0.0);
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / djj;
            }
        }
        Some(l)
    }
}

fn solve_factored(l: &[Complex64], n: usize, b: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i].conj() * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Normwise backward error `||A x - b|| / (||A|| ||x|| + ||b||)`.
pub fn relative_residual(a: &Hermitian, x: &[Complex64], b: &[Complex64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<Complex64> = ax.iter().zip(b).map(|(u, v)| u - v).collect();
    let denom = a.frobenius() * norm(x) + norm(b);
    if denom > 0.0 {
        norm(&r) / denom
    } else {
        0.0
    }
}

/// Solution of `A x = b` for Hermitian positive definite `A`.
pub fn solve(a: &Hermitian, b: &[Complex64]) -> Result<Vec<Complex64>, SimError> {
    let n = a.dim();
    let l = a.cholesky().ok_or(SimError::NotPositiveDefinite)?;
    let mut x = solve_factored(&l, n, b);
    if relative_residual(a, &x, b) > REFINE_THRESHOLD {
        let ax = a.mul_vec(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(u, v)| u - v).collect();
        let dx = solve_factored(&l, n, &r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
    }
    Ok(x)
}

/// `b^H A^-1 b`.
pub fn inverse_quadratic_form(a: &Hermitian, b: &[Complex64]) -> Result<f64, SimError> {
    let x = solve(a, b)?;
    Ok(b.iter().zip(&x).map(|(u, v)| (u.conj() * v).re).sum())
}

/// Which candidate interferers are transmitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Activity {
    /// Every candidate.
    All,
    /// Candidates whose mark falls below the probability.
    Thinned { p_active: f64 },
}

impl Activity {
    pub fn is_active(&self, mark: f64) -> bool {
        match *self {
            Activity::All => true,
            Activity::Thinned { p_active } => mark < p_active,
        }
    }
}

/// `d0^-alpha g0^H (sum_active w r^-alpha g g^H + sigma^2 I)^-1 g0` for the
/// interferers selected by `active(k)`.
pub fn sinr_with<F: Fn(usize) -> bool>(
    real: &NetworkRealization,
    params: &NetworkParams,
    sigma_sq: f64,
    active: F,
) -> Result<f64, SimError> {
    let m = real.antennas;
    let mut a = Hermitian::scaled_identity(m, sigma_sq);
    let mut any = false;
    for (k, i) in real.interferers.iter().enumerate() {
        if active(k) {
            a.add_outer(i.strength(params.alpha), real.interferer_fading(k));
            any = true;
        }
    }
    if sigma_sq == 0.0 && !any {
        return Ok(f64::INFINITY);
    }
    sinr_from_matrix(&a, &real.g0, params, sigma_sq)
}

pub(crate) fn sinr_from_matrix(
    a: &Hermitian,
    g0: &[Complex64],
    params: &NetworkParams,
    sigma_sq: f64,
) -> Result<f64, SimError> {
    match inverse_quadratic_form(a, g0) {
        Ok(q) => Ok(params.d0.powf(-params.alpha) * q),
        Err(SimError::NotPositiveDefinite) if sigma_sq == 0.0 => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// SINR of the typical link under the given activity rule, with the noise
/// level taken from `dc`.
pub fn simulate_sinr(
    real: &NetworkRealization,
    params: &NetworkParams,
    dc: &DerivedConstants,
    activity: Activity,
) -> Result<f64, SimError> {
    sinr_with(real, params, dc.sigma_sq, |k| {
        activity.is_active(real.interferers[k].mark)
    })
}
