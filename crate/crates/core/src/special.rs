//! Special functions: log-gamma, the regularized lower incomplete gamma
//! function, and the Poisson CDF family used by the outage expressions.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 1_000_000;

/// `ln |Gamma(x)|` via the Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        (PI / (PI * x).sin()).abs().ln() - ln_gamma(1.0 - x)
    } else {
        let x = x - 1.0;
        let t = x + LANCZOS_G + 0.5;
        let mut a = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
}

/// Regularized lower incomplete gamma `P(a, x) = gamma(a, x) / Gamma(a)`.
///
/// Series expansion for `x < a + 1`, Lentz continued fraction for the
/// complement otherwise.
pub fn regularized_lower_gamma(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0);
    if x.is_nan() || a.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut n = 1.0;
        for _ in 0..MAX_ITER {
            term *= x / (a + n);
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
            n += 1.0;
        }
        (sum * log_prefactor.exp()).min(1.0)
    } else {
        1.0 - upper_gamma_continued_fraction(a, x, log_prefactor)
    }
}

fn upper_gamma_continued_fraction(a: f64, x: f64, log_prefactor: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (log_prefactor.exp() * h).clamp(0.0, 1.0)
}

/// Log of the Poisson probability mass `x^i e^-x / i!`.
fn ln_poisson_pmf(i: usize, x: f64) -> f64 {
    if i == 0 {
        -x
    } else {
        i as f64 * x.ln() - x - ln_gamma(i as f64 + 1.0)
    }
}

/// `H(x) = sum_{i<m} x^i e^-x / i!`, the probability that a Poisson variable
/// with mean `x` is below `m`.
///
/// Terms are accumulated relative to the largest one so that nothing
/// overflows or underflows for large `x * m`.
pub fn poisson_cdf(x: f64, m: usize) -> f64 {
    debug_assert!(m >= 1);
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    let top = (x.floor() as usize).min(m - 1);
    let mut sum = 1.0;
    let mut t = 1.0;
    for i in (0..top).rev() {
        t *= (i + 1) as f64 / x;
        sum += t;
        if t < sum * EPS {
            break;
        }
    }
    t = 1.0;
    for i in top + 1..m {
        t *= x / i as f64;
        sum += t;
        if t < sum * EPS {
            break;
        }
    }
    (sum * ln_poisson_pmf(top, x).exp()).min(1.0)
}

/// `dH/dx = -x^(m-1) e^-x / (m-1)!`.
pub fn poisson_cdf_derivative(x: f64, m: usize) -> f64 {
    debug_assert!(m >= 1);
    if x <= 0.0 {
        return if m == 1 { -1.0 } else { 0.0 };
    }
    -ln_poisson_pmf(m - 1, x).exp()
}

/// `e^-x Q(x)` where `Q(x) = sum_{n<m} x^n/n! - x^m/(m-1)!`.
///
/// Equals the derivative of `x H(x)`; its root is the maximiser of the
/// spatial-throughput objective.
pub fn throughput_slope(x: f64, m: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    poisson_cdf(x, m) - (m as f64 * x.ln() - x - ln_gamma(m as f64)).exp()
}
