//! Special functions used by the closed-form solutions: erf and Bessel
//! functions of real order.

use libm::{lgamma as ln_gamma, tgamma as gamma};

use crate::error::{Error, Result};

/// Function families exposed through [`special_fn`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpecialKind {
    Erf,
    BesselJ(f64),
    BesselI(f64),
}

pub const MAX_ORDER: f64 = 10.0;
pub const MAX_ARG: f64 = 50.0;

/// Evaluates a special function inside its supported range
/// (order in `[0, 10]`, argument in `[0, 50]` for the Bessel families).
pub fn special_fn(kind: SpecialKind, arg: f64) -> Result<f64> {
    match kind {
        SpecialKind::Erf => Ok(erf(arg)),
        SpecialKind::BesselJ(nu) => {
            check_range(nu, arg)?;
            Ok(bessel_j(nu, arg))
        }
        SpecialKind::BesselI(nu) => {
            check_range(nu, arg)?;
            Ok(bessel_i(nu, arg))
        }
    }
}

fn check_range(nu: f64, x: f64) -> Result<()> {
    if !(0.0..=MAX_ORDER).contains(&nu) {
        return Err(Error::Invalid(format!(
            "Bessel order {nu} outside [0, {MAX_ORDER}]"
        )));
    }
    if !(0.0..=MAX_ARG).contains(&x) {
        return Err(Error::Invalid(format!(
            "Bessel argument {x} outside [0, {MAX_ARG}]"
        )));
    }
    Ok(())
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

/// `(x/2)^nu / Gamma(nu + 1)`, the leading factor of both Bessel series.
fn series_prefactor(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    (nu * (0.5 * x).ln() - ln_gamma(nu + 1.0)).exp()
}

/// Ascending series `sum_k (sign * x^2/4)^k / (k! (nu+1)_k)`.
fn ascending_series(nu: f64, x: f64, sign: f64) -> f64 {
    let q = sign * 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * (nu + k));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() && k > 0.5 * x {
            return sum;
        }
        k += 1.0;
        if k > 500.0 {
            return sum;
        }
    }
}

/// Modified Bessel function of the first kind, `I_nu(x)`, `nu >= 0`, `x >= 0`.
pub fn bessel_i(nu: f64, x: f64) -> f64 {
    if x > MAX_ARG {
        return bessel_i_scaled(nu, x) * x.exp();
    }
    series_prefactor(nu, x) * ascending_series(nu, x, 1.0)
}

/// Exponentially scaled `exp(-x) I_nu(x)`; stays finite for large `x`.
pub fn bessel_i_scaled(nu: f64, x: f64) -> f64 {
    if x <= MAX_ARG {
        if x == 0.0 {
            return series_prefactor(nu, 0.0);
        }
        let log_pre = nu * (0.5 * x).ln() - ln_gamma(nu + 1.0) - x;
        return log_pre.exp() * ascending_series(nu, x, 1.0);
    }
    // Large-argument expansion; terms shrink monotonically for x > 50, nu <= 10
    // until the series is truncated at its smallest term.
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() >= prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if prev < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

/// Bessel function of the first kind, `J_nu(x)`, `nu >= 0`, `x >= 0`.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    if x < 12.0 {
        return series_prefactor(nu, x) * ascending_series(nu, x, -1.0);
    }
    bessel_j_miller(nu, x)
}

/// Backward recurrence in the order, normalized with
/// `(x/2)^nu = sum_k w_k J_{nu+2k}(x)`, `w_0 = Gamma(nu+1)`,
/// `w_k = (nu+2k) Gamma(nu+k) / k!`.
fn bessel_j_miller(nu: f64, x: f64) -> f64 {
    let mut top = (x + 30.0 + 3.0 * x.sqrt()).ceil() as usize;
    top += top % 2;
    let mut next = 0.0; // J_{nu+j+1}
    let mut cur = 1e-300; // J_{nu+j}
    let mut norm = 0.0;
    let mut j = top;
    let weight = |k: usize| -> f64 {
        if k == 0 {
            gamma(nu + 1.0)
        } else {
            let kf = k as f64;
            (nu + 2.0 * kf) * (ln_gamma(nu + kf) - ln_gamma(kf + 1.0)).exp()
        }
    };
    loop {
        if j.is_multiple_of(2) {
            norm += weight(j / 2) * cur;
        }
        if j == 0 {
            break;
        }
        let order = nu + j as f64;
        let prev = 2.0 * order / x * cur - next;
        next = cur;
        cur = prev;
        j -= 1;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
        }
    }
    let target = (nu * (0.5 * x).ln()).exp();
    cur * target / norm
}
