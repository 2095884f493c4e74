//! Hard-decision BPSK over AWGN, viewed as a binary symmetric channel.
//!
//! Energies are per channel use with the noise density normalized to one, so
//! the crossover probability for information energy `e` is `Q(sqrt(2 e))`.
//! Everything here is evaluated through `d = erf(sqrt(e)) = 1 - 2 eps`, which
//! keeps the capacity and its derivative accurate both near `e = 0` (where
//! `eps -> 1/2`) and deep in the tail (where `eps -> 0`).

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_2_SQRT_PI, LN_2, PI};

use crate::error::{Error, Result};

/// Below this value of `d` the capacity is summed as a power series in `d^2`.
const CAPACITY_SERIES_LIMIT: f64 = 0.5;

/// Below this argument erf is summed directly; above it erfc comes from the
/// continued fraction.
const SERIES_LIMIT: f64 = 2.0;

/// erf(z) for 0 <= z < SERIES_LIMIT via the all-positive series
/// erf(z) = 2/sqrt(pi) exp(-z^2) sum 2^n z^(2n+1) / (1*3*...*(2n+1)).
fn erf_series(z: f64) -> f64 {
    let z2 = z * z;
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * z2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-z2).exp() * sum
}

/// erfc(z) for z >= SERIES_LIMIT via the Laplace continued fraction,
/// evaluated with the modified Lentz method.
fn erfc_continued_fraction(z: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = 0.5 * k as f64;
        d = z + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        d = 1.0 / d;
        c = z + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-z * z).exp() / (f * PI.sqrt())
}

/// Returns `(erf(z), erfc(z))` for `z >= 0`, each with small relative error.
fn erf_pair(z: f64) -> (f64, f64) {
    debug_assert!(z >= 0.0);
    if z < SERIES_LIMIT {
        let e = erf_series(z);
        (e, 1.0 - e)
    } else {
        let c = erfc_continued_fraction(z);
        (1.0 - c, c)
    }
}

/// Upper-tail probability of the standard normal distribution.
pub fn q_function(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let tail = 0.5 * erf_pair(x.abs() * FRAC_1_SQRT_2).1;
    if x >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

fn check_energy(operation: &'static str, e_i: f64) -> Result<()> {
    if e_i.is_finite() && e_i >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            operation,
            name: "e_i",
            value: e_i,
        })
    }
}

/// `(d, eps)` with `d = 1 - 2 eps = erf(sqrt(e))`.
fn split(e_i: f64) -> (f64, f64) {
    let (erf, erfc) = erf_pair(e_i.sqrt());
    (erf, 0.5 * erfc)
}

/// BSC crossover probability `Q(sqrt(2 e_i))`.
pub fn crossover(e_i: f64) -> Result<f64> {
    check_energy("crossover", e_i)?;
    Ok(split(e_i).1)
}

/// Channel capacity in bits per channel use, `1 - H2(Q(sqrt(2 e_i)))`.
pub fn capacity(e_i: f64) -> Result<f64> {
    check_energy("capacity", e_i)?;
    Ok(capacity_unchecked(e_i))
}

pub(crate) fn capacity_unchecked(e_i: f64) -> f64 {
    let (d, eps) = split(e_i);
    if d < CAPACITY_SERIES_LIMIT {
        // 1 - H2((1 - d) / 2) = (1 / ln 2) sum_{k >= 1} d^(2k) / (2k (2k - 1))
        let d2 = d * d;
        let mut power = d2;
        let mut sum = 0.0;
        let mut k = 1.0;
        loop {
            let term = power / (2.0 * k * (2.0 * k - 1.0));
            sum += term;
            if term <= sum * 1e-17 {
                break;
            }
            power *= d2;
            k += 1.0;
        }
        sum / LN_2
    } else {
        let mut h = -(1.0 - eps) * (-eps).ln_1p();
        if eps > 0.0 {
            h -= eps * eps.ln();
        }
        1.0 - h / LN_2
    }
}

/// `log2((1 - eps) / eps)` for the crossover at `e_i`.
fn log_odds_bits(d: f64, eps: f64) -> f64 {
    if d < CAPACITY_SERIES_LIMIT {
        2.0 * d.atanh() / LN_2
    } else {
        ((-eps).ln_1p() - eps.ln()) / LN_2
    }
}

/// dC/de at `e_i > 0`. The formula is singular at zero, which is rejected.
pub fn capacity_derivative(e_i: f64) -> Result<f64> {
    check_energy("capacity_derivative", e_i)?;
    if e_i == 0.0 {
        return Err(Error::Domain {
            operation: "capacity_derivative",
            name: "e_i",
            value: e_i,
        });
    }
    Ok(capacity_derivative_unchecked(e_i))
}

pub(crate) fn capacity_derivative_unchecked(e_i: f64) -> f64 {
    if e_i > 700.0 {
        return 0.0;
    }
    let (d, eps) = split(e_i);
    log_odds_bits(d, eps) * (-e_i).exp() / (4.0 * PI * e_i).sqrt()
}

/// d^2C/de^2 at `e_i > 0`, from the closed form
/// `exp(-e) e^(-3/2) / (sqrt(4 pi) ln 2) * phi(e)`.
pub fn capacity_second_derivative(e_i: f64) -> Result<f64> {
    check_energy("capacity_second_derivative", e_i)?;
    if e_i == 0.0 {
        return Err(Error::Domain {
            operation: "capacity_second_derivative",
            name: "e_i",
            value: e_i,
        });
    }
    if e_i > 700.0 {
        return Ok(0.0);
    }
    let (d, eps) = split(e_i);
    let one_minus = 0.5 * (1.0 + d);
    let log_odds = log_odds_bits(d, eps) * LN_2;
    let sqrt_4pi = (4.0 * PI).sqrt();
    let phi = -log_odds * (e_i + 0.5) + (1.0 / eps + 1.0 / one_minus) * (-e_i).exp() * e_i.sqrt() / sqrt_4pi;
    Ok((-e_i).exp() * e_i.powf(-1.5) / (sqrt_4pi * LN_2) * phi)
}
