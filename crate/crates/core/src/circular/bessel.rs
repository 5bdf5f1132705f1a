//! Modified Bessel functions of the first kind, orders 0 and 1, on a log scale.
//!
//! Below [`SERIES_CUTOFF`] the ascending power series is summed directly (all
//! terms positive, no cancellation). Above it the Hankel asymptotic expansion
//! is summed until its terms stop shrinking; at the cutoff the smallest term is
//! about `exp(-2κ) ≈ 1e-26`, far below double-precision round-off.

use crate::error::{invalid, Result};
use crate::scalar::{c, Scalar};

const SERIES_CUTOFF: f64 = 30.0;
const MAX_TERMS: usize = 200;

/// `log I₀(κ)` for `κ ≥ 0`.
pub fn log_bessel_i0<T: Scalar>(kappa: T) -> Result<T> {
    check_kappa(kappa)?;
    Ok(log_i(0, kappa))
}

/// `log I₁(κ)` for `κ ≥ 0` (`-inf` at zero).
pub fn log_bessel_i1<T: Scalar>(kappa: T) -> Result<T> {
    check_kappa(kappa)?;
    Ok(log_i(1, kappa))
}

/// `I₁(κ)/I₀(κ)`, the mean resultant length of a von Mises law.
pub fn bessel_ratio<T: Scalar>(kappa: T) -> Result<T> {
    check_kappa(kappa)?;
    if kappa == T::zero() {
        return Ok(T::zero());
    }
    if kappa < c(SERIES_CUTOFF) {
        Ok(power_series(1, kappa) / power_series(0, kappa))
    } else {
        Ok(asymptotic_series(1, kappa) / asymptotic_series(0, kappa))
    }
}

fn check_kappa<T: Scalar>(kappa: T) -> Result<()> {
    if kappa.is_nan() || kappa < T::zero() || kappa.is_infinite() {
        return invalid(format!(
            "Bessel argument must be finite and >= 0, got {kappa}"
        ));
    }
    Ok(())
}

fn log_i<T: Scalar>(order: u32, kappa: T) -> T {
    if kappa < c(SERIES_CUTOFF) {
        power_series(order, kappa).ln()
    } else {
        let two_pi = T::PI() + T::PI();
        kappa - c::<T>(0.5) * (two_pi * kappa).ln() + asymptotic_series(order, kappa).ln()
    }
}

/// `Σ (κ/2)^(2m+ν) / (m! (m+ν)!)`.
fn power_series<T: Scalar>(order: u32, kappa: T) -> T {
    let half = kappa * c(0.5);
    let quarter_sq = half * half;
    let mut term = if order == 0 { T::one() } else { half };
    let mut sum = term;
    for m in 1..MAX_TERMS {
        let m_t = T::from_count(m);
        term = term * quarter_sq / (m_t * (m_t + T::from_count(order as usize)));
        sum = sum + term;
        if term <= sum * T::epsilon() * c(0.01) {
            break;
        }
    }
    sum
}

/// `Σ (-1)^k a_k(ν) / κ^k`, the bracket of `I_ν(κ) ~ e^κ/√(2πκ) · [...]`.
fn asymptotic_series<T: Scalar>(order: u32, kappa: T) -> T {
    let four_nu_sq = c::<T>(4.0 * (order * order) as f64);
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..MAX_TERMS {
        let odd = c::<T>((2 * k - 1) as f64);
        let next = -term * (four_nu_sq - odd * odd) / (c::<T>(8.0 * k as f64) * kappa);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum = sum + term;
        if term.abs() <= sum.abs() * T::epsilon() * c(0.01) {
            break;
        }
    }
    sum
}
