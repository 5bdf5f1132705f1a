use crate::circular::{angular_diff, log_bessel_i0, Angle};
use crate::error::{invalid, Result};
use crate::pde::DensityGrid;
use crate::scalar::{c, log_sum_exp, Scalar};

/// Above this scale the wrapped normal is evaluated through its Fourier
/// (theta-function) series, which then needs only a handful of terms.
const FOURIER_SCALE: f64 = std::f64::consts::PI;

/// Wrapped normal density `Σₖ φ(θ - center + 2πk; 0, scale²)`.
pub fn wrapped_normal_pdf<T: Scalar>(theta: Angle<T>, center: Angle<T>, scale: T) -> Result<T> {
    Ok(log_wrapped_normal_pdf(theta, center, scale)?.exp())
}

pub fn log_wrapped_normal_pdf<T: Scalar>(theta: Angle<T>, center: Angle<T>, scale: T) -> Result<T> {
    if !(scale > T::zero()) || !scale.is_finite() {
        return invalid(format!(
            "wrapped normal scale must be finite and > 0, got {scale}"
        ));
    }
    Ok(log_wrapped_gaussian(angular_diff(theta, center), scale))
}

/// `log Σₖ φ(x + 2πk; 0, s²)` for `x ∈ (-π, π]`, `s > 0`.
pub(crate) fn log_wrapped_gaussian<T: Scalar>(x: T, scale: T) -> T {
    let two_pi = T::PI() + T::PI();
    if scale <= c(FOURIER_SCALE) {
        // |k| ≤ max(3, ⌈8s/2π⌉) leaves an omitted tail below 1e-12
        let reach = (c::<T>(8.0) * scale / two_pi)
            .ceil()
            .to_i64()
            .unwrap_or(3)
            .max(3);
        let inv_two_var = T::one() / (c::<T>(2.0) * scale * scale);
        let mut exponents = [T::zero(); 16];
        let mut len = 0;
        for k in -reach..=reach {
            let y = x + two_pi * c::<T>(k as f64);
            exponents[len] = -y * y * inv_two_var;
            len += 1;
        }
        log_sum_exp(&exponents[..len]) - (scale * two_pi.sqrt()).ln()
    } else {
        // (1/2π)(1 + 2 Σ e^{-n²s²/2} cos(nx))
        let half_var = c::<T>(0.5) * scale * scale;
        let mut sum = T::one();
        let mut n = 1usize;
        loop {
            let nf = T::from_count(n);
            let w = (-nf * nf * half_var).exp();
            if w < T::epsilon() * c(1e-3) {
                break;
            }
            sum = sum + c::<T>(2.0) * w * (nf * x).cos();
            n += 1;
        }
        sum.ln() - two_pi.ln()
    }
}

/// Von Mises density `exp(κ cos(θ-μ)) / (2π I₀(κ))`.
pub fn von_mises_pdf<T: Scalar>(theta: Angle<T>, mu: Angle<T>, kappa: T) -> Result<T> {
    Ok(log_von_mises_pdf(theta, mu, kappa)?.exp())
}

pub fn log_von_mises_pdf<T: Scalar>(theta: Angle<T>, mu: Angle<T>, kappa: T) -> Result<T> {
    let log_norm = log_bessel_i0(kappa)?;
    let two_pi = T::PI() + T::PI();
    Ok(kappa * angular_diff(theta, mu).cos() - two_pi.ln() - log_norm)
}

/// Hellinger distance between two densities on the same grid, computed from
/// cell masses `pᵢΔθ` so the value lies in `[0, 1]` at any resolution.
pub fn hellinger_discrete<T: Scalar>(p: &DensityGrid<T>, q: &DensityGrid<T>) -> Result<T> {
    if !p.same_grid(q) {
        return invalid(format!(
            "Hellinger distance needs identical grids ({} vs {} points)",
            p.len(),
            q.len()
        ));
    }
    let dtheta = p.dtheta();
    let mut sum = T::zero();
    for (&a, &b) in p.values().iter().zip(q.values()) {
        if a < T::zero() || b < T::zero() || !a.is_finite() || !b.is_finite() {
            return invalid("Hellinger distance needs finite nonnegative densities");
        }
        let d = (a * dtheta).sqrt() - (b * dtheta).sqrt();
        sum = sum + d * d;
    }
    Ok((sum * c(0.5)).sqrt().min(T::one()))
}
