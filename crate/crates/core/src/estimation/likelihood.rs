use crate::circular::{angular_diff, Angle};
use crate::diffusion::{log_cbm_tpd, AngularPath, VmpKernel, VonMisesParams};
use crate::error::{invalid, Error, Result};
use crate::scalar::{c, Scalar};

/// Quadratic-variation estimate `σ̂ = √(Σ dᵢ² / T)` with `dᵢ` the signed
/// wrapped increments and `T` the path duration.
pub fn qv_sigma_hat<T: Scalar>(path: &AngularPath<T>) -> Result<T> {
    if path.len() < 2 {
        return invalid("quadratic variation needs at least two observations");
    }
    let duration = path.duration();
    if !(duration > T::zero()) {
        return invalid("quadratic variation needs a path of positive duration");
    }
    let qv: T = path
        .transitions()
        .map(|(_, from, to)| {
            let d = angular_diff(to, from);
            d * d
        })
        .sum();
    Ok((qv / duration).sqrt())
}

/// Log-likelihood of circular Brownian motion: wrapped-normal increments.
pub fn cbm_loglik<T: Scalar>(path: &AngularPath<T>, sigma: T) -> Result<T> {
    if !(sigma > T::zero()) {
        return invalid(format!("sigma must be > 0, got {sigma}"));
    }
    path.transitions()
        .map(|(dt, from, to)| log_cbm_tpd(to, from, dt, sigma))
        .sum()
}

/// Log-likelihood `Σ log p(θᵢ₊₁ | θᵢ, Δtᵢ)` of the von Mises process under the
/// approximate transition density, with `σ` fixed at the plug-in `sigma_hat`.
///
/// One kernel is built per distinct interval length; lengths that agree to a
/// relative 1e-10 share a kernel, so uniformly sampled paths whose time stamps
/// carry rounding noise still pay for a single kernel.
pub fn vmp_loglik<T: Scalar>(
    lambda: T,
    mu: Angle<T>,
    path: &AngularPath<T>,
    sigma_hat: T,
) -> Result<T> {
    let params = VonMisesParams::new(mu, lambda, sigma_hat)?;
    let mut kernels: Vec<(T, VmpKernel<T>)> = Vec::new();
    let mut total = T::zero();
    for (dt, from, to) in path.transitions() {
        let idx = match kernels
            .iter()
            .position(|(key, _)| (*key - dt).abs() <= c::<T>(1e-10) * dt)
        {
            Some(i) => i,
            None => {
                kernels.push((dt, VmpKernel::new(&params, dt)?));
                kernels.len() - 1
            }
        };
        total = total + kernels[idx].1.log_pdf(to, from);
    }
    if total.is_nan() {
        return Err(Error::InvalidArgument("log-likelihood is NaN".into()));
    }
    Ok(total)
}
