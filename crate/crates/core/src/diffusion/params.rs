use serde::{Deserialize, Serialize};

use crate::circular::Angle;
use crate::error::{invalid, Result};
use crate::scalar::{c, Scalar};

/// Circular Brownian motion, `dθ = σ dB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbmParams<T> {
    sigma: T,
}

impl<T: Scalar> CbmParams<T> {
    pub fn new(sigma: T) -> Result<Self> {
        check_positive("sigma", sigma)?;
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }
}

/// Von Mises process, `dθ = -λ sin(θ - μ) dt + σ dB`, stationary law
/// von Mises(μ, κ = 2λ/σ²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VonMisesParams<T> {
    mu: Angle<T>,
    lambda: T,
    sigma: T,
}

impl<T: Scalar> VonMisesParams<T> {
    pub fn new(mu: Angle<T>, lambda: T, sigma: T) -> Result<Self> {
        check_positive("lambda", lambda)?;
        check_positive("sigma", sigma)?;
        Ok(Self { mu, lambda, sigma })
    }

    /// Parameters with concentration `kappa` at diffusion coefficient `sigma`.
    pub fn from_kappa(mu: Angle<T>, kappa: T, sigma: T) -> Result<Self> {
        check_positive("kappa", kappa)?;
        Self::new(mu, kappa * sigma * sigma * c(0.5), sigma)
    }

    pub fn mu(&self) -> Angle<T> {
        self.mu
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// `κ = 2λ/σ²`.
    pub fn kappa(&self) -> T {
        c::<T>(2.0) * self.lambda / (self.sigma * self.sigma)
    }

    #[inline]
    pub(crate) fn drift(&self, theta: T) -> T {
        -self.lambda * (theta - self.mu.value()).sin()
    }
}

pub(crate) fn check_positive<T: Scalar>(name: &str, v: T) -> Result<()> {
    if !(v > T::zero()) || !v.is_finite() {
        return invalid(format!("{name} must be finite and > 0, got {v}"));
    }
    Ok(())
}
