use serde::{Deserialize, Serialize};

use crate::circular::{circular_mean, Angle};
use crate::diffusion::AngularPath;
use crate::error::{invalid, Error, Result};
use crate::estimation::likelihood::{cbm_loglik, qv_sigma_hat, vmp_loglik};
use crate::scalar::{c, Scalar};
use crate::stochcorr::{dfo_maximize, Bounds, DfoOptions, DfoStatus};

/// Smallest admissible drift rate in the von Mises fit.
pub const LAMBDA_MIN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VmpFitOptions {
    /// Upper end of the drift box; 50 keeps κ ≤ 100 at σ = 1.
    pub lambda_max: f64,
    pub dfo: DfoOptions,
}

impl Default for VmpFitOptions {
    fn default() -> Self {
        Self {
            lambda_max: 50.0,
            dfo: DfoOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircularFit<T> {
    pub sigma_hat: T,
    /// Absent for circular Brownian motion.
    pub lambda_hat: Option<T>,
    pub mu_hat: Option<Angle<T>>,
    pub loglik: T,
    pub n_obs: usize,
    /// Objective evaluations spent by the optimizer (zero for closed forms).
    pub evaluations: usize,
}

/// Circular Brownian motion fit: `σ̂` by quadratic variation, log-likelihood
/// of the wrapped-normal increments at `σ̂`.
pub fn fit_cbm<T: Scalar>(path: &AngularPath<T>) -> Result<CircularFit<T>> {
    let sigma_hat = qv_sigma_hat(path)?;
    if !(sigma_hat > T::zero()) {
        return Err(Error::Data(
            "degenerate path: zero quadratic variation".into(),
        ));
    }
    Ok(CircularFit {
        sigma_hat,
        lambda_hat: None,
        mu_hat: None,
        loglik: cbm_loglik(path, sigma_hat)?,
        n_obs: path.len(),
        evaluations: 0,
    })
}

/// Von Mises fit: `σ̂` by quadratic variation, then `(λ̂, μ̂)` maximizing the
/// approximate log-likelihood at that `σ̂`.
///
/// The optimizer sees `(λ, δ)` with `μ = μ₀ + δ` wrapped and `δ ∈ [-2π, 2π]`,
/// where `μ₀` is the circular mean of the observations; it starts at `(1, 0)`.
pub fn fit_vmp<T: Scalar>(path: &AngularPath<T>, opts: &VmpFitOptions) -> Result<CircularFit<T>> {
    if path.len() < 3 {
        return invalid("von Mises fit needs at least three observations");
    }
    if !(opts.lambda_max > LAMBDA_MIN) {
        return invalid(format!("lambda_max must exceed {LAMBDA_MIN}"));
    }
    let sigma_hat = qv_sigma_hat(path)?;
    if !(sigma_hat > T::zero()) {
        return Err(Error::Data(
            "degenerate path: zero quadratic variation".into(),
        ));
    }
    let mu0 = circular_mean(path.angles())?;
    let two_pi = T::PI() + T::PI();
    let bounds = Bounds::new(
        vec![c(LAMBDA_MIN), -two_pi],
        vec![c(opts.lambda_max), two_pi],
    )?;
    let x0 = [
        T::one().max(c(LAMBDA_MIN)).min(c(opts.lambda_max)),
        T::zero(),
    ];
    let objective = |x: &[T]| {
        vmp_loglik(x[0], mu0 + Angle::wrapped(x[1]), path, sigma_hat).unwrap_or(T::neg_infinity())
    };
    let r = dfo_maximize(objective, &x0, &bounds, &opts.dfo)?;
    if r.status != DfoStatus::Converged || !r.value.is_finite() {
        return Err(Error::FitFailure {
            reason: match r.status {
                DfoStatus::BudgetExhausted => "evaluation budget exhausted".into(),
                DfoStatus::Converged => "log-likelihood is not finite".into(),
            },
            evaluations: r.evaluations,
            best_params: r.x.iter().map(|v| v.to_f64_lossy()).collect(),
            best_value: r.value.to_f64_lossy(),
        });
    }
    Ok(CircularFit {
        sigma_hat,
        lambda_hat: Some(r.x[0]),
        mu_hat: Some(mu0 + Angle::wrapped(r.x[1])),
        loglik: r.value,
        n_obs: path.len(),
        evaluations: r.evaluations,
    })
}
