use serde::{Deserialize, Serialize};

use crate::circular::{log_wrapped_normal_pdf, Angle};
use crate::diffusion::VmpKernel;
use crate::error::{invalid, Error, Result};
use crate::scalar::{c, Scalar};
use crate::stochcorr::model::{CorrModel, CorrProcessSpec, GbmLeg};

/// Penalty weights: `λ₁` on roughness, `λ₂` on the von Mises concentration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Hyper {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0 && lambda2 >= 0.0) || !lambda1.is_finite() || !lambda2.is_finite() {
            return invalid("penalty weights must be finite and >= 0");
        }
        Ok(Self { lambda1, lambda2 })
    }

    /// `λ₁ = 4` for circular Brownian motion.
    pub fn default_cbm() -> Self {
        Self {
            lambda1: 4.0,
            lambda2: 0.0,
        }
    }

    /// `λ₁ = 10, λ₂ = 20` for the von Mises process.
    pub fn default_vmp() -> Self {
        Self {
            lambda1: 10.0,
            lambda2: 20.0,
        }
    }
}

/// Log-density of one return pair under the bivariate normal with means
/// `(μᵢ - σᵢ²/2) dt`, variances `σᵢ² dt` and correlation `ρ`, without the
/// `-log 2π` constant.
#[inline]
pub(crate) fn pair_loglik<T: Scalar>(
    leg1: &GbmLeg<T>,
    leg2: &GbmLeg<T>,
    rho: T,
    r1: T,
    r2: T,
    dt: T,
) -> T {
    let root_dt = dt.sqrt();
    let z1 = (r1 - leg1.log_drift(dt)) / (leg1.sigma * root_dt);
    let z2 = (r2 - leg2.log_drift(dt)) / (leg2.sigma * root_dt);
    let one_minus = T::one() - rho * rho;
    let quad = (z1 * z1 - c::<T>(2.0) * rho * z1 * z2 + z2 * z2) / one_minus;
    let log_det = c::<T>(2.0) * (leg1.sigma * leg2.sigma * dt).ln() + one_minus.ln();
    -c::<T>(0.5) * (quad + log_det)
}

/// Log-likelihood of the return pairs given the correlation path; return `i`
/// uses `rhos[i]`. Constant `-log 2π` terms are dropped.
pub fn conditional_loglik<T: Scalar>(
    leg1: &GbmLeg<T>,
    leg2: &GbmLeg<T>,
    rhos: &[T],
    returns1: &[T],
    returns2: &[T],
    dt: T,
) -> Result<T> {
    if returns1.len() != returns2.len() {
        return invalid("return series must have equal length");
    }
    if rhos.len() < returns1.len() {
        return invalid("correlation path shorter than the return series");
    }
    if !(dt > T::zero()) {
        return invalid(format!("dt must be > 0, got {dt}"));
    }
    let mut total = T::zero();
    for (i, ((&r1, &r2), &rho)) in returns1.iter().zip(returns2).zip(rhos).enumerate() {
        if !(rho.abs() < T::one()) {
            return Err(Error::SingularCovariance {
                index: i,
                rho: rho.to_f64_lossy(),
            });
        }
        total = total + pair_loglik(leg1, leg2, rho, r1, r2, dt);
    }
    Ok(total)
}

/// Transition log-density of the correlation angle over one interval.
pub(crate) enum AngleKernel<T> {
    Wrapped { scale: T },
    VonMises(VmpKernel<T>),
}

impl<T: Scalar> AngleKernel<T> {
    pub(crate) fn new(spec: &CorrProcessSpec<T>, dt: T) -> Result<Self> {
        Ok(match spec {
            CorrProcessSpec::CircularBrownian(p) => AngleKernel::Wrapped {
                scale: p.sigma() * dt.sqrt(),
            },
            CorrProcessSpec::VonMises(p) => AngleKernel::VonMises(VmpKernel::new(p, dt)?),
        })
    }

    #[inline]
    pub(crate) fn log_pdf(&self, to: Angle<T>, from: Angle<T>) -> T {
        match self {
            AngleKernel::Wrapped { scale } => {
                log_wrapped_normal_pdf(to, from, *scale).unwrap_or(T::neg_infinity())
            }
            AngleKernel::VonMises(k) => k.log_pdf(to, from),
        }
    }
}

/// `-log √(1 - ρ²)`, the change of variables from `θ = acos ρ` to `ρ`.
#[inline]
pub(crate) fn jacobian<T: Scalar>(rho: T) -> T {
    -c::<T>(0.5) * (T::one() - rho * rho).ln()
}

/// Conditional log-likelihood plus the log transition densities of
/// `θᵢ = acos ρᵢ` under the correlation process and the Jacobian terms
/// `-log √(1 - ρᵢ₊₁²)`.
pub fn joint_loglik<T: Scalar>(
    model: &CorrModel<T>,
    returns1: &[T],
    returns2: &[T],
    dt: T,
) -> Result<T> {
    let rhos = model.rho.rhos();
    if rhos.len() != returns1.len() + 1 {
        return invalid(format!(
            "correlation path must have one more point than returns: {} vs {}",
            rhos.len(),
            returns1.len()
        ));
    }
    let cond = conditional_loglik(&model.leg1, &model.leg2, rhos, returns1, returns2, dt)?;
    let kernel = AngleKernel::new(&model.corr, dt)?;
    let angles = model.rho.angles();
    let transitions: T = angles.windows(2).map(|w| kernel.log_pdf(w[1], w[0])).sum();
    let jac: T = rhos[1..].iter().map(|&r| jacobian(r)).sum();
    Ok(cond + transitions + jac)
}

/// `λ₁ (T/Δt) Σ (Δρ)² + λ₂ κ`, with `λ₂` ignored for circular Brownian motion.
pub fn penalty<T: Scalar>(model: &CorrModel<T>, hyper: &Hyper) -> T {
    let intervals = T::from_count(model.rho.len().saturating_sub(1));
    let rough = c::<T>(hyper.lambda1) * intervals * model.rho.roughness();
    match model.corr {
        CorrProcessSpec::CircularBrownian(_) => rough,
        CorrProcessSpec::VonMises(_) => rough + c::<T>(hyper.lambda2) * model.corr.kappa(),
    }
}

/// The objective maximized by the fit: joint log-likelihood minus penalties.
pub fn penalized_loglik<T: Scalar>(
    model: &CorrModel<T>,
    returns1: &[T],
    returns2: &[T],
    dt: T,
    hyper: &Hyper,
) -> Result<T> {
    Ok(joint_loglik(model, returns1, returns2, dt)? - penalty(model, hyper))
}
