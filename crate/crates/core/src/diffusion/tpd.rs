//! Transition densities.
//!
//! Circular Brownian motion has the exact wrapped-normal transition law. For
//! the von Mises process we evaluate the approximate analytic density
//!
//! ```text
//! p(θ; θ₀, t) ∝ Σₖ exp(-γ√q (θ + 2πk - θ₀)² / (2(1-q)))
//!               · (2π I₀(κ))^{-(1-√q)/(1+√q)}
//!               · exp(κ (cos(θ-μ) - √q cos(θ₀-μ)) / (1+√q)),
//! γ = κ I₁(κ)/I₀(κ),  q = exp(-γσ²t).
//! ```
//!
//! The Gaussian sum is a wrapped normal with variance `s² = (1-q)/(γ√q)`, so
//! the density is that wrapped normal tilted by `exp(b cos(θ-μ))` with
//! `b = κ/(1+√q)`. All factors are combined in log space.

use crate::circular::density_internal::log_wrapped_gaussian;
use crate::circular::log_wrapped_normal_pdf;
use crate::circular::{angular_diff, bessel_ratio, log_bessel_i0, wrapped_normal_pdf, Angle};
use crate::diffusion::{CbmParams, VonMisesParams};
use crate::error::{invalid, Error, Result};
use crate::pde::DensityGrid;
use crate::scalar::{c, log_sum_exp, Scalar};

pub const DEFAULT_QUADRATURE_POINTS: usize = 2048;

/// Below this value of `γσ²t` the von Mises transition density is replaced by
/// its short-time limit, the wrapped normal with scale `σ√t`.
pub const SHORT_TIME_CUTOFF: f64 = 1e-14;

/// Exact transition density of circular Brownian motion over `elapsed`.
pub fn cbm_tpd<T: Scalar>(
    theta_t: Angle<T>,
    theta_s: Angle<T>,
    elapsed: T,
    params: &CbmParams<T>,
) -> Result<T> {
    check_elapsed(elapsed)?;
    wrapped_normal_pdf(theta_t, theta_s, params.sigma() * elapsed.sqrt())
}

pub(crate) fn log_cbm_tpd<T: Scalar>(
    theta_t: Angle<T>,
    theta_s: Angle<T>,
    elapsed: T,
    sigma: T,
) -> Result<T> {
    check_elapsed(elapsed)?;
    log_wrapped_normal_pdf(theta_t, theta_s, sigma * elapsed.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpdConstants<T> {
    /// `κ I₁(κ)/I₀(κ)`.
    pub gamma: T,
    /// `exp(-γσ²t)`.
    pub q: T,
    /// Reciprocal of the integral of [`vmp_tpd_unnormalized`] over the circle.
    pub norm_const: T,
}

/// Time-dependent constants of the approximate density for fixed parameters.
#[derive(Debug, Clone, Copy)]
struct Shape<T> {
    mu: Angle<T>,
    gamma: T,
    q: T,
    sqrt_q: T,
    /// `κ/(1+√q)`
    tilt: T,
    /// wrapped-normal scale `√((1-q)/(γ√q))`
    scale: T,
    /// `-(1-√q)/(1+√q) · log(2π I₀(κ))`
    log_power: T,
    scaled_time: T,
}

impl<T: Scalar> Shape<T> {
    fn new(params: &VonMisesParams<T>, elapsed: T) -> Result<Self> {
        check_elapsed(elapsed)?;
        let kappa = params.kappa();
        let gamma = kappa * bessel_ratio(kappa)?;
        let sigma = params.sigma();
        let scaled_time = gamma * sigma * sigma * elapsed;
        if !(scaled_time >= T::min_positive_value()) {
            return Err(Error::NearSingularTime {
                scaled_time: scaled_time.to_f64_lossy(),
            });
        }
        // 1 - q via expm1 keeps s² accurate when γσ²t is tiny
        let one_minus_q = -(-scaled_time).exp_m1();
        let q = (-scaled_time).exp();
        let sqrt_q = (-scaled_time * c(0.5)).exp();
        let one_minus_sqrt_q = -(-scaled_time * c(0.5)).exp_m1();
        let two_pi = T::PI() + T::PI();
        Ok(Self {
            mu: params.mu(),
            gamma,
            q,
            sqrt_q,
            tilt: kappa / (T::one() + sqrt_q),
            scale: (one_minus_q / (gamma * sqrt_q)).sqrt(),
            log_power: -(one_minus_sqrt_q / (T::one() + sqrt_q))
                * (two_pi.ln() + log_bessel_i0(kappa)?),
            scaled_time,
        })
    }

    fn log_unnormalized(&self, theta_t: Angle<T>, theta0: Angle<T>) -> T {
        let two_pi = T::PI() + T::PI();
        let gauss = log_wrapped_gaussian(angular_diff(theta_t, theta0), self.scale);
        let tilt = self.tilt
            * (angular_diff(theta_t, self.mu).cos()
                - self.sqrt_q * angular_diff(theta0, self.mu).cos());
        two_pi.ln() + gauss + self.log_power + tilt
    }
}

/// The approximate von Mises transition density without its normalizing
/// constant. The Gaussian sum is scaled by `√(2π)/s` (a factor that does not
/// depend on `θ`), so that as `t → ∞` this tends to the von Mises density
/// itself and the normalizing constant tends to one.
pub fn vmp_tpd_unnormalized<T: Scalar>(
    theta_t: Angle<T>,
    theta0: Angle<T>,
    elapsed: T,
    params: &VonMisesParams<T>,
) -> Result<T> {
    Ok(Shape::new(params, elapsed)?
        .log_unnormalized(theta_t, theta0)
        .exp())
}

/// Constants of the approximate density; the normalizer is found by the
/// trapezoid rule on `grid_points` uniform points of `(-π, π]`.
pub fn vmp_tpd_norm_const<T: Scalar>(
    theta0: Angle<T>,
    elapsed: T,
    params: &VonMisesParams<T>,
    grid_points: usize,
) -> Result<TpdConstants<T>> {
    if grid_points < 256 {
        return invalid(format!(
            "normalization grid needs >= 256 points, got {grid_points}"
        ));
    }
    let shape = Shape::new(params, elapsed)?;
    let log_integral = log_trapezoid_circle(grid_points, |th| shape.log_unnormalized(th, theta0));
    Ok(TpdConstants {
        gamma: shape.gamma,
        q: shape.q,
        norm_const: (-log_integral).exp(),
    })
}

/// The normalized density from `theta0` evaluated on the uniform `k`-point grid.
pub fn vmp_tpd_grid<T: Scalar>(
    theta0: Angle<T>,
    elapsed: T,
    params: &VonMisesParams<T>,
    k: usize,
) -> Result<DensityGrid<T>> {
    let shape = match short_time_shape(params, elapsed)? {
        Some(shape) => shape,
        None => {
            let scale = params.sigma() * elapsed.sqrt();
            return Ok(DensityGrid::from_fn(k, |th| {
                log_wrapped_gaussian(angular_diff(Angle::wrapped(th), theta0), scale).exp()
            }));
        }
    };
    let log_integral = log_trapezoid_circle(DEFAULT_QUADRATURE_POINTS, |th| {
        shape.log_unnormalized(th, theta0)
    });
    Ok(DensityGrid::from_fn(k, |th| {
        (shape.log_unnormalized(Angle::wrapped(th), theta0) - log_integral).exp()
    }))
}

/// Normalized approximate transition density of the von Mises process.
pub fn vmp_tpd<T: Scalar>(
    theta_t: Angle<T>,
    theta0: Angle<T>,
    elapsed: T,
    params: &VonMisesParams<T>,
) -> Result<T> {
    let shape = match short_time_shape(params, elapsed)? {
        Some(shape) => shape,
        None => return wrapped_normal_pdf(theta_t, theta0, params.sigma() * elapsed.sqrt()),
    };
    let log_integral = log_trapezoid_circle(DEFAULT_QUADRATURE_POINTS, |th| {
        shape.log_unnormalized(th, theta0)
    });
    Ok((shape.log_unnormalized(theta_t, theta0) - log_integral).exp())
}

/// `None` when `γσ²t` is below [`SHORT_TIME_CUTOFF`].
fn short_time_shape<T: Scalar>(params: &VonMisesParams<T>, elapsed: T) -> Result<Option<Shape<T>>> {
    match Shape::new(params, elapsed) {
        Ok(s) if s.scaled_time >= c(SHORT_TIME_CUTOFF) => Ok(Some(s)),
        Ok(_) | Err(Error::NearSingularTime { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `log ∫ exp(f)` over the circle by the trapezoid rule on `k` points.
pub(crate) fn log_trapezoid_circle<T: Scalar>(k: usize, log_f: impl Fn(Angle<T>) -> T) -> T {
    let h = (T::PI() + T::PI()) / T::from_count(k);
    let logs: Vec<T> = (1..=k)
        .map(|j| log_f(Angle::wrapped(-T::PI() + h * T::from_count(j))))
        .collect();
    log_sum_exp(&logs) + h.ln()
}

fn check_elapsed<T: Scalar>(elapsed: T) -> Result<()> {
    if !(elapsed > T::zero()) || !elapsed.is_finite() {
        return invalid(format!(
            "elapsed time must be finite and > 0, got {elapsed}"
        ));
    }
    Ok(())
}

/// Von Mises transition density for fixed parameters and time step, normalized
/// without a full quadrature per call.
///
/// The density is `WN(θ-θ₀; s) · e^{b cos(θ-μ)} / J(θ₀-μ)` where
/// `J(φ) = ∫ WN(u-φ; s) e^{b cos u} du = E[e^{b cos(φ + sZ)}]`, `Z ~ N(0,1)`.
/// When it is well conditioned, `J` is summed as the cosine series
/// `e^b Σ cₙ cos(nφ)` with `cₙ` the Fourier coefficients of `e^{b(cos u - 1)}`
/// (computed once by the trapezoid rule) damped by `e^{-n²s²/2}`. For large
/// `b` the series cancels badly away from `φ = 0`, and `J` is instead found by
/// a trapezoid rule on the real line over the Gaussian window. Both routes
/// agree with [`vmp_tpd`] to round-off; the likelihoods use this type.
#[derive(Debug, Clone)]
pub struct VmpKernel<T> {
    repr: KernelRepr<T>,
}

#[derive(Debug, Clone)]
enum KernelRepr<T> {
    ShortTime {
        scale: T,
    },
    Tilted {
        shape: Shape<T>,
        normalizer: Normalizer<T>,
    },
}

#[derive(Debug, Clone)]
enum Normalizer<T> {
    Series(Vec<T>),
    Window {
        half_width: T,
        step: T,
        points: usize,
    },
}

/// Largest ratio of `Σ|cₙ|` to the smallest value of the series for which
/// its cancellation error stays near 1e-12 relative.
const SERIES_CONDITION_LIMIT: f64 = 1e4;

impl<T: Scalar> VmpKernel<T> {
    pub fn new(params: &VonMisesParams<T>, elapsed: T) -> Result<Self> {
        let repr = match short_time_shape(params, elapsed)? {
            None => KernelRepr::ShortTime {
                scale: params.sigma() * elapsed.sqrt(),
            },
            Some(shape) => KernelRepr::Tilted {
                normalizer: Normalizer::new(shape.tilt, shape.scale),
                shape,
            },
        };
        Ok(Self { repr })
    }

    /// `log p(θ_t | θ₀)`.
    pub fn log_pdf(&self, theta_t: Angle<T>, theta0: Angle<T>) -> T {
        match &self.repr {
            KernelRepr::ShortTime { scale } => {
                log_wrapped_gaussian(angular_diff(theta_t, theta0), *scale)
            }
            KernelRepr::Tilted { shape, normalizer } => {
                let gauss = log_wrapped_gaussian(angular_diff(theta_t, theta0), shape.scale);
                let tilt = shape.tilt * angular_diff(theta_t, shape.mu).cos();
                gauss + tilt - normalizer.log_j(angular_diff(theta0, shape.mu), shape)
            }
        }
    }

    pub fn pdf(&self, theta_t: Angle<T>, theta0: Angle<T>) -> T {
        self.log_pdf(theta_t, theta0).exp()
    }
}

impl<T: Scalar> Normalizer<T> {
    fn new(tilt: T, scale: T) -> Self {
        let b = tilt.to_f64_lossy();
        let s = scale.to_f64_lossy();
        let coeffs = convolution_coefficients(tilt, scale);
        let c0 = coeffs[0].to_f64_lossy();
        let rest: f64 = coeffs[1..]
            .iter()
            .map(|cn| 2.0 * cn.to_f64_lossy().abs())
            .sum();
        // two lower bounds on e^{-b} J: the series itself, and Jensen's
        let floor = (c0 - rest).max((-b * (1.0 + (-0.5 * s * s).exp())).exp());
        if c0 + rest <= SERIES_CONDITION_LIMIT * floor {
            return Normalizer::Series(coeffs);
        }
        // integrand exp(-v²/2s² + b cos(φ+v)) is below e^{-40} of its peak
        // beyond |v| = s√(2(40 + 2b)); resolve the narrower of the two scales
        let half_width = s * (2.0 * (40.0 + 2.0 * b)).sqrt();
        let step = s.min(1.0 / b.sqrt()) * 0.5;
        let points = (half_width / step).ceil() as usize;
        Normalizer::Window {
            half_width: c(half_width),
            step: c(half_width / points as f64),
            points,
        }
    }

    /// `log J(φ)`.
    fn log_j(&self, phi: T, shape: &Shape<T>) -> T {
        match self {
            Normalizer::Series(coeffs) => {
                // Clenshaw summation of Σ cₙ cos(nφ)
                let x = phi.cos();
                let two_x = x + x;
                let (mut b1, mut b2) = (T::zero(), T::zero());
                for &cn in coeffs[1..].iter().rev() {
                    let b0 = cn + cn + two_x * b1 - b2;
                    b2 = b1;
                    b1 = b0;
                }
                shape.tilt + (coeffs[0] + x * b1 - b2).ln()
            }
            Normalizer::Window {
                half_width,
                step,
                points,
            } => {
                let inv_two_var = T::one() / (c::<T>(2.0) * shape.scale * shape.scale);
                let b = shape.tilt;
                // streaming log-sum-exp: the peak can sit far below zero
                let (mut peak, mut sum) = (T::neg_infinity(), T::zero());
                for j in 0..=2 * points {
                    let v = -*half_width + *step * T::from_count(j);
                    let e = -v * v * inv_two_var + b * (phi + v).cos();
                    if e > peak {
                        sum = sum * (peak - e).exp() + T::one();
                        peak = e;
                    } else {
                        sum = sum + (e - peak).exp();
                    }
                }
                let two_pi = T::PI() + T::PI();
                peak + (sum * *step).ln() - (shape.scale * two_pi.sqrt()).ln()
            }
        }
    }
}

/// Cosine coefficients `cₙ` of `e^{b(cos u - 1)}` damped by `e^{-n²s²/2}`,
/// truncated once they drop below round-off relative to `c₀`.
fn convolution_coefficients<T: Scalar>(tilt: T, scale: T) -> Vec<T> {
    let b = tilt.to_f64_lossy();
    let s = scale.to_f64_lossy();
    let m = ((18.0 * b.sqrt() + 32.0).max(64.0) as usize).next_power_of_two();
    let samples: Vec<f64> = (0..m)
        .map(|j| {
            let u = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            (b * (u.cos() - 1.0)).exp()
        })
        .collect();
    let mut coeffs = Vec::new();
    let mut c0 = 0.0;
    for n in 0..m / 2 {
        let raw: f64 = samples
            .iter()
            .enumerate()
            .map(|(j, g)| g * (2.0 * std::f64::consts::PI * (n * j % m) as f64 / m as f64).cos())
            .sum::<f64>()
            / m as f64;
        let cn = raw * (-0.5 * (n * n) as f64 * s * s).exp();
        if n == 0 {
            c0 = cn;
        } else if cn.abs() <= c0 * f64::EPSILON * 0.5 {
            break;
        }
        coeffs.push(c(cn));
    }
    coeffs
}
