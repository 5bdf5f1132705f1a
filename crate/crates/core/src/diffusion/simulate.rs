use crate::circular::Angle;
use crate::diffusion::{AngularPath, CbmParams, VonMisesParams};
use crate::error::{invalid, Result};
use crate::rng::{standard_normal, stream};
use crate::scalar::{c, Scalar};

/// Wrapped Euler–Maruyama path of circular Brownian motion with `n` points
/// spaced `dt` apart, starting at `theta0` at time zero.
pub fn simulate_cbm<T: Scalar>(
    params: &CbmParams<T>,
    theta0: Angle<T>,
    n: usize,
    dt: T,
    seed: u64,
) -> Result<AngularPath<T>> {
    euler_maruyama(theta0, n, dt, seed, params.sigma(), |_| T::zero())
}

/// Wrapped Euler–Maruyama path of the von Mises process.
pub fn simulate_vmp<T: Scalar>(
    params: &VonMisesParams<T>,
    theta0: Angle<T>,
    n: usize,
    dt: T,
    seed: u64,
) -> Result<AngularPath<T>> {
    euler_maruyama(theta0, n, dt, seed, params.sigma(), |th| params.drift(th))
}

fn euler_maruyama<T: Scalar>(
    theta0: Angle<T>,
    n: usize,
    dt: T,
    seed: u64,
    sigma: T,
    drift: impl Fn(T) -> T,
) -> Result<AngularPath<T>> {
    if n < 2 {
        return invalid(format!("simulation needs n >= 2 points, got {n}"));
    }
    if !(dt > T::zero()) || !dt.is_finite() {
        return invalid(format!("time step must be finite and > 0, got {dt}"));
    }
    let mut rng = stream(seed);
    let noise_scale = sigma * dt.sqrt();
    let mut angles = Vec::with_capacity(n);
    let mut theta = theta0;
    angles.push(theta);
    for _ in 1..n {
        let z: T = standard_normal(&mut rng);
        let th = theta.value();
        theta = Angle::wrapped(th + drift(th) * dt + noise_scale * z);
        angles.push(theta);
    }
    AngularPath::uniform(c(0.0), dt, angles)
}
