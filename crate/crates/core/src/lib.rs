//! Diffusions on the circle and a latent stochastic-correlation model.
//!
//! * [`circular`]: angle arithmetic, Bessel functions, circular densities.
//! * [`diffusion`]: circular Brownian motion and the von Mises process,
//!   simulation and transition densities.
//! * [`pde`]: Crank–Nicolson solver for the von Mises forward equation.
//! * [`estimation`]: quadratic-variation and likelihood estimation from
//!   discretely observed angle series.
//! * [`stochcorr`]: two geometric Brownian motions with correlation
//!   `ρ_t = cos θ_t` driven by a circular diffusion.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`.

pub mod circular;
pub mod diffusion;
pub mod error;
pub mod estimation;
pub mod pde;
pub mod rng;
pub mod scalar;
pub mod stochcorr;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Angle64 = circular::Angle<f64>;
pub type AngularPath64 = diffusion::AngularPath<f64>;
pub type CbmParams64 = diffusion::CbmParams<f64>;
pub type VonMisesParams64 = diffusion::VonMisesParams<f64>;
pub type DensityGrid64 = pde::DensityGrid<f64>;
