//! Circular arithmetic, special functions, and density primitives.
//!
//! Angles are stored on the canonical interval `(-π, π]`.

mod angle;
mod bessel;
mod density;
mod stats;

pub use angle::{angular_diff, wrap, Angle};
pub use bessel::{bessel_ratio, log_bessel_i0, log_bessel_i1};
pub use density::{
    hellinger_discrete, log_von_mises_pdf, log_wrapped_normal_pdf, von_mises_pdf,
    wrapped_normal_pdf,
};
pub use stats::{bias_and_concentration, circular_mean, BiasConcentration};

pub(crate) mod density_internal {
    pub(crate) use super::density::log_wrapped_gaussian;
}
