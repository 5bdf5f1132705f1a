//! The two circular diffusions: circular Brownian motion `dθ = σ dB` and the
//! von Mises process `dθ = -λ sin(θ - μ) dt + σ dB`.

mod params;
mod path;
mod simulate;
mod tpd;

pub(crate) use params::check_positive;
pub use params::{CbmParams, VonMisesParams};
pub use path::AngularPath;
pub use simulate::{simulate_cbm, simulate_vmp};
pub(crate) use tpd::log_cbm_tpd;
pub use tpd::{
    cbm_tpd, vmp_tpd, vmp_tpd_grid, vmp_tpd_norm_const, vmp_tpd_unnormalized, TpdConstants,
    VmpKernel, DEFAULT_QUADRATURE_POINTS, SHORT_TIME_CUTOFF,
};
