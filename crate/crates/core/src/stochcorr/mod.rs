//! Two geometric Brownian motions whose instantaneous correlation is
//! `ρ_t = cos θ_t` for a circular diffusion `θ`: simulation, penalized
//! likelihood, fitting of the latent correlation path and bootstrap bands.

mod bootstrap;
mod fit;
mod likelihood;
mod model;
mod optim;

pub use bootstrap::{
    bands_from_pivots, bootstrap_pivots, bootstrap_rho_bands, rho_pivot, BootstrapBands,
    MAX_FAILURE_FRACTION,
};
pub use fit::{fit_stochcorr, rolling_correlation, FitDiagnostics, StochCorrFit, StochCorrOptions};
pub use likelihood::{conditional_loglik, joint_loglik, penalized_loglik, penalty, Hyper};
pub use model::{
    log_returns, simulate_prices, simulate_stochcorr, CorrKind, CorrModel, CorrProcessSpec, GbmLeg,
    RhoPath, StochCorrSample, RHO_EPS,
};
pub use optim::{dfo_maximize, Bounds, DfoOptions, DfoResult, DfoStatus};
