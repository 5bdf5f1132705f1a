//! Estimation for discretely observed circular diffusions: quadratic
//! variation for `σ`, approximate maximum likelihood for the von Mises drift,
//! and a replication harness for simulation studies.

mod fit;
mod likelihood;
mod study;

pub use fit::{fit_cbm, fit_vmp, CircularFit, VmpFitOptions, LAMBDA_MIN};
pub use likelihood::{cbm_loglik, qv_sigma_hat, vmp_loglik};
pub use study::{
    replicate_study, replicate_with, simulate, ErrorSummary, Process, ReplicationReport,
    StudyConfig,
};
