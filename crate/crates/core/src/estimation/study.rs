use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circular::{bias_and_concentration, Angle, BiasConcentration};
use crate::diffusion::{simulate_cbm, simulate_vmp, AngularPath, CbmParams, VonMisesParams};
use crate::error::{invalid, Error, Result};
use crate::estimation::fit::{fit_cbm, fit_vmp, CircularFit, VmpFitOptions};
use crate::rng::derive_seed;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Process {
    CircularBrownian,
    VonMises,
}

/// One cell of a simulation study: simulate `replications` paths, fit each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub process: Process,
    /// Drift center; ignored for circular Brownian motion.
    #[serde(default)]
    pub mu: f64,
    /// Drift rate; required for the von Mises process.
    #[serde(default)]
    pub lambda: Option<f64>,
    pub sigma: f64,
    pub n: usize,
    pub dt: f64,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Start of every path; defaults to `mu` (von Mises) or 0.
    #[serde(default)]
    pub theta0: Option<f64>,
    /// Euler steps per observation interval.
    #[serde(default = "one")]
    pub substeps: usize,
    #[serde(default)]
    pub fit: VmpFitOptions,
}

fn one() -> usize {
    1
}

/// Mean and sample SD of `truth - estimate` for a real parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    /// `E[θ - θ̂]`.
    pub mean_error: f64,
    /// Sample standard deviation of the estimates.
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub config: StudyConfig,
    pub successes: usize,
    pub failures: usize,
    pub sigma: ErrorSummary,
    pub lambda: Option<ErrorSummary>,
    pub mu: Option<BiasConcentration<f64>>,
}

/// Runs the study in parallel. Replication `i` uses seed `derive_seed(seed, i)`,
/// and results are aggregated in replication order, so the report depends
/// only on the configuration. Failed fits are counted; at least two must
/// succeed.
pub fn replicate_study(config: &StudyConfig) -> Result<ReplicationReport> {
    replicate_with::<f64>(config).map(|(report, _)| report)
}

/// As [`replicate_study`], also returning every per-replication outcome.
pub fn replicate_with<T: Scalar>(
    config: &StudyConfig,
) -> Result<(ReplicationReport, Vec<Result<CircularFit<T>>>)> {
    validate(config)?;
    let fits: Vec<Result<CircularFit<T>>> = (0..config.replications)
        .into_par_iter()
        .map(|i| {
            let path = simulate::<T>(config, derive_seed(config.seed, i))?;
            match config.process {
                Process::CircularBrownian => fit_cbm(&path),
                Process::VonMises => fit_vmp(&path, &config.fit),
            }
        })
        .collect();
    let ok: Vec<&CircularFit<T>> = fits.iter().filter_map(|f| f.as_ref().ok()).collect();
    if ok.len() < 2 {
        return Err(Error::FitFailure {
            reason: format!(
                "only {} of {} replications could be fitted",
                ok.len(),
                config.replications
            ),
            evaluations: 0,
            best_params: vec![],
            best_value: f64::NAN,
        });
    }
    let sigmas: Vec<f64> = ok.iter().map(|f| f.sigma_hat.to_f64_lossy()).collect();
    let (lambda, mu) = match config.process {
        Process::CircularBrownian => (None, None),
        Process::VonMises => {
            let lambdas: Vec<f64> = ok
                .iter()
                .filter_map(|f| f.lambda_hat)
                .map(|l| l.to_f64_lossy())
                .collect();
            let mus: Vec<Angle<f64>> = ok
                .iter()
                .filter_map(|f| f.mu_hat)
                .map(|m| Angle::new(m.value().to_f64_lossy()))
                .collect::<Result<_>>()?;
            (
                Some(summarize(config.lambda.unwrap_or(f64::NAN), &lambdas)),
                Some(bias_and_concentration(Angle::new(config.mu)?, &mus)?),
            )
        }
    };
    let report = ReplicationReport {
        config: config.clone(),
        successes: ok.len(),
        failures: fits.len() - ok.len(),
        sigma: summarize(config.sigma, &sigmas),
        lambda,
        mu,
    };
    Ok((report, fits))
}

/// Simulated observation path for one replication: Euler–Maruyama at
/// `dt / substeps`, kept at every `substeps`-th point.
pub fn simulate<T: Scalar>(config: &StudyConfig, seed: u64) -> Result<AngularPath<T>> {
    let dt = T::lit(config.dt);
    let fine = dt / T::from_count(config.substeps);
    let steps = (config.n - 1) * config.substeps + 1;
    let full = match config.process {
        Process::CircularBrownian => {
            let p = CbmParams::new(T::lit(config.sigma))?;
            simulate_cbm(
                &p,
                Angle::new(T::lit(config.theta0.unwrap_or(0.0)))?,
                steps,
                fine,
                seed,
            )?
        }
        Process::VonMises => {
            let lambda = config
                .lambda
                .ok_or_else(|| Error::InvalidArgument("von Mises study needs lambda".into()))?;
            let p = VonMisesParams::new(
                Angle::new(T::lit(config.mu))?,
                T::lit(lambda),
                T::lit(config.sigma),
            )?;
            let start = Angle::new(T::lit(config.theta0.unwrap_or(config.mu)))?;
            simulate_vmp(&p, start, steps, fine, seed)?
        }
    };
    if config.substeps == 1 {
        return Ok(full);
    }
    let angles = full
        .angles()
        .iter()
        .step_by(config.substeps)
        .copied()
        .collect();
    AngularPath::uniform(T::zero(), dt, angles)
}

fn validate(config: &StudyConfig) -> Result<()> {
    if config.replications < 2 {
        return invalid("a study needs at least two replications");
    }
    if !(config.sigma > 0.0) || !config.sigma.is_finite() {
        return invalid(format!(
            "sigma must be finite and > 0, got {}",
            config.sigma
        ));
    }
    if config.n < 3 {
        return invalid("paths need at least three observations");
    }
    if config.substeps == 0 {
        return invalid("substeps must be at least 1");
    }
    if !(config.dt > 0.0) || !config.dt.is_finite() {
        return invalid(format!("dt must be finite and > 0, got {}", config.dt));
    }
    if config.process == Process::VonMises
        && !config.lambda.is_some_and(|l| l > 0.0 && l.is_finite())
    {
        return invalid("von Mises study needs a finite lambda > 0");
    }
    Ok(())
}

fn summarize(truth: f64, estimates: &[f64]) -> ErrorSummary {
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
    ErrorSummary {
        mean_error: truth - mean,
        sd: var.sqrt(),
    }
}
