use std::path::Path;

use circdiff::circular::{angular_diff, wrap, Angle};
use circdiff::diffusion::{simulate_cbm, simulate_vmp, AngularPath, CbmParams, VonMisesParams};
use circdiff::estimation::{fit_cbm, fit_vmp, CircularFit, VmpFitOptions};
use circdiff::rng::derive_seed;
use circdiff::stochcorr::MAX_FAILURE_FRACTION;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{field_error, level, load, positive};
use crate::error::{CliError, Result};
use crate::ingest::read_angle_series;
use crate::output::{quantile, write_json, FIT_CIRCULAR_SCHEMA};
use crate::{GlobalArgs, ProcessKind, Units};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitCircularConfig {
    pub process: Option<ProcessKind>,
    /// Uniform observation spacing; timestamps are used when unset.
    pub dt: Option<f64>,
    pub bootstrap: usize,
    pub level: f64,
    pub seed: u64,
    pub lambda_max: f64,
}

impl Default for FitCircularConfig {
    fn default() -> Self {
        Self {
            process: None,
            dt: None,
            bootstrap: 0,
            level: 0.95,
            seed: 0,
            lambda_max: VmpFitOptions::default().lambda_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapSummary {
    pub samples: usize,
    pub failures: usize,
    pub level: f64,
    pub seed: u64,
    pub sigma: Interval,
    pub lambda: Option<Interval>,
    /// Circular interval from `lower` counter-clockwise to `upper`.
    pub mu: Option<Interval>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitCircularOutput {
    pub schema: &'static str,
    pub input: String,
    pub process: &'static str,
    pub units: Units,
    pub n_obs: usize,
    pub duration: f64,
    pub sigma_hat: f64,
    pub lambda_hat: Option<f64>,
    pub mu_hat: Option<f64>,
    pub loglik: f64,
    pub evaluations: usize,
    pub bootstrap: Option<BootstrapSummary>,
}

fn fit(
    kind: ProcessKind,
    path: &AngularPath<f64>,
    opts: &VmpFitOptions,
) -> circdiff::Result<CircularFit<f64>> {
    match kind {
        ProcessKind::CircularBrownian => fit_cbm(path),
        ProcessKind::VonMises => fit_vmp(path, opts),
    }
}

/// Simulates from the fitted model on a uniform grid spanning the data and
/// refits; sample `i` uses seed `derive_seed(seed, i)`.
fn bootstrap(
    kind: ProcessKind,
    data: &AngularPath<f64>,
    point: &CircularFit<f64>,
    opts: &VmpFitOptions,
    samples: usize,
    lvl: f64,
    seed: u64,
) -> Result<BootstrapSummary> {
    let n = data.len();
    let dt = data.duration() / (n - 1) as f64;
    let start = data.angles()[0];
    let refits: Vec<circdiff::Result<CircularFit<f64>>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, i);
            let path = match kind {
                ProcessKind::CircularBrownian => {
                    simulate_cbm(&CbmParams::new(point.sigma_hat)?, start, n, dt, s)?
                }
                ProcessKind::VonMises => {
                    let p = VonMisesParams::new(
                        point.mu_hat.unwrap_or(Angle::zero()),
                        point.lambda_hat.unwrap_or(1.0),
                        point.sigma_hat,
                    )?;
                    simulate_vmp(&p, start, n, dt, s)?
                }
            };
            fit(kind, &path, opts)
        })
        .collect();
    let ok: Vec<&CircularFit<f64>> = refits.iter().filter_map(|r| r.as_ref().ok()).collect();
    let failures = samples - ok.len();
    if failures as f64 > MAX_FAILURE_FRACTION * samples as f64 || ok.len() < 2 {
        return Err(CliError::Numerical(format!(
            "bootstrap: {failures} of {samples} refits failed"
        )));
    }
    let tail = (1.0 - lvl) / 2.0;
    let percentile = |mut xs: Vec<f64>| {
        xs.sort_by(f64::total_cmp);
        Interval {
            lower: quantile(&xs, tail),
            upper: quantile(&xs, 1.0 - tail),
        }
    };
    let sigma = percentile(ok.iter().map(|f| f.sigma_hat).collect());
    let lambda = point
        .lambda_hat
        .map(|_| percentile(ok.iter().filter_map(|f| f.lambda_hat).collect()));
    let mu = point.mu_hat.map(|m| {
        let mut pivots: Vec<f64> = ok
            .iter()
            .filter_map(|f| f.mu_hat)
            .map(|b| 1.0 - angular_diff(b, m).cos())
            .collect();
        pivots.sort_by(f64::total_cmp);
        let half = (1.0 - quantile(&pivots, lvl)).clamp(-1.0, 1.0).acos();
        Interval {
            lower: wrap(m.value() - half).map_or(f64::NAN, |a| a.value()),
            upper: wrap(m.value() + half).map_or(f64::NAN, |a| a.value()),
        }
    });
    Ok(BootstrapSummary {
        samples,
        failures,
        level: lvl,
        seed,
        sigma,
        lambda,
        mu,
    })
}

pub fn run(
    g: &GlobalArgs,
    input: &Path,
    process: Option<ProcessKind>,
    lvl: Option<f64>,
    output: Option<&Path>,
) -> Result<()> {
    let cfg: FitCircularConfig = load(g.config.as_deref())?;
    let kind = process
        .or(cfg.process)
        .ok_or_else(|| field_error("process", "set --process or `process` in the config"))?;
    let lvl = level("level", lvl.unwrap_or(cfg.level))?;
    let dt = g.dt.or(cfg.dt).map(|d| positive("dt", d)).transpose()?;
    let opts = VmpFitOptions {
        lambda_max: positive("lambda_max", cfg.lambda_max)?,
        ..VmpFitOptions::default()
    };
    let series = read_angle_series(input, g.units)?;
    let units = g.units.unwrap_or(series.units);
    let path = series.path(dt)?;
    let point = fit(kind, &path, &opts)?;
    let samples = g.bootstrap.unwrap_or(cfg.bootstrap);
    let seed = g.seed.unwrap_or(cfg.seed);
    let boot = match samples {
        0 => None,
        1 => return Err(field_error("bootstrap", "need at least 2 samples")),
        n => Some(bootstrap(kind, &path, &point, &opts, n, lvl, seed)?),
    };
    let to_units = |x: f64| units.from_radians(x);
    let out = FitCircularOutput {
        schema: FIT_CIRCULAR_SCHEMA,
        input: input.display().to_string(),
        process: kind.name(),
        units,
        n_obs: point.n_obs,
        duration: path.duration(),
        sigma_hat: point.sigma_hat,
        lambda_hat: point.lambda_hat,
        mu_hat: point.mu_hat.map(|m| to_units(m.value())),
        loglik: point.loglik,
        evaluations: point.evaluations,
        bootstrap: boot.map(|b| BootstrapSummary {
            mu: b.mu.map(|i| Interval {
                lower: to_units(i.lower),
                upper: to_units(i.upper),
            }),
            ..b
        }),
    };
    write_json(output, &out)
}
