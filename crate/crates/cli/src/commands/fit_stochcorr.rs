use std::path::Path;

use circdiff::stochcorr::{
    bootstrap_rho_bands, fit_stochcorr, BootstrapBands, CorrProcessSpec, FitDiagnostics, GbmLeg,
    Hyper, StochCorrOptions, RHO_EPS,
};
use serde::{Deserialize, Serialize};

use crate::config::{field_error, level, load, positive};
use crate::error::{CliError, Result};
use crate::ingest::{read_price_pair, read_price_series, PriceSeries};
use crate::output::{csv_error, csv_writer, write_json, FIT_STOCHCORR_SCHEMA};
use crate::{GlobalArgs, ProcessKind};

/// Correlations this close to ±1 trigger a clamp warning.
const CLAMP_WARNING: f64 = 100.0 * RHO_EPS;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitStochcorrConfig {
    pub process: ProcessKind,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    /// Years per observation.
    pub dt: f64,
    pub bootstrap: usize,
    pub level: f64,
    pub seed: u64,
    pub window: usize,
    pub max_rounds: usize,
    pub grid_levels: usize,
}

impl Default for FitStochcorrConfig {
    fn default() -> Self {
        let o = StochCorrOptions::default();
        Self {
            process: ProcessKind::CircularBrownian,
            lambda1: None,
            lambda2: None,
            dt: 1.0 / 252.0,
            bootstrap: 0,
            level: 0.95,
            seed: 0,
            window: o.window,
            max_rounds: o.max_rounds,
            grid_levels: o.grid_levels,
        }
    }
}

pub struct Inputs<'a> {
    pub first: &'a Path,
    pub second: Option<&'a Path>,
}

pub struct Overrides {
    pub process: Option<ProcessKind>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub level: Option<f64>,
}

#[derive(Debug, Serialize)]
struct CorrOut {
    kind: &'static str,
    sigma: f64,
    lambda: Option<f64>,
    mu: Option<f64>,
    kappa: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RhoPoint {
    time: String,
    rho_hat: f64,
    lower: Option<f64>,
    upper: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BootstrapOut {
    samples: usize,
    failures: usize,
    level: f64,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct FitOut {
    schema: &'static str,
    inputs: Vec<String>,
    process: &'static str,
    dt: f64,
    n_obs: usize,
    hyper: Hyper,
    leg1: GbmLeg<f64>,
    leg2: GbmLeg<f64>,
    corr: CorrOut,
    penalized_loglik: f64,
    diagnostics: FitDiagnostics,
    bootstrap: Option<BootstrapOut>,
    warnings: Vec<String>,
    rho: Vec<RhoPoint>,
}

fn corr_out(spec: &CorrProcessSpec<f64>) -> CorrOut {
    match spec {
        CorrProcessSpec::CircularBrownian(p) => CorrOut {
            kind: "circular-brownian",
            sigma: p.sigma(),
            lambda: None,
            mu: None,
            kappa: None,
        },
        CorrProcessSpec::VonMises(p) => CorrOut {
            kind: "von-mises",
            sigma: p.sigma(),
            lambda: Some(p.lambda()),
            mu: Some(p.mu().value()),
            kappa: Some(p.kappa()),
        },
    }
}

pub fn run(
    g: &GlobalArgs,
    inputs: Inputs<'_>,
    over: Overrides,
    output: Option<&Path>,
    bands_csv: Option<&Path>,
) -> Result<()> {
    let cfg: FitStochcorrConfig = load(g.config.as_deref())?;
    let kind = over.process.unwrap_or(cfg.process);
    let defaults = match kind {
        ProcessKind::CircularBrownian => Hyper::default_cbm(),
        ProcessKind::VonMises => Hyper::default_vmp(),
    };
    let lambda1 = over.lambda1.or(cfg.lambda1).unwrap_or(defaults.lambda1);
    let lambda2 = over.lambda2.or(cfg.lambda2).unwrap_or(defaults.lambda2);
    let hyper = Hyper::new(lambda1, lambda2).map_err(|e| field_error("lambda1/lambda2", e))?;
    let dt = positive("dt", g.dt.unwrap_or(cfg.dt))?;
    let lvl = level("level", over.level.unwrap_or(cfg.level))?;
    let opts = StochCorrOptions {
        window: cfg.window,
        max_rounds: cfg.max_rounds,
        grid_levels: cfg.grid_levels,
        ..StochCorrOptions::default()
    };

    let data: PriceSeries = match inputs.second {
        None => read_price_series(inputs.first)?,
        Some(second) => read_price_pair(inputs.first, second)?,
    };
    if data.prices1.len() < opts.window + 2 {
        return Err(CliError::Data(format!(
            "need at least {} aligned prices, found {}",
            opts.window + 2,
            data.prices1.len()
        )));
    }
    let fit = fit_stochcorr(
        &data.prices1,
        &data.prices2,
        dt,
        kind.corr_kind(),
        hyper,
        &opts,
    )?;

    let samples = g.bootstrap.unwrap_or(cfg.bootstrap);
    let seed = g.seed.unwrap_or(cfg.seed);
    let bands: Option<BootstrapBands<f64>> = match samples {
        0 => None,
        1 => return Err(field_error("bootstrap", "need at least 2 samples")),
        n => Some(bootstrap_rho_bands(&fit, dt, n, lvl, seed, &opts)?),
    };

    let mut warnings = Vec::new();
    let pinned = fit
        .rho_path
        .rhos()
        .iter()
        .filter(|r| r.abs() > 1.0 - CLAMP_WARNING)
        .count();
    if pinned > 0 {
        warnings.push(format!(
            "{pinned} correlation estimates are pinned at the clamp |rho| = 1 - {RHO_EPS:e}"
        ));
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let rho: Vec<RhoPoint> = fit
        .rho_path
        .rhos()
        .iter()
        .enumerate()
        .map(|(i, &r)| RhoPoint {
            time: data.stamps[i].to_string(),
            rho_hat: r,
            lower: bands.as_ref().map(|b| b.lower[i]),
            upper: bands.as_ref().map(|b| b.upper[i]),
        })
        .collect();

    if let Some(path) = bands_csv {
        let mut w = csv_writer(Some(path))?;
        for p in &rho {
            w.serialize(p).map_err(csv_error)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }

    let out = FitOut {
        schema: FIT_STOCHCORR_SCHEMA,
        inputs: std::iter::once(inputs.first)
            .chain(inputs.second)
            .map(|p| p.display().to_string())
            .collect(),
        process: kind.name(),
        dt,
        n_obs: data.prices1.len(),
        hyper: fit.hyper,
        leg1: fit.leg1,
        leg2: fit.leg2,
        corr: corr_out(&fit.corr),
        penalized_loglik: fit.penalized_loglik,
        diagnostics: fit.diagnostics.clone(),
        bootstrap: bands.as_ref().map(|b| BootstrapOut {
            samples: b.n_samples,
            failures: b.failures,
            level: lvl,
            seed,
        }),
        warnings,
        rho,
    };
    write_json(output, &out)
}
