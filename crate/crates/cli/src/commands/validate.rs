use std::f64::consts::PI;
use std::path::Path;

use circdiff::circular::wrap;
use circdiff::diffusion::VonMisesParams;
use circdiff::pde::validate_tpd;
use serde::{Deserialize, Serialize};

use crate::config::{field_error, load, positive};
use crate::error::{CliError, Result};
use crate::output::{csv_error, csv_writer};
use crate::{GlobalArgs, Units};

/// Grids with fewer points than this get a resolution warning.
const COARSE_GRID: usize = 256;

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSet {
    pub sigma: f64,
    /// Give exactly one of `kappa` and `lambda`.
    pub kappa: Option<f64>,
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    pub theta0: f64,
    pub k: usize,
    pub m: usize,
    pub times: Vec<f64>,
    /// Drift centers, in `--units`.
    pub mus: Vec<f64>,
    pub params: Vec<ParamSet>,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        let p = |kappa, sigma| ParamSet {
            sigma,
            kappa: Some(kappa),
            lambda: None,
        };
        Self {
            theta0: 0.0,
            k: 3000,
            m: 20_000,
            times: vec![1e-4, 1e-3, 1e-2, 1e-1],
            mus: vec![
                PI / 4.0,
                -PI / 4.0,
                PI / 3.0,
                -PI / 3.0,
                PI / 2.0,
                -PI / 2.0,
            ],
            params: vec![p(0.5, 2.0), p(1.0, 1.0), p(2.0, 2.0), p(4.0, 2.0)],
        }
    }
}

#[derive(Debug, Serialize)]
struct Row {
    kappa: f64,
    lambda: f64,
    sigma: f64,
    mu: f64,
    t: f64,
    hellinger: f64,
}

fn build_params(cfg: &ValidateConfig, units: Units) -> Result<Vec<VonMisesParams<f64>>> {
    if cfg.mus.is_empty() || cfg.params.is_empty() {
        return Err(field_error(
            "mus/params",
            "need at least one drift center and one parameter set",
        ));
    }
    let mut out = Vec::new();
    for (i, p) in cfg.params.iter().enumerate() {
        let sigma = positive(&format!("params[{i}].sigma"), p.sigma)?;
        for &mu in &cfg.mus {
            let mu = wrap(units.to_radians(mu)).map_err(|e| field_error("mus", e))?;
            let params = match (p.kappa, p.lambda) {
                (Some(kappa), None) => VonMisesParams::from_kappa(mu, kappa, sigma),
                (None, Some(lambda)) => VonMisesParams::new(mu, lambda, sigma),
                _ => {
                    return Err(field_error(
                        &format!("params[{i}]"),
                        "give exactly one of kappa and lambda",
                    ))
                }
            }
            .map_err(|e| field_error(&format!("params[{i}]"), e))?;
            out.push(params);
        }
    }
    Ok(out)
}

pub fn run(g: &GlobalArgs, output: Option<&Path>) -> Result<()> {
    let cfg: ValidateConfig = load(g.config.as_deref())?;
    let units = g.units.unwrap_or(Units::Radians);
    if cfg.k < 3 {
        return Err(field_error(
            "k",
            format!("must be at least 3, got {}", cfg.k),
        ));
    }
    if cfg.k < COARSE_GRID {
        eprintln!(
            "warning: coarse grid (k = {}); Hellinger values are resolution-limited",
            cfg.k
        );
    }
    let params = build_params(&cfg, units)?;
    let theta0 = wrap(units.to_radians(cfg.theta0)).map_err(|e| field_error("theta0", e))?;
    let cells = validate_tpd(&params, theta0, &cfg.times, cfg.k, cfg.m)?;
    let mut w = csv_writer(output)?;
    let (mut worst, mut rows, mut failed) = (0.0f64, 0usize, 0usize);
    for cell in cells {
        match cell.result {
            Ok((table, diag)) => {
                if diag.clipping_exceeded() {
                    eprintln!(
                        "warning: kappa={} mu={}: clipped negative mass {:.2e}",
                        cell.params.kappa(),
                        cell.params.mu().value(),
                        diag.max_clipped_mass
                    );
                }
                for r in table {
                    worst = worst.max(r.hellinger);
                    rows += 1;
                    w.serialize(Row {
                        kappa: r.kappa,
                        lambda: r.lambda,
                        sigma: r.sigma,
                        mu: units.from_radians(r.mu),
                        t: r.t,
                        hellinger: r.hellinger,
                    })
                    .map_err(csv_error)?;
                }
            }
            Err(e) => {
                failed += 1;
                eprintln!(
                    "cell kappa={} mu={} failed: {e}",
                    cell.params.kappa(),
                    cell.params.mu().value()
                );
            }
        }
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    eprintln!("max hellinger {worst:.6} over {rows} rows");
    if failed > 0 {
        return Err(CliError::Numerical(format!(
            "{failed} parameter sets failed"
        )));
    }
    Ok(())
}
