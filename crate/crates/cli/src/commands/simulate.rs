use std::path::Path;

use circdiff::estimation::{
    replicate_study, simulate, ReplicationReport, StudyConfig, VmpFitOptions,
};
use serde::{Deserialize, Serialize};

use crate::config::{field_error, load_required, positive};
use crate::error::{CliError, Result};
use crate::output::{csv_error, csv_writer};
use crate::{GlobalArgs, ProcessKind, Units};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub process: ProcessKind,
    /// Drift center, in `--units`.
    #[serde(default)]
    pub mu: f64,
    pub lambda: Option<f64>,
    pub sigma: f64,
    pub n: usize,
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    /// Start of the path, in `--units` [default: mu for von Mises, 0 otherwise].
    pub theta0: Option<f64>,
    #[serde(default = "one")]
    pub substeps: usize,
    /// When set, simulate and fit this many paths and write a report.
    pub replications: Option<usize>,
    #[serde(default)]
    pub lambda_max: Option<f64>,
}

fn one() -> usize {
    1
}

impl SimulateConfig {
    fn study(&self, g: &GlobalArgs) -> Result<StudyConfig> {
        let units = g.units.unwrap_or(Units::Radians);
        positive("sigma", self.sigma)?;
        let dt = positive("dt", g.dt.unwrap_or(self.dt))?;
        if self.n < 2 {
            return Err(field_error(
                "n",
                format!("must be at least 2, got {}", self.n),
            ));
        }
        if self.substeps == 0 {
            return Err(field_error("substeps", "must be at least 1"));
        }
        let lambda = match (self.process, self.lambda) {
            (ProcessKind::VonMises, None) => {
                return Err(field_error("lambda", "required for the von Mises process"))
            }
            (ProcessKind::VonMises, Some(l)) => Some(positive("lambda", l)?),
            (ProcessKind::CircularBrownian, _) => None,
        };
        let mut fit = VmpFitOptions::default();
        if let Some(m) = self.lambda_max {
            fit.lambda_max = positive("lambda_max", m)?;
        }
        Ok(StudyConfig {
            process: self.process.process(),
            mu: units.to_radians(self.mu),
            lambda,
            sigma: self.sigma,
            n: self.n,
            dt,
            replications: self.replications.unwrap_or(1),
            seed: g.seed.unwrap_or(self.seed),
            theta0: self.theta0.map(|t| units.to_radians(t)),
            substeps: self.substeps,
            fit,
        })
    }
}

/// Column heads follow the usual simulation-table layout.
#[derive(Debug, Serialize)]
struct ReportRow {
    process: &'static str,
    mu: f64,
    lambda: Option<f64>,
    sigma: f64,
    n: usize,
    dt: f64,
    replications: usize,
    failures: usize,
    #[serde(rename = "E[λ−λ̂]")]
    lambda_mean_error: Option<f64>,
    #[serde(rename = "√Var[λ−λ̂]")]
    lambda_sd: Option<f64>,
    #[serde(rename = "E[σ−σ̂]")]
    sigma_mean_error: f64,
    #[serde(rename = "√Var[σ−σ̂]")]
    sigma_sd: f64,
    mu_bias: Option<f64>,
    mu_concentration: Option<f64>,
}

fn report_row(kind: ProcessKind, r: &ReplicationReport, units: Units) -> ReportRow {
    ReportRow {
        process: kind.name(),
        mu: units.from_radians(r.config.mu),
        lambda: r.config.lambda,
        sigma: r.config.sigma,
        n: r.config.n,
        dt: r.config.dt,
        replications: r.config.replications,
        failures: r.failures,
        lambda_mean_error: r.lambda.map(|l| l.mean_error),
        lambda_sd: r.lambda.map(|l| l.sd),
        sigma_mean_error: r.sigma.mean_error,
        sigma_sd: r.sigma.sd,
        mu_bias: r.mu.map(|m| units.from_radians(m.bias)),
        mu_concentration: r.mu.map(|m| m.concentration),
    }
}

pub fn run(g: &GlobalArgs, output: Option<&Path>) -> Result<()> {
    let cfg: SimulateConfig = load_required(g.config.as_deref(), "simulate")?;
    let study = cfg.study(g)?;
    let units = g.units.unwrap_or(Units::Radians);
    let mut w = csv_writer(output)?;
    if cfg.replications.is_some() {
        let report = replicate_study(&study)?;
        w.serialize(report_row(cfg.process, &report, units))
            .map_err(csv_error)?;
    } else {
        let path = simulate::<f64>(&study, study.seed)?;
        w.write_record(["time", units.column()])
            .map_err(csv_error)?;
        for (&time, a) in path.times().iter().zip(path.angles()) {
            w.serialize((time, units.from_radians(a.value())))
                .map_err(csv_error)?;
        }
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))
}
