//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use circdiff::circular::{
    bessel_ratio, hellinger_discrete, log_von_mises_pdf, wrap, wrapped_normal_pdf, Angle,
};
use circdiff::diffusion::{vmp_tpd, vmp_tpd_grid, CbmParams, VonMisesParams};
use circdiff::estimation::{replicate_study, vmp_loglik, Process, StudyConfig, VmpFitOptions};
use circdiff::pde::{crank_nicolson_vmp, validate_tpd, DensityGrid};
use circdiff::stochcorr::{
    bootstrap_rho_bands, conditional_loglik, fit_stochcorr, log_returns, simulate_stochcorr,
    CorrKind, CorrProcessSpec, GbmLeg, Hyper, StochCorrFit, StochCorrOptions, StochCorrSample,
};
use circdiff::AngularPath64;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn angle(x: f64) -> Angle<f64> {
    Angle::new(x).unwrap()
}

/// `(κ, σ)` pairs of the validation grid; `λ = κσ²/2`.
const KAPPA_SIGMA: [(f64, f64); 4] = [(0.5, 2.0), (1.0, 1.0), (2.0, 2.0), (4.0, 2.0)];

fn tpd_vs_pde() -> Outcome {
    let mus = [
        PI / 4.0,
        -PI / 4.0,
        PI / 3.0,
        -PI / 3.0,
        PI / 2.0,
        -PI / 2.0,
    ];
    let params: Vec<VonMisesParams<f64>> = KAPPA_SIGMA
        .iter()
        .flat_map(|&(kappa, sigma)| {
            mus.iter()
                .map(move |&mu| VonMisesParams::from_kappa(angle(mu), kappa, sigma).unwrap())
        })
        .collect();
    let times = [1e-4, 1e-3, 1e-2, 1e-1];
    let cells =
        validate_tpd(&params, Angle::zero(), &times, 3000, 20_000).map_err(|e| e.to_string())?;
    let mut worst = (0.0f64, String::new());
    for cell in cells {
        let (rows, _) = cell.result.map_err(|e| e.to_string())?;
        for r in rows {
            if r.hellinger > worst.0 {
                worst = (
                    r.hellinger,
                    format!("kappa={} mu={:.4} t={}", r.kappa, r.mu, r.t),
                );
            }
        }
    }
    check(
        worst.0 < 0.02,
        format!(
            "max Hellinger {:.5} at {} (limit 0.02, 96 cells)",
            worst.0, worst.1
        ),
    )
}

fn normalization_and_stationarity() -> Outcome {
    let k = 6000;
    let mut worst_mass = 0.0f64;
    let mut worst_h = 0.0f64;
    for &(kappa, sigma) in &KAPPA_SIGMA {
        let p = VonMisesParams::from_kappa(angle(PI / 3.0), kappa, sigma).unwrap();
        let gamma = kappa * bessel_ratio(kappa).unwrap();
        let t_stat = 50.0 / (gamma * sigma * sigma);
        for t in [1e-3, 1e-2, 0.1, 1.0, t_stat] {
            let g = DensityGrid::from_fn(k, |th| vmp_tpd(angle(th), angle(-1.0), t, &p).unwrap());
            worst_mass = worst_mass.max((g.mass() - 1.0).abs());
        }
        let tpd = vmp_tpd_grid(angle(-1.0), t_stat, &p, 4096).unwrap();
        let vm = DensityGrid::from_fn(4096, |th| {
            log_von_mises_pdf(angle(th), p.mu(), kappa).unwrap().exp()
        });
        worst_h = worst_h.max(hellinger_discrete(&tpd, &vm).unwrap());
    }
    check(
        worst_mass < 1e-6 && worst_h < 1e-3,
        format!("max |mass-1| {worst_mass:.2e} (limit 1e-6), max Hellinger to stationary {worst_h:.2e} (limit 1e-3)"),
    )
}

fn study(
    process: Process,
    mu: f64,
    lambda: Option<f64>,
    sigma: f64,
    n: usize,
    dt: f64,
    reps: usize,
) -> StudyConfig {
    StudyConfig {
        process,
        mu,
        lambda,
        sigma,
        n,
        dt,
        replications: reps,
        seed: 1,
        theta0: None,
        substeps: 1,
        fit: VmpFitOptions::default(),
    }
}

fn circular_brownian_table() -> Outcome {
    // (n, dt, published SD)
    let cells = [
        (1000, 0.005, 0.021),
        (1000, 0.05, 0.023),
        (10_000, 0.005, 0.007),
        (10_000, 0.05, 0.006),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (n, dt, sd_ref) in cells {
        let r = replicate_study(&study(
            Process::CircularBrownian,
            0.0,
            None,
            1.0,
            n,
            dt,
            100,
        ))
        .map_err(|e| e.to_string())?;
        let good = r.sigma.mean_error.abs() <= 0.01
            && r.sigma.sd <= 2.0 * sd_ref
            && r.sigma.sd >= 0.5 * sd_ref;
        ok &= good;
        parts.push(format!(
            "n={n} dt={dt}: mean {:+.4} sd {:.4} (ref {sd_ref})",
            r.sigma.mean_error, r.sigma.sd
        ));
    }
    let coarse = replicate_study(&study(
        Process::CircularBrownian,
        0.0,
        None,
        2.0,
        10_000,
        0.5,
        100,
    ))
    .map_err(|e| e.to_string())?;
    let m = coarse.sigma.mean_error;
    ok &= (0.05..=0.12).contains(&m);
    parts.push(format!("sigma=2 dt=0.5: mean {m:+.4} (band [0.05, 0.12])"));
    check(ok, parts.join("; "))
}

fn von_mises_fine_sampling() -> Outcome {
    let r = replicate_study(&study(
        Process::VonMises,
        PI / 2.0,
        Some(2.0),
        1.0,
        10_000,
        0.005,
        50,
    ))
    .map_err(|e| e.to_string())?;
    let lam = r.lambda.unwrap();
    let conc = r.mu.unwrap().concentration;
    check(
        conc >= 0.95 && (-1.5..=-0.4).contains(&lam.mean_error),
        format!(
            "dt=0.005: mu concentration {conc:.4} (>= 0.95), E[lambda-hat] {:+.4} (band [-1.5, -0.4]), sd {:.4}, {} fits ok",
            lam.mean_error, lam.sd, r.successes
        ),
    )
}

fn von_mises_coarse_sampling() -> Outcome {
    let r = replicate_study(&study(
        Process::VonMises,
        PI / 2.0,
        Some(2.0),
        1.0,
        10_000,
        0.05,
        50,
    ))
    .map_err(|e| e.to_string())?;
    let lam = r.lambda.unwrap();
    check(
        (-0.25..=0.05).contains(&lam.mean_error) && r.sigma.mean_error.abs() <= 0.05,
        format!(
            "dt=0.05: E[lambda-hat] {:+.4} (band [-0.25, 0.05]), E[sigma-hat] {:+.4} (limit 0.05)",
            lam.mean_error, r.sigma.mean_error
        ),
    )
}

fn pde_correctness() -> Outcome {
    let p = VonMisesParams::new(Angle::zero(), 1e-9, 1.0).unwrap();
    let error = |k: usize, m: usize| -> Result<(f64, f64), String> {
        let (out, diag) = crank_nicolson_vmp::<f64>(&p, Angle::zero(), 0.1, k, m, m)
            .map_err(|e| e.to_string())?;
        let (t, grid) = out.last().unwrap();
        let scale: f64 = t.sqrt();
        let err = grid
            .theta()
            .iter()
            .zip(grid.values())
            .map(|(&th, &v)| {
                (v - wrapped_normal_pdf(angle(th), Angle::zero(), scale).unwrap()).abs()
            })
            .fold(0.0, f64::max);
        Ok((err, diag.max_mass_drift))
    };
    let (coarse, _) = error(1500, 10_000)?;
    let (fine, drift) = error(3000, 20_000)?;
    let ratio = coarse / fine;
    check(
        fine < 1e-3 && drift < 1e-6 && ratio >= 3.0,
        format!("max error {fine:.2e} (limit 1e-3), mass drift {drift:.2e} (limit 1e-6), error ratio on refinement {ratio:.2} (>= 3)"),
    )
}

const DT_DAILY: f64 = 1.0 / 252.0;

fn legs() -> (GbmLeg<f64>, GbmLeg<f64>) {
    (
        GbmLeg::new(0.05, 0.2, 100.0).unwrap(),
        GbmLeg::new(0.02, 0.3, 50.0).unwrap(),
    )
}

fn frozen_pair(rho: f64, seed: u64) -> StochCorrSample<f64> {
    let (l1, l2) = legs();
    // a vanishing correlation volatility freezes the level
    let spec = CorrProcessSpec::CircularBrownian(CbmParams::new(1e-12).unwrap());
    simulate_stochcorr(&l1, &l2, &spec, angle(rho.acos()), 500, DT_DAILY, seed).unwrap()
}

fn fit_cbm_pair(s: &StochCorrSample<f64>, lambda1: f64) -> Result<StochCorrFit<f64>, String> {
    fit_stochcorr(
        &s.prices1,
        &s.prices2,
        DT_DAILY,
        CorrKind::CircularBrownian,
        Hyper::new(lambda1, 0.0).unwrap(),
        &StochCorrOptions::default(),
    )
    .map_err(|e| e.to_string())
}

fn correlation_recovery() -> Outcome {
    let (l1, l2) = legs();
    let mut ok = true;
    let mut parts = Vec::new();
    for (rho, seed) in [(0.0, 11u64), (0.5, 12), (-0.7, 13)] {
        let fit = fit_cbm_pair(&frozen_pair(rho, seed), 4.0)?;
        let rhos = fit.rho_path.rhos();
        let mae = rhos.iter().map(|r| (r - rho).abs()).sum::<f64>() / rhos.len() as f64;
        let e1 = fit.leg1.sigma / l1.sigma - 1.0;
        let e2 = fit.leg2.sigma / l2.sigma - 1.0;
        ok &= mae <= 0.2 && e1.abs() <= 0.25 && e2.abs() <= 0.25;
        parts.push(format!(
            "rho={rho}: MAE {mae:.3}, sigma1 {:.3} ({e1:+.0}%), sigma2 {:.3} ({e2:+.0}%)",
            fit.leg1.sigma,
            fit.leg2.sigma,
            e1 = e1 * 100.0,
            e2 = e2 * 100.0
        ));
    }
    check(ok, parts.join("; "))
}

fn penalty_monotonicity() -> Outcome {
    let (l1, l2) = legs();
    let spec = CorrProcessSpec::CircularBrownian(CbmParams::new(0.5).unwrap());
    let s = simulate_stochcorr(&l1, &l2, &spec, angle(1.0), 500, DT_DAILY, 21).unwrap();
    let mut rough = Vec::new();
    for lambda1 in [1.0, 4.0, 10.0] {
        rough.push(fit_cbm_pair(&s, lambda1)?.rho_path.roughness());
    }
    check(
        rough.windows(2).all(|w| w[1] <= w[0]),
        format!(
            "roughness at lambda1 = 1, 4, 10: {:.3e} {:.3e} {:.3e}",
            rough[0], rough[1], rough[2]
        ),
    )
}

fn bootstrap_contract() -> Outcome {
    let fit = fit_cbm_pair(&frozen_pair(0.5, 12), 4.0)?;
    let opts = StochCorrOptions::default();
    let b95 =
        bootstrap_rho_bands(&fit, DT_DAILY, 50, 0.95, 99, &opts).map_err(|e| e.to_string())?;
    let b50 = bootstrap_rho_bands(&fit, DT_DAILY, 50, 0.5, 99, &opts).map_err(|e| e.to_string())?;
    let again =
        bootstrap_rho_bands(&fit, DT_DAILY, 50, 0.95, 99, &opts).map_err(|e| e.to_string())?;
    let contains = (0..b95.rho_hat.len())
        .all(|t| b95.lower[t] <= b95.rho_hat[t] && b95.rho_hat[t] <= b95.upper[t]);
    let monotone =
        (0..b95.rho_hat.len()).all(|t| b95.upper[t] - b95.lower[t] >= b50.upper[t] - b50.lower[t]);
    let mean_width = b95
        .upper
        .iter()
        .zip(&b95.lower)
        .map(|(u, l)| u - l)
        .sum::<f64>()
        / b95.upper.len() as f64;
    check(
        contains && monotone && again == b95,
        format!(
            "contains estimate {contains}, monotone in level {monotone}, reproducible {}, {} failed refits, mean 95% width {mean_width:.4}",
            again == b95,
            b95.failures
        ),
    )
}

fn likelihood_identities() -> Outcome {
    let (l1, l2) = legs();
    let s = frozen_pair(0.0, 5);
    let (r1, r2) = (
        log_returns(&s.prices1).unwrap(),
        log_returns(&s.prices2).unwrap(),
    );
    let joint = conditional_loglik(&l1, &l2, &vec![0.0; r1.len()], &r1, &r2, DT_DAILY).unwrap();
    let univariate = |r: &[f64], leg: &GbmLeg<f64>| -> f64 {
        let var = leg.sigma * leg.sigma * DT_DAILY;
        let mean = (leg.mu - 0.5 * leg.sigma * leg.sigma) * DT_DAILY;
        r.iter()
            .map(|x| -0.5 * ((x - mean).powi(2) / var + var.ln()))
            .sum()
    };
    let split = univariate(&r1, &l1) + univariate(&r2, &l2);
    let fact = (joint - split).abs() / split.abs();

    let p = VonMisesParams::new(angle(0.7), 1.5, 1.2).unwrap();
    let path = circdiff::diffusion::simulate_vmp(&p, angle(0.7), 400, 0.05, 3).unwrap();
    let base = vmp_loglik(1.5, angle(0.7), &path, 1.2).unwrap();
    let mut rot = 0.0f64;
    for shift in [0.9, -2.3, PI - 0.1] {
        let rotated: Vec<Angle<f64>> = path
            .angles()
            .iter()
            .map(|a| wrap(a.value() + shift).unwrap())
            .collect();
        let rpath = AngularPath64::new(path.times().to_vec(), rotated).unwrap();
        let v = vmp_loglik(1.5, wrap(0.7 + shift).unwrap(), &rpath, 1.2).unwrap();
        rot = rot.max((v - base).abs() / base.abs());
    }
    check(
        fact <= 1e-10 && rot <= 1e-10,
        format!(
            "factorization rel. error {fact:.1e}, rotation rel. error {rot:.1e} (limits 1e-10)"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 transition density vs forward solver", tpd_vs_pde),
        (
            "2 normalization and stationarity",
            normalization_and_stationarity,
        ),
        (
            "3 circular Brownian sigma estimation",
            circular_brownian_table,
        ),
        (
            "4a von Mises estimation, fine sampling",
            von_mises_fine_sampling,
        ),
        (
            "4b von Mises estimation, coarse sampling",
            von_mises_coarse_sampling,
        ),
        ("5 forward solver correctness", pde_correctness),
        ("6 stochastic correlation recovery", correlation_recovery),
        ("7 penalty monotonicity", penalty_monotonicity),
        ("8 bootstrap contract", bootstrap_contract),
        ("9 likelihood identities", likelihood_identities),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {name}: PASS ({secs:.1}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({secs:.1}s) {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
