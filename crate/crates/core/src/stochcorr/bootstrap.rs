use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::stochcorr::fit::{fit_stochcorr, StochCorrFit, StochCorrOptions};
use crate::stochcorr::model::simulate_prices;

/// Refits may fail on at most this fraction of the bootstrap samples.
pub const MAX_FAILURE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapBands<T> {
    pub times: Vec<T>,
    pub rho_hat: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
    pub level: f64,
    pub n_samples: usize,
    pub failures: usize,
}

/// `U(ρ̂, ρ) = 1 - cos(acos ρ̂ - acos ρ)`, in `[0, 2]`.
pub fn rho_pivot<T: Scalar>(rho_hat: T, rho: T) -> T {
    let clip = |r: T| r.max(-T::one()).min(T::one());
    T::one() - (clip(rho_hat).acos() - clip(rho).acos()).cos()
}

/// Per-time pivots `U(ρ̂ₜ, ρ̂ᵢₜ)` of every successful refit, in sample order,
/// plus the number of failed refits.
///
/// Sample `i` simulates prices from the fitted legs with the fitted path
/// frozen, using seed `derive_seed(seed, i)`, and refits with the same
/// penalties and options.
pub fn bootstrap_pivots<T: Scalar>(
    fit: &StochCorrFit<T>,
    dt: T,
    n_samples: usize,
    seed: u64,
    opts: &StochCorrOptions,
) -> Result<(Vec<Vec<T>>, usize)> {
    if n_samples < 2 {
        return invalid("bootstrap needs at least two samples");
    }
    let rho_hat = fit.rho_path.rhos();
    let kind = fit.corr.kind();
    let outcomes: Vec<Result<Vec<T>>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let (p1, p2) = simulate_prices(
                &fit.leg1,
                &fit.leg2,
                &rho_hat[..rho_hat.len() - 1],
                dt,
                derive_seed(seed, i),
            )?;
            let refit = fit_stochcorr(&p1, &p2, dt, kind, fit.hyper, opts)?;
            Ok(rho_hat
                .iter()
                .zip(refit.rho_path.rhos())
                .map(|(&a, &b)| rho_pivot(a, b))
                .collect())
        })
        .collect();
    let failures = outcomes.iter().filter(|o| o.is_err()).count();
    if failures as f64 > MAX_FAILURE_FRACTION * n_samples as f64 {
        return Err(Error::Bootstrap {
            failed: failures,
            total: n_samples,
        });
    }
    Ok((
        outcomes.into_iter().filter_map(|o| o.ok()).collect(),
        failures,
    ))
}

/// Band `ρ̂ₜ ± U_q,ₜ` clipped to `[-1, 1]`, where `U_q,ₜ` is the `q`-quantile
/// (linear interpolation between order statistics) of the pivots at time `t`.
pub fn bands_from_pivots<T: Scalar>(
    fit: &StochCorrFit<T>,
    pivots: &[Vec<T>],
    level: f64,
    failures: usize,
) -> Result<BootstrapBands<T>> {
    if !(level > 0.0 && level < 1.0) {
        return invalid(format!("band level must lie in (0, 1), got {level}"));
    }
    if pivots.is_empty() {
        return invalid("no successful bootstrap refits");
    }
    let rho_hat = fit.rho_path.rhos().to_vec();
    let mut lower = Vec::with_capacity(rho_hat.len());
    let mut upper = Vec::with_capacity(rho_hat.len());
    let mut column = Vec::with_capacity(pivots.len());
    for (t, &r) in rho_hat.iter().enumerate() {
        column.clear();
        column.extend(pivots.iter().map(|p| p[t]));
        column.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let u = quantile(&column, level);
        lower.push((r - u).max(-T::one()));
        upper.push((r + u).min(T::one()));
    }
    Ok(BootstrapBands {
        times: fit.rho_path.times().to_vec(),
        rho_hat,
        lower,
        upper,
        level,
        n_samples: pivots.len() + failures,
        failures,
    })
}

/// Bootstrap confidence bands for the correlation path at level `q`.
pub fn bootstrap_rho_bands<T: Scalar>(
    fit: &StochCorrFit<T>,
    dt: T,
    n_samples: usize,
    level: f64,
    seed: u64,
    opts: &StochCorrOptions,
) -> Result<BootstrapBands<T>> {
    if !(level > 0.0 && level < 1.0) {
        return invalid(format!("band level must lie in (0, 1), got {level}"));
    }
    let (pivots, failures) = bootstrap_pivots(fit, dt, n_samples, seed, opts)?;
    bands_from_pivots(fit, &pivots, level, failures)
}

fn quantile<T: Scalar>(sorted: &[T], q: f64) -> T {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let w = T::lit(pos - lo as f64);
    sorted[lo] + w * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use crate::circular::Angle;
    use crate::diffusion::CbmParams;
    use crate::stochcorr::{
        fit_stochcorr, simulate_stochcorr, CorrKind, CorrProcessSpec, GbmLeg, Hyper,
    };

    const DT: f64 = 1.0 / 252.0;

    fn fitted(n: usize) -> StochCorrFit<f64> {
        let l1 = GbmLeg::new(0.05, 0.2, 100.0).unwrap();
        let l2 = GbmLeg::new(0.02, 0.3, 50.0).unwrap();
        let spec = CorrProcessSpec::CircularBrownian(CbmParams::new(1e-12).unwrap());
        let s = simulate_stochcorr(
            &l1,
            &l2,
            &spec,
            Angle::new(0.5f64.acos()).unwrap(),
            n,
            DT,
            21,
        )
        .unwrap();
        fit_stochcorr(
            &s.prices1,
            &s.prices2,
            DT,
            CorrKind::CircularBrownian,
            Hyper::default_cbm(),
            &StochCorrOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn band_contract() {
        let fit = fitted(120);
        let opts = StochCorrOptions::default();
        let (pivots, failures) = bootstrap_pivots(&fit, DT, 8, 5, &opts).unwrap();
        assert_eq!(pivots.len() + failures, 8);
        let lo = bands_from_pivots(&fit, &pivots, 0.5, failures).unwrap();
        let hi = bands_from_pivots(&fit, &pivots, 0.95, failures).unwrap();
        for t in 0..fit.rho_path.len() {
            assert!(hi.lower[t] <= hi.rho_hat[t] && hi.rho_hat[t] <= hi.upper[t]);
            assert!(hi.upper[t] - hi.lower[t] >= lo.upper[t] - lo.lower[t]);
            assert!(hi.lower[t] >= -1.0 && hi.upper[t] <= 1.0);
        }
        assert_eq!(
            bootstrap_rho_bands(&fit, DT, 8, 0.95, 5, &opts).unwrap(),
            hi
        );
    }

    #[test]
    fn zero_pivots_give_zero_width() {
        let fit = fitted(60);
        let pivots = vec![vec![0.0; fit.rho_path.len()]; 5];
        let b = bands_from_pivots(&fit, &pivots, 0.9, 0).unwrap();
        assert_eq!(b.lower, b.rho_hat);
        assert_eq!(b.upper, b.rho_hat);
    }

    #[test]
    fn too_many_failed_refits_is_an_error() {
        let fit = fitted(60);
        // a window longer than the series makes every refit fail
        let opts = StochCorrOptions {
            window: 100,
            ..StochCorrOptions::default()
        };
        let r = bootstrap_pivots(&fit, DT, 4, 1, &opts);
        assert!(matches!(
            r,
            Err(Error::Bootstrap {
                failed: 4,
                total: 4
            })
        ));
        assert!(bootstrap_rho_bands(&fit, DT, 1, 0.9, 1, &StochCorrOptions::default()).is_err());
        assert!(bootstrap_rho_bands(&fit, DT, 4, 1.0, 1, &StochCorrOptions::default()).is_err());
    }

    #[test]
    fn pivot_examples() {
        assert_eq!(rho_pivot(0.3f64, 0.3), 0.0);
        assert!((rho_pivot(1.0f64, -1.0) - 2.0).abs() < 1e-15);
        assert!((rho_pivot(0.0f64, 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [0.0f64, 1.0, 2.0, 3.0];
        assert_eq!(quantile(&xs, 0.5), 1.5);
        assert_eq!(quantile(&xs, 0.0), 0.0);
        assert!((quantile(&xs, 0.95) - 2.85).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn pivot_in_range(a in -1.0f64..=1.0, b in -1.0f64..=1.0) {
            let u = rho_pivot(a, b);
            prop_assert!((0.0..=2.0).contains(&u));
            prop_assert!((u - rho_pivot(b, a)).abs() < 1e-15);
        }

        #[test]
        fn quantile_monotone(mut xs in proptest::collection::vec(0.0f64..2.0, 2..40), q1 in 0.01f64..0.99, q2 in 0.01f64..0.99) {
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let (lo, hi) = if q1 <= q2 { (q1, q2) } else { (q2, q1) };
            prop_assert!(quantile(&xs, lo) <= quantile(&xs, hi));
        }
    }
}
