use serde::{Deserialize, Serialize};

use crate::circular::Angle;
use crate::diffusion::{
    check_positive, simulate_cbm, simulate_vmp, AngularPath, CbmParams, VonMisesParams,
};
use crate::error::{invalid, Error, Result};
use crate::rng::{standard_normal, stream};
use crate::scalar::{c, Scalar};

/// Correlations are kept in `[-1 + ε, 1 - ε]` with this `ε`.
pub const RHO_EPS: f64 = 1e-6;

/// Price stream seeds are the path seed xor this constant, so the angle path
/// and the price shocks never share a stream.
const PRICE_STREAM_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// One geometric Brownian motion leg, `dS = μ S dt + σ S dB`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmLeg<T> {
    pub mu: T,
    pub sigma: T,
    pub s0: T,
}

impl<T: Scalar> GbmLeg<T> {
    pub fn new(mu: T, sigma: T, s0: T) -> Result<Self> {
        if !mu.is_finite() {
            return invalid(format!("leg drift must be finite, got {mu}"));
        }
        check_positive("leg sigma", sigma)?;
        check_positive("initial price", s0)?;
        Ok(Self { mu, sigma, s0 })
    }

    /// Mean of a log-return over `dt`: `(μ - σ²/2) dt`.
    pub fn log_drift(&self, dt: T) -> T {
        (self.mu - c::<T>(0.5) * self.sigma * self.sigma) * dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrKind {
    CircularBrownian,
    VonMises,
}

/// The circular diffusion driving `θ_t`, with `ρ_t = cos θ_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CorrProcessSpec<T> {
    CircularBrownian(CbmParams<T>),
    VonMises(VonMisesParams<T>),
}

impl<T: Scalar> CorrProcessSpec<T> {
    pub fn kind(&self) -> CorrKind {
        match self {
            CorrProcessSpec::CircularBrownian(_) => CorrKind::CircularBrownian,
            CorrProcessSpec::VonMises(_) => CorrKind::VonMises,
        }
    }

    pub fn sigma(&self) -> T {
        match self {
            CorrProcessSpec::CircularBrownian(p) => p.sigma(),
            CorrProcessSpec::VonMises(p) => p.sigma(),
        }
    }

    /// Same process with diffusion coefficient `sigma`.
    pub fn with_sigma(&self, sigma: T) -> Result<Self> {
        Ok(match self {
            CorrProcessSpec::CircularBrownian(_) => {
                CorrProcessSpec::CircularBrownian(CbmParams::new(sigma)?)
            }
            CorrProcessSpec::VonMises(p) => {
                CorrProcessSpec::VonMises(VonMisesParams::new(p.mu(), p.lambda(), sigma)?)
            }
        })
    }

    /// Stationary concentration; zero for circular Brownian motion.
    pub fn kappa(&self) -> T {
        match self {
            CorrProcessSpec::CircularBrownian(_) => T::zero(),
            CorrProcessSpec::VonMises(p) => p.kappa(),
        }
    }
}

/// Correlation path on the observation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhoPath<T> {
    times: Vec<T>,
    rhos: Vec<T>,
}

impl<T: Scalar> RhoPath<T> {
    /// Fails unless every `|ρ| ≤ 1 - ε` and the lengths agree.
    pub fn new(times: Vec<T>, rhos: Vec<T>) -> Result<Self> {
        if times.len() != rhos.len() || rhos.is_empty() {
            return invalid("rho path needs matching, non-empty times and values");
        }
        let bound = T::one() - c(RHO_EPS);
        if let Some(r) = rhos.iter().find(|r| !(r.abs() <= bound)) {
            return invalid(format!("correlation {r} lies outside [-1+eps, 1-eps]"));
        }
        Ok(Self { times, rhos })
    }

    /// Clamps every value into `[-1 + ε, 1 - ε]`; NaN is rejected.
    pub fn clamped(times: Vec<T>, rhos: Vec<T>) -> Result<Self> {
        if rhos.iter().any(|r| r.is_nan()) {
            return invalid("correlation path contains NaN");
        }
        let rhos = rhos.into_iter().map(clamp_rho).collect();
        Self::new(times, rhos)
    }

    /// Path on the uniform grid `0, dt, 2dt, …`.
    pub fn uniform(dt: T, rhos: Vec<T>) -> Result<Self> {
        let times = (0..rhos.len()).map(|i| dt * T::from_count(i)).collect();
        Self::new(times, rhos)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn rhos(&self) -> &[T] {
        &self.rhos
    }

    pub fn len(&self) -> usize {
        self.rhos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhos.is_empty()
    }

    /// `Σ (ρᵢ₊₁ - ρᵢ)²`.
    pub fn roughness(&self) -> T {
        self.rhos
            .windows(2)
            .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
            .sum()
    }

    /// `θᵢ = acos ρᵢ`.
    pub fn angles(&self) -> Vec<Angle<T>> {
        self.rhos.iter().map(|r| Angle::wrapped(r.acos())).collect()
    }

    pub fn angle_path(&self) -> Result<AngularPath<T>> {
        AngularPath::new(self.times.clone(), self.angles())
    }
}

pub(crate) fn clamp_rho<T: Scalar>(r: T) -> T {
    let bound = T::one() - c(RHO_EPS);
    r.max(-bound).min(bound)
}

/// Two legs, a correlation process and a latent correlation path: a full
/// candidate for the likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrModel<T> {
    pub leg1: GbmLeg<T>,
    pub leg2: GbmLeg<T>,
    pub corr: CorrProcessSpec<T>,
    pub rho: RhoPath<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochCorrSample<T> {
    pub prices1: Vec<T>,
    pub prices2: Vec<T>,
    /// Hidden angle path with `ρ = cos θ`.
    pub theta: AngularPath<T>,
}

/// Simulates `n` price pairs `dt` apart. `θ` follows the correlation process
/// from `theta0` by Euler–Maruyama; each price step is the exact GBM
/// increment with `ρᵢ = cos θᵢ` frozen over the interval.
pub fn simulate_stochcorr<T: Scalar>(
    leg1: &GbmLeg<T>,
    leg2: &GbmLeg<T>,
    spec: &CorrProcessSpec<T>,
    theta0: Angle<T>,
    n: usize,
    dt: T,
    seed: u64,
) -> Result<StochCorrSample<T>> {
    let theta = match spec {
        CorrProcessSpec::CircularBrownian(p) => simulate_cbm(p, theta0, n, dt, seed)?,
        CorrProcessSpec::VonMises(p) => simulate_vmp(p, theta0, n, dt, seed)?,
    };
    let rhos: Vec<T> = theta.angles()[..n - 1].iter().map(|a| a.cos()).collect();
    let (prices1, prices2) = simulate_prices(leg1, leg2, &rhos, dt, seed ^ PRICE_STREAM_SALT)?;
    Ok(StochCorrSample {
        prices1,
        prices2,
        theta,
    })
}

/// Price pairs driven by a given correlation per interval: `rhos[i]` applies
/// to the step from price `i` to price `i + 1`, so `rhos.len() + 1` prices
/// come back.
pub fn simulate_prices<T: Scalar>(
    leg1: &GbmLeg<T>,
    leg2: &GbmLeg<T>,
    rhos: &[T],
    dt: T,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return invalid(format!("time step must be finite and > 0, got {dt}"));
    }
    if let Some(r) = rhos.iter().find(|r| !(r.abs() <= T::one())) {
        return invalid(format!("correlation {r} outside [-1, 1]"));
    }
    let mut rng = stream(seed);
    let root_dt = dt.sqrt();
    let (m1, m2) = (leg1.log_drift(dt), leg2.log_drift(dt));
    let (mut x1, mut x2) = (leg1.s0.ln(), leg2.s0.ln());
    let mut p1 = Vec::with_capacity(rhos.len() + 1);
    let mut p2 = Vec::with_capacity(rhos.len() + 1);
    p1.push(leg1.s0);
    p2.push(leg2.s0);
    for &rho in rhos {
        let z1: T = standard_normal(&mut rng);
        let z2: T = standard_normal(&mut rng);
        let w2 = rho * z1 + (T::one() - rho * rho).max(T::zero()).sqrt() * z2;
        x1 = x1 + m1 + leg1.sigma * root_dt * z1;
        x2 = x2 + m2 + leg2.sigma * root_dt * w2;
        p1.push(x1.exp());
        p2.push(x2.exp());
    }
    Ok((p1, p2))
}

/// `rᵢ = log pᵢ₊₁ - log pᵢ`.
pub fn log_returns<T: Scalar>(prices: &[T]) -> Result<Vec<T>> {
    if prices.len() < 2 {
        return Err(Error::Data("need at least two prices for a return".into()));
    }
    if let Some((i, p)) = prices
        .iter()
        .enumerate()
        .find(|(_, p)| !(**p > T::zero()) || !p.is_finite())
    {
        return Err(Error::Data(format!(
            "price {p} at index {i} is not finite and positive"
        )));
    }
    Ok(prices.windows(2).map(|w| w[1].ln() - w[0].ln()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn a(x: f64) -> Angle<f64> {
        Angle::new(x).unwrap()
    }

    fn legs() -> (GbmLeg<f64>, GbmLeg<f64>) {
        (
            GbmLeg::new(0.05, 0.2, 100.0).unwrap(),
            GbmLeg::new(-0.02, 0.3, 50.0).unwrap(),
        )
    }

    fn pearson(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
        let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
        sxy / (sxx * syy).sqrt()
    }

    fn frozen(theta0: f64, n: usize, seed: u64) -> f64 {
        let (l1, l2) = legs();
        let spec = CorrProcessSpec::CircularBrownian(CbmParams::new(1e-12).unwrap());
        let s = simulate_stochcorr(&l1, &l2, &spec, a(theta0), n, 1.0 / 252.0, seed).unwrap();
        pearson(
            &log_returns(&s.prices1).unwrap(),
            &log_returns(&s.prices2).unwrap(),
        )
    }

    #[test]
    fn frozen_correlation_levels() {
        let n = 100_000;
        let one = frozen(0.0, n, 1);
        assert!(one > 0.999 && one <= 1.0 + 1e-12, "{one}");
        assert!(frozen(PI / 2.0, n, 2).abs() < 0.01);
        // ρ = 0.5: Pearson SE is (1 - ρ²)/√n ≈ 0.0024
        assert!((frozen((0.5f64).acos(), n, 3) - 0.5).abs() < 0.01);
    }

    #[test]
    fn leg_volatility_matches_returns() {
        let (l1, l2) = legs();
        let dt = 1.0 / 252.0;
        let (p1, _) = simulate_prices(&l1, &l2, &vec![0.3; 50_000], dt, 9).unwrap();
        let r = log_returns(&p1).unwrap();
        let n = r.len() as f64;
        let m = r.iter().sum::<f64>() / n;
        let sd = (r.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd / dt.sqrt() - 0.2).abs() < 0.003);
    }

    #[test]
    fn deterministic_and_shaped() {
        let (l1, l2) = legs();
        let spec = CorrProcessSpec::VonMises(VonMisesParams::new(a(1.0), 2.0, 0.5).unwrap());
        let s1 = simulate_stochcorr(&l1, &l2, &spec, a(1.0), 30, 0.01, 5).unwrap();
        let s2 = simulate_stochcorr(&l1, &l2, &spec, a(1.0), 30, 0.01, 5).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(
            (s1.prices1.len(), s1.prices2.len(), s1.theta.len()),
            (30, 30, 30)
        );
        assert_eq!(s1.prices1[0], 100.0);
        assert!(simulate_stochcorr(&l1, &l2, &spec, a(1.0), 1, 0.01, 5).is_err());
    }

    #[test]
    fn log_return_examples() {
        assert_eq!(log_returns(&[3.0, 3.0, 3.0]).unwrap(), vec![0.0, 0.0]);
        assert!((log_returns(&[1.0, std::f64::consts::E]).unwrap()[0] - 1.0).abs() < 1e-15);
        assert_eq!(log_returns(&[1.0, 2.0, 3.0, 4.0]).unwrap().len(), 3);
        assert!(matches!(log_returns(&[1.0, 0.0]), Err(Error::Data(_))));
        assert!(log_returns(&[1.0]).is_err());
    }

    #[test]
    fn rho_path_invariants() {
        assert!(RhoPath::new(vec![0.0, 1.0], vec![0.2, 1.0]).is_err());
        let p = RhoPath::clamped(vec![0.0, 1.0, 2.0], vec![-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(p.rhos(), &[-1.0 + RHO_EPS, 0.0, 1.0 - RHO_EPS]);
        assert!(RhoPath::clamped(vec![0.0], vec![f64::NAN]).is_err());
        let q = RhoPath::uniform(0.5f64, vec![0.1, 0.3, 0.0]).unwrap();
        assert!((q.roughness() - 0.13).abs() < 1e-15);
        assert_eq!(q.times(), &[0.0, 0.5, 1.0]);
        assert!(GbmLeg::new(0.0, 0.0, 1.0).is_err());
        assert!(GbmLeg::new(0.0, 0.1, -1.0).is_err());
    }
}
