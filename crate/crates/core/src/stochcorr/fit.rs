//! Penalized-likelihood fit of the stochastic-correlation model.
//!
//! Each outer round
//! 1. sets the correlation-process `σ` to the quadratic variation of
//!    `acos ρ̂` (floored at [`StochCorrOptions::sigma_floor`]);
//! 2. maximizes over the leg parameters and, for the von Mises process,
//!    `(λ, μ)` with the path held fixed;
//! 3. maximizes over the path with the parameters held fixed.
//!
//! Step 3 exploits the chain structure of the objective: every term involves
//! at most two neighbouring `ρᵢ`, so dynamic programming (Viterbi) on a grid
//! of correlation levels finds the best grid path exactly. That path is then
//! polished coordinate by coordinate and by a common level shift with the
//! derivative-free optimizer, and kept only if it beats the current one.

use serde::{Deserialize, Serialize};

use crate::circular::{circular_mean, Angle};
use crate::diffusion::{CbmParams, VonMisesParams};
use crate::error::{invalid, Error, Result};
use crate::estimation::{qv_sigma_hat, LAMBDA_MIN};
use crate::scalar::{c, Scalar};
use crate::stochcorr::likelihood::{jacobian, pair_loglik, penalized_loglik, AngleKernel, Hyper};
use crate::stochcorr::model::{
    clamp_rho, log_returns, CorrKind, CorrModel, CorrProcessSpec, GbmLeg, RhoPath, RHO_EPS,
};
use crate::stochcorr::optim::{dfo_maximize, Bounds, DfoOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StochCorrOptions {
    /// Rolling-correlation window of the initial path, in returns.
    pub window: usize,
    pub max_rounds: usize,
    /// Stop once a round improves the objective by less than
    /// `tol · max(1, |objective|)`.
    pub tol: f64,
    /// Correlation levels in the dynamic-programming grid.
    pub grid_levels: usize,
    /// Coordinate-polish sweeps after each grid solve.
    pub polish_sweeps: usize,
    /// Lower bound on the correlation-process `σ`.
    pub sigma_floor: f64,
    /// Upper bound on the von Mises drift rate of the correlation process.
    pub lambda_max: f64,
    pub dfo: DfoOptions,
}

impl Default for StochCorrOptions {
    fn default() -> Self {
        Self {
            window: 20,
            max_rounds: 20,
            tol: 1e-6,
            grid_levels: 201,
            polish_sweeps: 2,
            sigma_floor: 1e-3,
            lambda_max: 50.0,
            dfo: DfoOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub rounds: usize,
    pub converged: bool,
    /// Penalized objective after each round.
    pub objective_trace: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochCorrFit<T> {
    pub leg1: GbmLeg<T>,
    pub leg2: GbmLeg<T>,
    pub corr: CorrProcessSpec<T>,
    pub rho_path: RhoPath<T>,
    pub penalized_loglik: T,
    pub hyper: Hyper,
    pub diagnostics: FitDiagnostics,
}

impl<T: Scalar> StochCorrFit<T> {
    pub fn model(&self) -> CorrModel<T> {
        CorrModel {
            leg1: self.leg1,
            leg2: self.leg2,
            corr: self.corr,
            rho: self.rho_path.clone(),
        }
    }
}

/// Fits the model to two aligned price series observed `dt` apart.
pub fn fit_stochcorr<T: Scalar>(
    prices1: &[T],
    prices2: &[T],
    dt: T,
    kind: CorrKind,
    hyper: Hyper,
    opts: &StochCorrOptions,
) -> Result<StochCorrFit<T>> {
    if prices1.len() != prices2.len() {
        return invalid("price series must be aligned (equal length)");
    }
    if opts.window < 2 || prices1.len() < opts.window + 2 {
        return invalid(format!(
            "need at least window + 2 = {} prices and a window >= 2",
            opts.window + 2
        ));
    }
    if !(dt > T::zero()) || !dt.is_finite() {
        return invalid(format!("dt must be finite and > 0, got {dt}"));
    }
    if opts.grid_levels < 3 || opts.max_rounds == 0 || !(opts.sigma_floor > 0.0) {
        return invalid("fit options: need grid_levels >= 3, max_rounds >= 1, sigma_floor > 0");
    }
    let hyper = match kind {
        CorrKind::CircularBrownian => Hyper::new(hyper.lambda1, 0.0)?,
        CorrKind::VonMises => Hyper::new(hyper.lambda1, hyper.lambda2)?,
    };
    let r1 = log_returns(prices1)?;
    let r2 = log_returns(prices2)?;
    let ctx = Context {
        r1: &r1,
        r2: &r2,
        dt,
        hyper,
        opts,
    };

    let mut rhos = rolling_correlation(&r1, &r2, opts.window);
    rhos.push(*rhos.last().expect("at least one return"));
    let rho = RhoPath::clamped(uniform_times(dt, rhos.len()), rhos)?;
    let sigma_c = corr_sigma(&rho, opts)?;
    let corr = match kind {
        CorrKind::CircularBrownian => CorrProcessSpec::CircularBrownian(CbmParams::new(sigma_c)?),
        CorrKind::VonMises => {
            let mu = circular_mean(&rho.angles()).unwrap_or(Angle::wrapped(T::FRAC_PI_2()));
            CorrProcessSpec::VonMises(VonMisesParams::new(mu, T::one(), sigma_c)?)
        }
    };
    let mut model = CorrModel {
        leg1: univariate_leg(&r1, dt, prices1[0])?,
        leg2: univariate_leg(&r2, dt, prices2[0])?,
        corr,
        rho,
    };

    let mut evaluations = 0;
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut previous = T::neg_infinity();
    let mut value = T::neg_infinity();
    for _ in 0..opts.max_rounds {
        model.corr = model.corr.with_sigma(corr_sigma(&model.rho, opts)?)?;
        evaluations += ctx.fit_parameters(&mut model)?;
        evaluations += ctx.fit_path(&mut model)?;
        value = ctx.objective(&model);
        if !value.is_finite() {
            return Err(Error::FitFailure {
                reason: "penalized log-likelihood is not finite".into(),
                evaluations,
                best_params: ctx
                    .parameter_vector(&model)
                    .iter()
                    .map(|v| v.to_f64_lossy())
                    .collect(),
                best_value: value.to_f64_lossy(),
            });
        }
        trace.push(value.to_f64_lossy());
        if (value - previous).abs() < c::<T>(opts.tol) * T::one().max(value.abs()) {
            converged = true;
            break;
        }
        previous = value;
    }
    Ok(StochCorrFit {
        leg1: model.leg1,
        leg2: model.leg2,
        corr: model.corr,
        rho_path: model.rho,
        penalized_loglik: value,
        hyper,
        diagnostics: FitDiagnostics {
            rounds: trace.len(),
            converged,
            objective_trace: trace,
            evaluations,
        },
    })
}

/// Pearson correlation of the trailing `window` returns at each index, with
/// the first `window - 1` entries padded by the first full-window value.
pub fn rolling_correlation<T: Scalar>(r1: &[T], r2: &[T], window: usize) -> Vec<T> {
    let n = r1.len().min(r2.len());
    if window == 0 || n < window {
        return vec![T::zero(); n];
    }
    let mut out = Vec::with_capacity(n);
    for end in window..=n {
        let (x, y) = (&r1[end - window..end], &r2[end - window..end]);
        let w = T::from_count(window);
        let (mx, my) = (
            x.iter().copied().sum::<T>() / w,
            y.iter().copied().sum::<T>() / w,
        );
        let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
        for (&a, &b) in x.iter().zip(y) {
            sxy = sxy + (a - mx) * (b - my);
            sxx = sxx + (a - mx) * (a - mx);
            syy = syy + (b - my) * (b - my);
        }
        let denom = (sxx * syy).sqrt();
        out.push(if denom > T::zero() {
            sxy / denom
        } else {
            T::zero()
        });
    }
    let first = out[0];
    let mut padded = vec![first; window - 1];
    padded.extend(out);
    padded.into_iter().map(clamp_rho).collect()
}

fn uniform_times<T: Scalar>(dt: T, n: usize) -> Vec<T> {
    (0..n).map(|i| dt * T::from_count(i)).collect()
}

fn corr_sigma<T: Scalar>(rho: &RhoPath<T>, opts: &StochCorrOptions) -> Result<T> {
    Ok(qv_sigma_hat(&rho.angle_path()?)?.max(c(opts.sigma_floor)))
}

/// Maximum-likelihood GBM leg from returns alone.
fn univariate_leg<T: Scalar>(r: &[T], dt: T, s0: T) -> Result<GbmLeg<T>> {
    let n = T::from_count(r.len());
    let mean = r.iter().copied().sum::<T>() / n;
    let var = r.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / n;
    let sigma = (var / dt).sqrt().max(c(1e-6));
    GbmLeg::new(mean / dt + c::<T>(0.5) * sigma * sigma, sigma, s0)
}

struct Context<'a, T> {
    r1: &'a [T],
    r2: &'a [T],
    dt: T,
    hyper: Hyper,
    opts: &'a StochCorrOptions,
}

impl<T: Scalar> Context<'_, T> {
    fn objective(&self, model: &CorrModel<T>) -> T {
        penalized_loglik(model, self.r1, self.r2, self.dt, &self.hyper).unwrap_or(T::neg_infinity())
    }

    /// `(μ₁, σ₁, μ₂, σ₂, d)` and, for the von Mises process, `(λ, μ)`, where
    /// `d` shifts the whole path. Moving the level together with the leg
    /// volatilities follows ridges the alternating steps would crawl along.
    fn parameter_vector(&self, model: &CorrModel<T>) -> Vec<T> {
        let mut x = vec![
            model.leg1.mu,
            model.leg1.sigma,
            model.leg2.mu,
            model.leg2.sigma,
            T::zero(),
        ];
        if let CorrProcessSpec::VonMises(p) = model.corr {
            x.extend([p.lambda(), T::zero()]);
        }
        x
    }

    fn with_parameters(&self, model: &CorrModel<T>, x: &[T]) -> Result<CorrModel<T>> {
        let corr = match model.corr {
            CorrProcessSpec::CircularBrownian(p) => CorrProcessSpec::CircularBrownian(p),
            CorrProcessSpec::VonMises(p) => CorrProcessSpec::VonMises(VonMisesParams::new(
                p.mu() + Angle::wrapped(x[6]),
                x[5],
                p.sigma(),
            )?),
        };
        let rho = if x[4] == T::zero() {
            model.rho.clone()
        } else {
            let rhos = model
                .rho
                .rhos()
                .iter()
                .map(|&r| clamp_rho(r + x[4]))
                .collect();
            RhoPath::new(model.rho.times().to_vec(), rhos)?
        };
        Ok(CorrModel {
            leg1: GbmLeg::new(x[0], x[1], model.leg1.s0)?,
            leg2: GbmLeg::new(x[2], x[3], model.leg2.s0)?,
            corr,
            rho,
        })
    }

    fn fit_parameters(&self, model: &mut CorrModel<T>) -> Result<usize> {
        let x0 = self.parameter_vector(model);
        let inf = T::infinity();
        let floor = c::<T>(1e-6);
        let two_pi = T::PI() + T::PI();
        let two = c::<T>(2.0);
        let (mut lo, mut hi) = (
            vec![-inf, floor, -inf, floor, -two],
            vec![inf, inf, inf, inf, two],
        );
        if x0.len() == 7 {
            lo.extend([c(LAMBDA_MIN), -two_pi]);
            hi.extend([c(self.opts.lambda_max), two_pi]);
        }
        let x0: Vec<T> = x0
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(&v, (&l, &h))| v.max(l).min(h))
            .collect();
        let bounds = Bounds::new(lo, hi)?;
        let r = dfo_maximize(
            |x: &[T]| {
                self.with_parameters(model, x)
                    .map(|m| self.objective(&m))
                    .unwrap_or(T::neg_infinity())
            },
            &x0,
            &bounds,
            &self.opts.dfo,
        )?;
        if r.value >= self.objective(model) {
            *model = self.with_parameters(model, &r.x)?;
        }
        Ok(r.evaluations)
    }

    fn fit_path(&self, model: &mut CorrModel<T>) -> Result<usize> {
        let chain = Chain::new(self, model)?;
        let mut rhos = chain.viterbi();
        let mut evaluations = 0;
        let spacing = chain.grid[1] - chain.grid[0];
        for _ in 0..self.opts.polish_sweeps {
            evaluations += chain.polish(&mut rhos, spacing)?;
        }
        let candidate = CorrModel {
            rho: RhoPath::clamped(model.rho.times().to_vec(), rhos)?,
            ..model.clone()
        };
        let shifted = self.shift_level(&candidate, spacing, &mut evaluations)?;
        if self.objective(&shifted) >= self.objective(model) {
            *model = shifted;
        }
        Ok(evaluations)
    }

    /// Best common additive shift of the whole path within `±spacing`.
    fn shift_level(
        &self,
        model: &CorrModel<T>,
        spacing: T,
        evaluations: &mut usize,
    ) -> Result<CorrModel<T>> {
        let shifted = |d: T| -> Result<CorrModel<T>> {
            let rhos = model.rho.rhos().iter().map(|&r| clamp_rho(r + d)).collect();
            Ok(CorrModel {
                rho: RhoPath::new(model.rho.times().to_vec(), rhos)?,
                ..model.clone()
            })
        };
        let bounds = Bounds::new(vec![-spacing], vec![spacing])?;
        let opts = DfoOptions {
            initial_step: spacing.to_f64_lossy() * 0.5,
            ..self.opts.dfo
        };
        let r = dfo_maximize(
            |x: &[T]| {
                shifted(x[0])
                    .map(|m| self.objective(&m))
                    .unwrap_or(T::neg_infinity())
            },
            &[T::zero()],
            &bounds,
            &opts,
        )?;
        *evaluations += r.evaluations;
        if r.value >= self.objective(model) {
            shifted(r.x[0])
        } else {
            Ok(model.clone())
        }
    }
}

/// The path objective as a chain: unary terms per time point and pairwise
/// terms per interval, everything else held fixed.
struct Chain<'a, T> {
    ctx: &'a Context<'a, T>,
    model: &'a CorrModel<T>,
    kernel: AngleKernel<T>,
    roughness_weight: T,
    grid: Vec<T>,
}

impl<'a, T: Scalar> Chain<'a, T> {
    fn new(ctx: &'a Context<'a, T>, model: &'a CorrModel<T>) -> Result<Self> {
        let levels = ctx.opts.grid_levels;
        let top = T::one() - c(RHO_EPS);
        let step = (top + top) / T::from_count(levels - 1);
        let grid = (0..levels)
            .map(|k| clamp_rho(-top + step * T::from_count(k)))
            .collect();
        Ok(Self {
            ctx,
            model,
            kernel: AngleKernel::new(&model.corr, ctx.dt)?,
            roughness_weight: c::<T>(ctx.hyper.lambda1) * T::from_count(model.rho.len() - 1),
            grid,
        })
    }

    fn unary(&self, i: usize, rho: T) -> T {
        let mut u = if i < self.ctx.r1.len() {
            pair_loglik(
                &self.model.leg1,
                &self.model.leg2,
                rho,
                self.ctx.r1[i],
                self.ctx.r2[i],
                self.ctx.dt,
            )
        } else {
            T::zero()
        };
        if i > 0 {
            u = u + jacobian(rho);
        }
        u
    }

    fn pairwise(&self, from: T, to: T) -> T {
        let theta = |r: T| Angle::wrapped(r.acos());
        self.kernel.log_pdf(theta(to), theta(from))
            - self.roughness_weight * (to - from) * (to - from)
    }

    fn viterbi(&self) -> Vec<T> {
        let g = self.grid.len();
        let n = self.model.rho.len();
        let pair: Vec<T> = (0..g * g)
            .map(|idx| self.pairwise(self.grid[idx / g], self.grid[idx % g]))
            .collect();
        let mut score: Vec<T> = self.grid.iter().map(|&r| self.unary(0, r)).collect();
        let mut back = vec![0u32; n * g];
        let mut next = vec![T::zero(); g];
        for i in 1..n {
            for l in 0..g {
                let (mut best, mut arg) = (T::neg_infinity(), 0usize);
                for k in 0..g {
                    let v = score[k] + pair[k * g + l];
                    if v > best {
                        best = v;
                        arg = k;
                    }
                }
                back[i * g + l] = arg as u32;
                next[l] = best + self.unary(i, self.grid[l]);
            }
            std::mem::swap(&mut score, &mut next);
        }
        let mut k = (0..g)
            .max_by(|&a, &b| {
                score[a]
                    .partial_cmp(&score[b])
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(g / 2);
        let mut path = vec![T::zero(); n];
        for i in (0..n).rev() {
            path[i] = self.grid[k];
            k = back[i * g + k] as usize;
        }
        path
    }

    /// One sweep of single-coordinate maximization within `±radius`.
    fn polish(&self, rhos: &mut [T], radius: T) -> Result<usize> {
        let n = rhos.len();
        let top = T::one() - c(RHO_EPS);
        let mut evaluations = 0;
        let opts = DfoOptions {
            initial_step: radius.to_f64_lossy() * 0.25,
            max_evals: 200,
            ..self.ctx.opts.dfo
        };
        for i in 0..n {
            let local = |r: T| {
                let mut v = self.unary(i, r);
                if i > 0 {
                    v = v + self.pairwise(rhos[i - 1], r);
                }
                if i + 1 < n {
                    v = v + self.pairwise(r, rhos[i + 1]);
                }
                v
            };
            let x0 = rhos[i];
            let bounds = Bounds::new(vec![(x0 - radius).max(-top)], vec![(x0 + radius).min(top)])?;
            let r = dfo_maximize(|x: &[T]| local(x[0]), &[x0], &bounds, &opts)?;
            evaluations += r.evaluations;
            if r.value > local(x0) {
                rhos[i] = r.x[0];
            }
        }
        Ok(evaluations)
    }
}
