//! Crank–Nicolson solver for the forward (Fokker–Planck) equation of the von
//! Mises process on `(-π, π]` with periodic boundaries:
//!
//! ```text
//! ∂p/∂t = (σ²/2) ∂²p/∂θ² + ∂/∂θ [λ sin(θ-μ) p]
//! ```
//!
//! The drift term is discretized in flux form with centered differences, so
//! the discrete operator has zero column sums and conserves mass exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circular::{hellinger_discrete, Angle};
use crate::diffusion::{vmp_tpd_grid, VonMisesParams};
use crate::error::{invalid, Error, Result};
use crate::scalar::{c, Scalar};

/// Densities on the uniform grid `θⱼ = -π + j·2π/k`, `j = 1..=k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid<T> {
    theta: Vec<T>,
    values: Vec<T>,
    dtheta: T,
}

impl<T: Scalar> DensityGrid<T> {
    pub fn from_values(values: Vec<T>) -> Result<Self> {
        if values.len() < 2 {
            return invalid("density grid needs at least two points");
        }
        let k = values.len();
        let dtheta = (T::PI() + T::PI()) / T::from_count(k);
        let theta = (1..=k)
            .map(|j| -T::PI() + dtheta * T::from_count(j))
            .collect();
        Ok(Self {
            theta,
            values,
            dtheta,
        })
    }

    pub fn from_fn(k: usize, f: impl Fn(T) -> T) -> Self {
        let dtheta = (T::PI() + T::PI()) / T::from_count(k);
        let theta: Vec<T> = (1..=k)
            .map(|j| -T::PI() + dtheta * T::from_count(j))
            .collect();
        let values = theta.iter().map(|&t| f(t)).collect();
        Self {
            theta,
            values,
            dtheta,
        }
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn dtheta(&self) -> T {
        self.dtheta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ pⱼ Δθ`.
    pub fn mass(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.dtheta
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.len() == other.len()
            && (self.dtheta - other.dtheta).abs() <= self.dtheta * T::epsilon() * c(8.0)
    }

    /// Index of the grid point nearest to `theta`.
    pub fn nearest_index(&self, theta: Angle<T>) -> usize {
        let k = self.len();
        let j = ((theta.value() + T::PI()) / self.dtheta)
            .round()
            .to_usize()
            .unwrap_or(k);
        (j + k - 1) % k
    }

    /// Clips negative values to zero and rescales to unit mass; returns the
    /// clipped mass.
    pub fn clip_and_normalize(&mut self) -> T {
        let mut clipped = T::zero();
        for v in &mut self.values {
            if *v < T::zero() {
                clipped = clipped - *v;
                *v = T::zero();
            }
        }
        let mass = self.mass();
        if mass > T::zero() {
            for v in &mut self.values {
                *v = *v / mass;
            }
        }
        clipped * self.dtheta
    }
}

/// Per-solve bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub steps: usize,
    /// Largest `|mass - 1|` seen over all steps.
    pub max_mass_drift: f64,
    /// Largest negative mass removed from an emitted grid.
    pub max_clipped_mass: f64,
}

/// Threshold above which clipped negative mass is flagged in diagnostics.
pub const CLIP_TOLERANCE: f64 = 1e-8;

impl SolverDiagnostics {
    pub fn clipping_exceeded(&self) -> bool {
        self.max_clipped_mass > CLIP_TOLERANCE
    }
}

/// Time-marching state of the Crank–Nicolson scheme.
#[derive(Debug, Clone)]
pub struct CrankNicolson<T> {
    dt: T,
    time: T,
    state: Vec<T>,
    dtheta: T,
    // explicit half: (I + dt/2 L) as cyclic tridiagonal bands
    ex_sub: Vec<T>,
    ex_diag: Vec<T>,
    ex_sup: Vec<T>,
    solver: CyclicTridiagonal<T>,
    scratch: Vec<T>,
    diagnostics: SolverDiagnostics,
}

impl<T: Scalar> CrankNicolson<T> {
    /// Solver on `k` points with step `dt`, started from a point mass in the
    /// cell nearest `theta0`.
    pub fn new(params: &VonMisesParams<T>, theta0: Angle<T>, k: usize, dt: T) -> Result<Self> {
        if k < 16 {
            return invalid(format!("forward solver needs k >= 16 grid points, got {k}"));
        }
        if !(dt > T::zero()) || !dt.is_finite() {
            return invalid(format!("time step must be finite and > 0, got {dt}"));
        }
        let mut init = DensityGrid::from_fn(k, |_| T::zero());
        let dtheta = init.dtheta();
        let j0 = init.nearest_index(theta0);
        init.values[j0] = T::one() / dtheta;

        let diff = c::<T>(0.5) * params.sigma() * params.sigma() / (dtheta * dtheta);
        let adv: Vec<T> = init
            .theta()
            .iter()
            .map(|&th| params.lambda() * (th - params.mu().value()).sin() / (dtheta + dtheta))
            .collect();
        // L p_i = sub_i p_{i-1} + diag_i p_i + sup_i p_{i+1}
        let half = dt * c(0.5);
        let mut ex_sub = Vec::with_capacity(k);
        let mut ex_diag = Vec::with_capacity(k);
        let mut ex_sup = Vec::with_capacity(k);
        let mut im_sub = Vec::with_capacity(k);
        let mut im_diag = Vec::with_capacity(k);
        let mut im_sup = Vec::with_capacity(k);
        for i in 0..k {
            let sub = diff - adv[(i + k - 1) % k];
            let diag = -(diff + diff);
            let sup = diff + adv[(i + 1) % k];
            ex_sub.push(half * sub);
            ex_diag.push(T::one() + half * diag);
            ex_sup.push(half * sup);
            im_sub.push(-half * sub);
            im_diag.push(T::one() - half * diag);
            im_sup.push(-half * sup);
        }
        let solver = CyclicTridiagonal::new(im_sub, im_diag, im_sup)?;
        Ok(Self {
            dt,
            time: T::zero(),
            state: init.values,
            dtheta,
            ex_sub,
            ex_diag,
            ex_sup,
            solver,
            scratch: vec![T::zero(); k],
            diagnostics: SolverDiagnostics::default(),
        })
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn diagnostics(&self) -> SolverDiagnostics {
        self.diagnostics
    }

    /// Mass of the raw (unclipped) state.
    pub fn mass(&self) -> T {
        self.state.iter().copied().sum::<T>() * self.dtheta
    }

    pub fn step(&mut self) -> Result<()> {
        let k = self.state.len();
        for i in 0..k {
            let prev = self.state[(i + k - 1) % k];
            let next = self.state[(i + 1) % k];
            self.scratch[i] =
                self.ex_sub[i] * prev + self.ex_diag[i] * self.state[i] + self.ex_sup[i] * next;
        }
        self.solver.solve(&self.scratch, &mut self.state)?;
        self.time = self.time + self.dt;
        let drift = (self.mass() - T::one()).abs().to_f64_lossy();
        let d = &mut self.diagnostics;
        d.steps += 1;
        d.max_mass_drift = d.max_mass_drift.max(drift);
        if !drift.is_finite() {
            return Err(Error::SolverFailure(format!(
                "non-finite mass after {} steps",
                d.steps
            )));
        }
        Ok(())
    }

    /// The current density, clipped at zero and renormalized to unit mass.
    pub fn density(&mut self) -> DensityGrid<T> {
        let mut grid = DensityGrid::from_fn(self.state.len(), |_| T::zero());
        grid.values.copy_from_slice(&self.state);
        let clipped = grid.clip_and_normalize().to_f64_lossy();
        let d = &mut self.diagnostics;
        d.max_clipped_mass = d.max_clipped_mass.max(clipped);
        grid
    }
}

/// Solves the von Mises forward equation up to `horizon` in `m` equal steps
/// on `k` grid points, returning the density after every `every`-th step
/// (and always after the last one).
pub fn crank_nicolson_vmp<T: Scalar>(
    params: &VonMisesParams<T>,
    theta0: Angle<T>,
    horizon: T,
    k: usize,
    m: usize,
    every: usize,
) -> Result<(Vec<(T, DensityGrid<T>)>, SolverDiagnostics)> {
    check_horizon(horizon, m)?;
    let every = every.max(1);
    let mut cn = CrankNicolson::new(params, theta0, k, horizon / T::from_count(m))?;
    let mut out = Vec::new();
    for step in 1..=m {
        cn.step()?;
        if step % every == 0 || step == m {
            let t = horizon * T::from_count(step) / T::from_count(m);
            out.push((t, cn.density()));
        }
    }
    Ok((out, cn.diagnostics()))
}

fn check_horizon<T: Scalar>(horizon: T, m: usize) -> Result<()> {
    if m < 2 {
        return invalid(format!("forward solver needs m >= 2 time steps, got {m}"));
    }
    if !(horizon > T::zero()) || !horizon.is_finite() {
        return invalid(format!("horizon must be finite and > 0, got {horizon}"));
    }
    Ok(())
}

/// One row of a transition-density validation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow<T> {
    pub kappa: T,
    pub lambda: T,
    pub sigma: T,
    pub mu: T,
    pub t: T,
    pub hellinger: T,
}

/// Outcome for one parameter set: its rows, or the solver error.
#[derive(Debug, Clone)]
pub struct ValidationCell<T> {
    pub params: VonMisesParams<T>,
    pub result: Result<(Vec<ValidationRow<T>>, SolverDiagnostics)>,
}

/// Compares the analytic approximate density against the Crank–Nicolson
/// solution for every parameter set and time, in parallel across parameter
/// sets. The solver runs to `max(times)` in `m` steps; each time is matched to
/// its nearest step, and the analytic density is evaluated at that step's time.
pub fn validate_tpd<T: Scalar>(
    params_list: &[VonMisesParams<T>],
    theta0: Angle<T>,
    times: &[T],
    k: usize,
    m: usize,
) -> Result<Vec<ValidationCell<T>>> {
    if times.is_empty() {
        return invalid("validation needs at least one time");
    }
    if times.iter().any(|&t| !(t > T::zero()) || !t.is_finite()) {
        return invalid("validation times must be finite and > 0");
    }
    let horizon = times.iter().copied().fold(T::zero(), T::max);
    check_horizon(horizon, m)?;
    Ok(params_list
        .par_iter()
        .map(|p| ValidationCell {
            params: *p,
            result: validate_one(p, theta0, times, horizon, k, m),
        })
        .collect())
}

fn validate_one<T: Scalar>(
    params: &VonMisesParams<T>,
    theta0: Angle<T>,
    times: &[T],
    horizon: T,
    k: usize,
    m: usize,
) -> Result<(Vec<ValidationRow<T>>, SolverDiagnostics)> {
    let dt = horizon / T::from_count(m);
    let mut targets: Vec<(usize, usize)> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| ((t / dt).round().to_usize().unwrap_or(m).clamp(1, m), i))
        .collect();
    targets.sort_unstable();
    let mut cn = CrankNicolson::new(params, theta0, k, dt)?;
    let mut rows = vec![None; times.len()];
    let mut done = 0;
    for &(step, i) in &targets {
        while done < step {
            cn.step()?;
            done += 1;
        }
        let numeric = cn.density();
        let t = cn.time();
        let analytic = vmp_tpd_grid(theta0, t, params, k)?;
        rows[i] = Some(ValidationRow {
            kappa: params.kappa(),
            lambda: params.lambda(),
            sigma: params.sigma(),
            mu: params.mu().value(),
            t: times[i],
            hellinger: hellinger_discrete(&analytic, &numeric)?,
        });
    }
    Ok((rows.into_iter().flatten().collect(), cn.diagnostics()))
}

/// Cyclic tridiagonal system `sub_i x_{i-1} + diag_i x_i + sup_i x_{i+1} = r_i`
/// (indices mod k), factored once and solved by Thomas elimination plus a
/// Sherman–Morrison correction for the two corner entries.
#[derive(Debug, Clone)]
struct CyclicTridiagonal<T> {
    sub: Vec<T>,
    // forward-elimination multipliers and pivots of the corner-modified matrix
    c_prime: Vec<T>,
    pivot: Vec<T>,
    z: Vec<T>,
    corner_fact_den: T,
    beta: T,
    gamma: T,
}

impl<T: Scalar> CyclicTridiagonal<T> {
    fn new(sub: Vec<T>, diag: Vec<T>, sup: Vec<T>) -> Result<Self> {
        let k = diag.len();
        let beta = sub[0]; // A[0][k-1]
        let alpha = sup[k - 1]; // A[k-1][0]
        let gamma = -diag[0];
        let mut mdiag = diag.clone();
        mdiag[0] = diag[0] - gamma;
        mdiag[k - 1] = diag[k - 1] - alpha * beta / gamma;

        let mut c_prime = vec![T::zero(); k];
        let mut pivot = vec![T::zero(); k];
        pivot[0] = mdiag[0];
        for i in 0..k {
            if i > 0 {
                pivot[i] = mdiag[i] - sub[i] * c_prime[i - 1];
            }
            if pivot[i].abs() <= T::epsilon() * mdiag[i].abs().max(T::one())
                || !pivot[i].is_finite()
            {
                return Err(Error::SolverFailure(format!(
                    "zero pivot at row {i} of {k} (pivot {})",
                    pivot[i]
                )));
            }
            c_prime[i] = sup[i] / pivot[i];
        }
        let mut this = Self {
            sub,
            c_prime,
            pivot,
            z: vec![T::zero(); k],
            corner_fact_den: T::one(),
            beta,
            gamma,
        };
        let mut u = vec![T::zero(); k];
        u[0] = gamma;
        u[k - 1] = alpha;
        let mut z = vec![T::zero(); k];
        this.thomas(&u, &mut z);
        let den = T::one() + z[0] + beta * z[k - 1] / gamma;
        if den.abs() <= T::epsilon() {
            return Err(Error::SolverFailure(
                "singular Sherman–Morrison correction".into(),
            ));
        }
        this.z = z;
        this.corner_fact_den = den;
        Ok(this)
    }

    fn thomas(&self, rhs: &[T], x: &mut [T]) {
        let k = rhs.len();
        x[0] = rhs[0] / self.pivot[0];
        for i in 1..k {
            x[i] = (rhs[i] - self.sub[i] * x[i - 1]) / self.pivot[i];
        }
        for i in (0..k - 1).rev() {
            x[i] = x[i] - self.c_prime[i] * x[i + 1];
        }
    }

    fn solve(&self, rhs: &[T], x: &mut [T]) -> Result<()> {
        let k = rhs.len();
        self.thomas(rhs, x);
        let fact = (x[0] + self.beta * x[k - 1] / self.gamma) / self.corner_fact_den;
        for (xi, &zi) in x.iter_mut().zip(&self.z) {
            *xi = *xi - fact * zi;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolverFailure("non-finite solution".into()));
        }
        Ok(())
    }
}
