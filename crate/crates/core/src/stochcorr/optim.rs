//! Derivative-free maximization under box constraints.
//!
//! Nelder–Mead with every trial point projected onto the box. After the
//! simplex collapses below the parameter tolerance it is rebuilt once around
//! the best vertex; the run stops only if the rebuilt simplex collapses again
//! without improvement. That restart guards against the classic false
//! convergence of the method on elongated valleys.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::{c, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfoOptions {
    /// Stop when every vertex lies within `xtol · max(1, |x|)` of the best one.
    pub xtol: f64,
    pub max_evals: usize,
    /// Initial simplex edge, relative to `max(1, |x0ᵢ|)`.
    pub initial_step: f64,
}

impl Default for DfoOptions {
    fn default() -> Self {
        Self {
            xtol: 1e-6,
            max_evals: 2000,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DfoStatus {
    Converged,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DfoResult<T> {
    pub x: Vec<T>,
    pub value: T,
    pub status: DfoStatus,
    pub evaluations: usize,
}

/// Per-coordinate box `[lower, upper]`; infinite ends are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Scalar> Bounds<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return invalid("bounds must be non-empty and of equal length");
        }
        if lower
            .iter()
            .zip(&upper)
            .any(|(l, u)| l.is_nan() || u.is_nan() || l > u)
        {
            return invalid("each lower bound must not exceed its upper bound");
        }
        Ok(Self { lower, upper })
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: vec![T::neg_infinity(); dim],
            upper: vec![T::infinity(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| v >= l && v <= u)
    }

    fn project(&self, x: &mut [T]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.max(*l).min(*u);
        }
    }
}

/// Maximize `objective` from `x0` inside `bounds`. NaN values count as `-∞`.
/// The best iterate is returned whether or not the run converged.
pub fn dfo_maximize<T: Scalar>(
    objective: impl FnMut(&[T]) -> T,
    x0: &[T],
    bounds: &Bounds<T>,
    opts: &DfoOptions,
) -> Result<DfoResult<T>> {
    if !bounds.contains(x0) {
        return invalid("starting point must lie within the bounds");
    }
    if !(opts.xtol > 0.0) || opts.max_evals == 0 || !(opts.initial_step > 0.0) {
        return invalid("optimizer options must be positive");
    }
    let mut f = Budget {
        objective,
        evals: 0,
        max: opts.max_evals,
    };
    let mut best_x = x0.to_vec();
    let mut best_v = f.call(x0).unwrap_or(T::neg_infinity());
    let mut restarted = false;
    let status = loop {
        let (x, v, converged) = nelder_mead(&mut f, &best_x, best_v, bounds, opts);
        let gain = v - best_v;
        best_x = x;
        best_v = v;
        if !converged {
            break DfoStatus::BudgetExhausted;
        }
        let scale = T::one().max(best_v.abs());
        if restarted && !(gain > scale * c(1e-12)) {
            break DfoStatus::Converged;
        }
        restarted = true;
    };
    Ok(DfoResult {
        x: best_x,
        value: best_v,
        status,
        evaluations: f.evals,
    })
}

struct Budget<F> {
    objective: F,
    evals: usize,
    max: usize,
}

impl<F> Budget<F> {
    /// `None` once the evaluation budget is spent.
    fn call<T: Scalar>(&mut self, x: &[T]) -> Option<T>
    where
        F: FnMut(&[T]) -> T,
    {
        if self.evals >= self.max {
            return None;
        }
        self.evals += 1;
        let v = (self.objective)(x);
        Some(if v.is_nan() { T::neg_infinity() } else { v })
    }
}

/// One Nelder–Mead run on `-f` (so it maximizes). Returns the best vertex,
/// its value and whether the simplex collapsed before the budget ran out.
fn nelder_mead<T: Scalar, F: FnMut(&[T]) -> T>(
    f: &mut Budget<F>,
    x0: &[T],
    v0: T,
    bounds: &Bounds<T>,
    opts: &DfoOptions,
) -> (Vec<T>, T, bool) {
    let n = x0.len();
    let (alpha, gamma, rho, shrink) = (T::one(), c::<T>(2.0), c::<T>(0.5), c::<T>(0.5));
    let mut simplex: Vec<(Vec<T>, T)> = vec![(x0.to_vec(), v0)];
    for i in 0..n {
        let mut x = x0.to_vec();
        let step = c::<T>(opts.initial_step) * T::one().max(x0[i].abs());
        // step inward when the upper side is too close
        x[i] = if x0[i] + step <= bounds.upper[i] {
            x0[i] + step
        } else {
            x0[i] - step
        };
        bounds.project(&mut x);
        let Some(v) = f.call(&x) else {
            return best_of(simplex, false);
        };
        simplex.push((x, v));
    }

    loop {
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        if collapsed(&simplex, opts.xtol) {
            return best_of(simplex, true);
        }
        let worst = simplex[n].1;
        let centroid: Vec<T> = (0..n)
            .map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<T>() / T::from_count(n))
            .collect();
        let toward = |t: T, from: &[T]| -> Vec<T> {
            let mut x: Vec<T> = centroid
                .iter()
                .zip(from)
                .map(|(&cj, &wj)| cj + t * (cj - wj))
                .collect();
            bounds.project(&mut x);
            x
        };
        let xr = toward(alpha, &simplex[n].0);
        let Some(vr) = f.call(&xr) else {
            return best_of(simplex, false);
        };
        if vr > simplex[0].1 {
            let xe = toward(gamma, &simplex[n].0);
            let Some(ve) = f.call(&xe) else {
                simplex[n] = (xr, vr);
                return best_of(simplex, false);
            };
            simplex[n] = if ve > vr { (xe, ve) } else { (xr, vr) };
            continue;
        }
        if vr > simplex[n - 1].1 {
            simplex[n] = (xr, vr);
            continue;
        }
        // contraction: outside if the reflection beat the worst vertex
        let outside = vr > worst;
        let xc = toward(if outside { rho } else { -rho }, &simplex[n].0);
        let Some(vc) = f.call(&xc) else {
            return best_of(simplex, false);
        };
        if (outside && vc >= vr) || (!outside && vc > worst) {
            simplex[n] = (xc, vc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut x: Vec<T> = best
                .iter()
                .zip(&vertex.0)
                .map(|(&b, &w)| b + shrink * (w - b))
                .collect();
            bounds.project(&mut x);
            let Some(v) = f.call(&x) else {
                return best_of(simplex, false);
            };
            *vertex = (x, v);
        }
    }
}

fn collapsed<T: Scalar>(simplex: &[(Vec<T>, T)], xtol: f64) -> bool {
    let best = &simplex[0].0;
    simplex[1..].iter().all(|(x, _)| {
        x.iter()
            .zip(best)
            .all(|(&a, &b)| (a - b).abs() <= c::<T>(xtol) * T::one().max(b.abs()))
    })
}

fn best_of<T: Scalar>(simplex: Vec<(Vec<T>, T)>, converged: bool) -> (Vec<T>, T, bool) {
    let (x, v) = simplex
        .into_iter()
        .fold(None::<(Vec<T>, T)>, |acc, (x, v)| match acc {
            Some((bx, bv)) if bv >= v => Some((bx, bv)),
            _ => Some((x, v)),
        })
        .expect("simplex is never empty");
    (x, v, converged)
}
