use serde::{Deserialize, Serialize};

use crate::circular::Angle;
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// A discretely observed angle series with strictly increasing time stamps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularPath<T> {
    times: Vec<T>,
    angles: Vec<Angle<T>>,
}

impl<T: Scalar> AngularPath<T> {
    pub fn new(times: Vec<T>, angles: Vec<Angle<T>>) -> Result<Self> {
        if times.len() != angles.len() {
            return invalid(format!(
                "path has {} times but {} angles",
                times.len(),
                angles.len()
            ));
        }
        if times.len() < 2 {
            return invalid("path needs at least two observations");
        }
        if let Some(i) = times
            .windows(2)
            .position(|w| !(w[1] > w[0]) || !w[1].is_finite() || !w[0].is_finite())
        {
            return invalid(format!(
                "times must be finite and strictly increasing (index {})",
                i + 1
            ));
        }
        Ok(Self { times, angles })
    }

    /// Observations at `t₀, t₀ + dt, …`.
    pub fn uniform(start: T, dt: T, angles: Vec<Angle<T>>) -> Result<Self> {
        let times = (0..angles.len())
            .map(|i| start + dt * T::from_count(i))
            .collect();
        Self::new(times, angles)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn angles(&self) -> &[Angle<T>] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `t_n - t_1`.
    pub fn duration(&self) -> T {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Consecutive `(Δt, θ_from, θ_to)` triples.
    pub fn transitions(&self) -> impl Iterator<Item = (T, Angle<T>, Angle<T>)> + '_ {
        self.times
            .windows(2)
            .zip(self.angles.windows(2))
            .map(|(t, a)| (t[1] - t[0], a[0], a[1]))
    }

    /// Observations `start..end` as a new path.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return invalid(format!(
                "bad slice {start}..{end} of a {}-point path",
                self.len()
            ));
        }
        Self::new(
            self.times[start..end].to_vec(),
            self.angles[start..end].to_vec(),
        )
    }

    /// The same path with every angle replaced by `f(angle)`.
    pub fn map_angles(&self, f: impl Fn(Angle<T>) -> Angle<T>) -> Self {
        Self {
            times: self.times.clone(),
            angles: self.angles.iter().map(|&a| f(a)).collect(),
        }
    }
}
