use serde::{Deserialize, Serialize};

use crate::circular::Angle;
use crate::error::{invalid, Error, Result};
use crate::scalar::{c, Scalar};

/// Mean direction `atan2(Σ sin θᵢ, Σ cos θᵢ)`.
pub fn circular_mean<T: Scalar>(sample: &[Angle<T>]) -> Result<Angle<T>> {
    if sample.is_empty() {
        return invalid("circular mean of an empty sample");
    }
    let (s, co) = sample.iter().fold((T::zero(), T::zero()), |(s, co), a| {
        (s + a.sin(), co + a.cos())
    });
    let n = T::from_count(sample.len());
    let resultant = (s * s + co * co).sqrt() / n;
    if resultant <= T::epsilon() * c(1e4) {
        return Err(Error::DegenerateMean);
    }
    Angle::new(s.atan2(co))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasConcentration<T> {
    /// `atan2(S, C)`, radians.
    pub bias: T,
    /// `√(S² + C²)`, in `[0, 1]`.
    pub concentration: T,
}

/// Circular bias and concentration of `estimates` around `mu_true`, with
/// `S = mean sin(μ - μ̂ₖ)` and `C = mean cos(μ - μ̂ₖ)`.
pub fn bias_and_concentration<T: Scalar>(
    mu_true: Angle<T>,
    estimates: &[Angle<T>],
) -> Result<BiasConcentration<T>> {
    if estimates.is_empty() {
        return invalid("bias/concentration needs at least one estimate");
    }
    let n = T::from_count(estimates.len());
    let (s, co) = estimates
        .iter()
        .fold((T::zero(), T::zero()), |(s, co), &e| {
            let d = (mu_true - e).value();
            (s + d.sin(), co + d.cos())
        });
    let (s, co) = (s / n, co / n);
    Ok(BiasConcentration {
        bias: s.atan2(co),
        concentration: (s * s + co * co).sqrt().min(T::one()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sample(xs: &[f64]) -> Vec<Angle<f64>> {
        xs.iter().map(|&x| Angle::new(x).unwrap()).collect()
    }

    #[test]
    fn mean_examples() {
        assert_eq!(
            circular_mean(&sample(&[0.0, 0.0, 0.0])).unwrap().value(),
            0.0
        );
        assert!(
            (circular_mean(&sample(&[PI / 2.0, PI / 2.0]))
                .unwrap()
                .value()
                - PI / 2.0)
                .abs()
                < 1e-15
        );
        assert_eq!(
            circular_mean(&sample(&[0.0, PI])),
            Err(Error::DegenerateMean)
        );
        assert!(circular_mean::<f64>(&[]).is_err());
        // across the cut
        let m = circular_mean(&sample(&[PI - 0.1, -PI + 0.1]))
            .unwrap()
            .value();
        assert!((m.abs() - PI).abs() < 1e-12);
    }

    #[test]
    fn bias_concentration_examples() {
        let mu = Angle::new(1.2f64).unwrap();
        let r = bias_and_concentration(mu, &[mu; 10]).unwrap();
        assert_eq!(r.bias, 0.0);
        assert!((r.concentration - 1.0).abs() < 1e-15);

        let spread: Vec<_> = (0..360)
            .map(|i| Angle::new(i as f64 * PI / 180.0).unwrap())
            .collect();
        let r = bias_and_concentration(mu, &spread).unwrap();
        assert!(r.concentration < 1e-12);

        // two estimates at ±0.2 around truth: zero bias, concentration cos(0.2)
        let r = bias_and_concentration(mu, &sample(&[1.0, 1.4])).unwrap();
        assert!(r.bias.abs() < 1e-12);
        assert!((r.concentration - 0.2f64.cos()).abs() < 1e-12);

        // estimates all 0.1 low: bias = μ - μ̂ = +0.1
        let r = bias_and_concentration(mu, &sample(&[1.1, 1.1])).unwrap();
        assert!((r.bias - 0.1).abs() < 1e-12);
    }
}
