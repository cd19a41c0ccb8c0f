//! Synthetic finite populations with an informative size measure.
//!
//! Predictors are uniform on `(0,1)^d`. The response is
//! `y = 20 + 5 h(x) + σ e*`, where `e*` is a standardized right-skewed
//! (lognormal) error, and the size measure is `z = exp(s (ρ e + √(1−ρ²) η))`
//! with `e` the same underlying normal draw. `ρ` is calibrated on the
//! realized draws so that `Cor(y, z)` hits the requested target.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::FinitePopulation;
use crate::design::correlation;
use crate::error::{Error, Result};

const LEVEL: f64 = 20.0;
const SIGNAL: f64 = 5.0;
/// Half-width of the acceptable gap between realized and target correlation.
pub const COR_TOLERANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// `1[x₁ > 0.5] + 0.5·1[x₂ > 0.3]`
    Step,
    /// `sin(2π x₁) + 2 x₂² + x₃`
    Smooth,
    Constant,
}

impl Shape {
    pub fn as_str(self) -> &'static str {
        match self {
            Shape::Step => "step",
            Shape::Smooth => "smooth",
            Shape::Constant => "constant",
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        let at = |l: usize| x.get(l).copied();
        match self {
            Shape::Step => {
                let a = if x[0] > 0.5 { 1.0 } else { 0.0 };
                let b = at(1).map_or(0.0, |v| if v > 0.3 { 0.5 } else { 0.0 });
                a + b
            }
            Shape::Smooth => {
                (2.0 * std::f64::consts::PI * x[0]).sin()
                    + at(1).map_or(0.0, |v| 2.0 * v * v)
                    + at(2).unwrap_or(0.0)
            }
            Shape::Constant => 0.0,
        }
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step" => Ok(Shape::Step),
            "smooth" => Ok(Shape::Smooth),
            "constant" => Ok(Shape::Constant),
            other => Err(Error::Parameter(format!("unknown shape `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub n: usize,
    pub d: usize,
    pub shape: Shape,
    /// Standard deviation of the response error.
    pub noise_scale: f64,
    /// Target `Cor(y, z)`.
    pub target_cor: f64,
    /// Log-scale spread `s` of the size measure.
    pub size_dispersion: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            n: 7112,
            d: 3,
            shape: Shape::Step,
            noise_scale: 2.0,
            target_cor: 0.22,
            size_dispersion: 1.0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::Parameter("population needs N ≥ 1 and d ≥ 1".into()));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::Parameter(format!(
                "noise scale {} must be ≥ 0",
                self.noise_scale
            )));
        }
        if !(self.target_cor > -1.0 && self.target_cor < 1.0) {
            return Err(Error::Parameter(format!(
                "target correlation {} outside (-1, 1)",
                self.target_cor
            )));
        }
        if !(self.size_dispersion > 0.0 && self.size_dispersion.is_finite()) {
            return Err(Error::Parameter("size dispersion must be > 0".into()));
        }
        Ok(())
    }
}

/// Deterministic synthetic population for `(spec, seed)`.
pub fn synth_population(spec: &GeneratorSpec, seed: u64) -> Result<FinitePopulation> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let x: Vec<Vec<f64>> = (0..spec.d)
        .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
        .collect();
    let e: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let eta: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();

    // exp(e/2) has mean e^{1/8} and variance e^{1/4}(e^{1/4} − 1).
    let skew_mean = (0.125f64).exp();
    let skew_sd = ((0.25f64).exp() * ((0.25f64).exp() - 1.0)).sqrt();
    let mut row = vec![0.0; spec.d];
    let y: Vec<f64> = (0..n)
        .map(|i| {
            for (slot, col) in row.iter_mut().zip(&x) {
                *slot = col[i];
            }
            let err = ((0.5 * e[i]).exp() - skew_mean) / skew_sd;
            LEVEL + SIGNAL * spec.shape.eval(&row) + spec.noise_scale * err
        })
        .collect();

    let sizes = |rho: f64| -> Vec<f64> {
        let c = (1.0 - rho * rho).sqrt();
        e.iter()
            .zip(&eta)
            .map(|(a, b)| (spec.size_dispersion * (rho * a + c * b)).exp())
            .collect()
    };

    let z = if spec.target_cor == 0.0 {
        sizes(0.0)
    } else {
        // Cor(y, z(ρ)) increases with ρ; bisect on the realized draws.
        let (mut lo, mut hi) = (-0.999_f64, 0.999_f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if correlation(&y, &sizes(mid)) < spec.target_cor {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let z = sizes(0.5 * (lo + hi));
        let realized = correlation(&y, &z);
        if (realized - spec.target_cor).abs() > COR_TOLERANCE {
            return Err(Error::Parameter(format!(
                "target correlation {} not attainable (best {realized:.3}); raise the noise scale",
                spec.target_cor
            )));
        }
        z
    };
    FinitePopulation::new(y, x, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_and_determinism() {
        let spec = GeneratorSpec {
            n: 1000,
            ..GeneratorSpec::default()
        };
        let a = synth_population(&spec, 5).unwrap();
        assert_eq!(a.n(), 1000);
        assert_eq!(a.d(), 3);
        assert_eq!(a, synth_population(&spec, 5).unwrap());
        assert_ne!(a.y, synth_population(&spec, 6).unwrap().y);
        assert!(a.z.iter().all(|&v| v > 0.0));
        assert!(a.x.iter().flatten().all(|&v| (0.0..1.0).contains(&v)));
    }

    #[test]
    fn realized_correlation_near_target() {
        let spec = GeneratorSpec {
            n: 10_000,
            target_cor: 0.2,
            ..GeneratorSpec::default()
        };
        let pop = synth_population(&spec, 11).unwrap();
        let r = correlation(&pop.y, &pop.z);
        assert!((0.15..=0.25).contains(&r), "realized {r}");
    }

    #[test]
    fn constant_shape_without_noise_is_constant() {
        let spec = GeneratorSpec {
            n: 50,
            shape: Shape::Constant,
            noise_scale: 0.0,
            target_cor: 0.0,
            ..GeneratorSpec::default()
        };
        let pop = synth_population(&spec, 1).unwrap();
        assert!(pop.y.iter().all(|&v| v == LEVEL));
    }

    #[test]
    fn invalid_specs() {
        let base = GeneratorSpec::default();
        for bad in [
            GeneratorSpec { n: 0, ..base.clone() },
            GeneratorSpec { d: 0, ..base.clone() },
            GeneratorSpec { noise_scale: -1.0, ..base.clone() },
            GeneratorSpec { target_cor: 1.0, ..base.clone() },
        ] {
            assert!(synth_population(&bad, 0).is_err());
        }
        let unreachable = GeneratorSpec {
            n: 2000,
            noise_scale: 0.0,
            ..base
        };
        assert!(synth_population(&unreachable, 0).is_err());
        assert_eq!("smooth".parse::<Shape>().unwrap(), Shape::Smooth);
        assert!("wiggly".parse::<Shape>().is_err());
    }
}
