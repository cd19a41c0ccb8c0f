use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaForm {
    /// `γ(n) = scale · ln(1 + n)`
    Log,
    /// `γ(n) = scale · n^(α − ε − 1/2)`
    Power,
}

/// Multiplier applied to the trimming rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GammaScale {
    /// Chosen from the data at fit time so the cutoff equals the weighted
    /// 99th percentile of `|y|` at the fitted sample size.
    Auto,
    /// A fixed multiplier; `f64::INFINITY` disables trimming.
    Value(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub gamma_form: GammaForm,
    pub gamma_scale: GammaScale,
}

impl Default for RateParams {
    fn default() -> Self {
        RateParams {
            alpha: 0.6,
            epsilon: 0.05,
            gamma_form: GammaForm::Log,
            gamma_scale: GammaScale::Auto,
        }
    }
}

/// Realized rates at one sample size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateValues {
    /// Minimum occupancy `⌈n^α⌉`.
    pub k: usize,
    /// Trimming cutoff, possibly infinite.
    pub gamma: f64,
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.5 && self.alpha < 1.0) {
            return Err(Error::Parameter(format!(
                "alpha = {} must lie strictly between 1/2 and 1",
                self.alpha
            )));
        }
        if self.gamma_form == GammaForm::Power
            && !(self.epsilon > 0.0 && self.epsilon < self.alpha - 0.5)
        {
            return Err(Error::Parameter(format!(
                "epsilon = {} must lie strictly between 0 and alpha - 1/2 = {}",
                self.epsilon,
                self.alpha - 0.5
            )));
        }
        if let GammaScale::Value(s) = self.gamma_scale {
            if s.is_nan() || s <= 0.0 {
                return Err(Error::Parameter(format!("gamma scale {s} must be > 0")));
            }
        }
        Ok(())
    }

    /// Growth of the trimming cutoff without its scale factor.
    pub fn gamma_base(&self, n: usize) -> f64 {
        let n = n as f64;
        match self.gamma_form {
            GammaForm::Log => (1.0 + n).ln(),
            GammaForm::Power => n.powf(self.alpha - self.epsilon - 0.5),
        }
    }

    /// Replaces an automatic scale with `target / gamma_base(n)`, so the
    /// realized cutoff at `n` equals `target`.
    pub fn resolve_scale(&self, n: usize, target: f64) -> RateParams {
        let mut out = *self;
        if self.gamma_scale == GammaScale::Auto {
            out.gamma_scale = GammaScale::Value(target / self.gamma_base(n));
        }
        out
    }
}

/// `⌈n^α⌉`, snapping values within rounding noise of an integer.
pub fn occupancy(alpha: f64, n: usize) -> usize {
    let v = (n as f64).powf(alpha);
    let r = v.round();
    let k = if (v - r).abs() <= 1e-9 * r.max(1.0) { r } else { v.ceil() };
    (k as usize).max(1)
}

/// `k = ⌈n^α⌉` and the trimming cutoff `γ` at sample size `n`.
pub fn rate_values(rates: &RateParams, n: usize) -> Result<RateValues> {
    rates.validate()?;
    if n == 0 {
        return Err(Error::Parameter("sample size must be at least 1".into()));
    }
    let scale = match rates.gamma_scale {
        GammaScale::Value(s) => s,
        GammaScale::Auto => {
            return Err(Error::Parameter(
                "automatic gamma scale must be resolved against data first".into(),
            ))
        }
    };
    let gamma = if scale.is_infinite() {
        f64::INFINITY
    } else {
        scale * rates.gamma_base(n)
    };
    Ok(RateValues {
        k: occupancy(rates.alpha, n),
        gamma,
    })
}
