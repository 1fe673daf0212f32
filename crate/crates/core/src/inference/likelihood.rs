use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::preprocess::Template;
use crate::constraints::PeriodicOrbitConstraint;
use crate::error::{Error, Result};

pub const DEFAULT_SIGMA: f64 = 0.05;
pub const DEFAULT_SIGMA_TAU: f64 = 0.05;

/// Gaussian fit of `exp(y₀)` to averaged observations plus a Gaussian
/// penalty on the period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataLikelihood {
    /// Data phases in `[0, 1)` of one period.
    pub phases: Vec<f64>,
    pub values: Vec<f64>,
    pub sigma: f64,
    pub tau_data: f64,
    pub sigma_tau: f64,
}

impl DataLikelihood {
    pub fn new(phases: Vec<f64>, values: Vec<f64>, tau_data: f64) -> Result<Self> {
        let l = Self { phases, values, sigma: DEFAULT_SIGMA, tau_data, sigma_tau: DEFAULT_SIGMA_TAU };
        l.validate()?;
        Ok(l)
    }

    pub fn from_template(t: &Template) -> Result<Self> {
        if t.periods != 1 {
            return Err(Error::Config(format!("expected a one-period template, got {} periods", t.periods)));
        }
        Self::new(t.phases.clone(), t.values.clone(), t.tau_data)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma_tau > 0.0 && self.tau_data > 0.0) {
            return Err(Error::Config("likelihood needs σ > 0, σ_τ > 0 and τ_data > 0".into()));
        }
        if self.phases.len() != self.values.len() || self.values.is_empty() {
            return Err(Error::Config("phases and values must be nonempty and of equal length".into()));
        }
        if self.phases.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::Config("data phases must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// `−Σ (x̂ᵢ − xᵢ)²/2σ²` for model outputs `x̂`.
    pub fn sum_of_squares(&self, predicted: &[f64]) -> f64 {
        let s2 = 2.0 * self.sigma * self.sigma;
        -predicted.iter().zip(&self.values).map(|(p, x)| (p - x).powi(2)).sum::<f64>() / s2
    }
}

/// Log-likelihood of a periodic-orbit unknown vector and its gradient.
/// `x̂ᵢ = exp(y₀(sᵢ))` is read off the collocation polynomial.
pub fn log_likelihood_periodic(c: &PeriodicOrbitConstraint, q: &DVector<f64>, like: &DataLikelihood) -> (f64, DVector<f64>) {
    let mut grad = DVector::zeros(q.len());
    let s2 = like.sigma * like.sigma;
    let mut val = 0.0;
    for (&s, &x) in like.phases.iter().zip(&like.values) {
        let (y, dy) = c.eval_with_grad(q, s, 0);
        let xh = y.exp();
        let r = xh - x;
        val -= r * r / (2.0 * s2);
        let coef = -r * xh / s2;
        for (i, d) in dy {
            grad[i] += coef * d;
        }
    }
    let ti = c.tau_index();
    let dt = q[ti] - like.tau_data;
    let st2 = like.sigma_tau * like.sigma_tau;
    val -= dt * dt / (2.0 * st2);
    grad[ti] -= dt / st2;
    (val, grad)
}
