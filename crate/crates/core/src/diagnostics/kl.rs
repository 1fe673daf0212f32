use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KlEstimate {
    /// `+∞` when `p̃₂` vanishes at any sample.
    pub value: f64,
    pub samples: usize,
    /// Samples at which `p̃₂ = 0`.
    pub zero_density: usize,
    /// `E log C_N ≤ log E C_N` (Jensen), so at finite `N` the estimate is
    /// biased low when both densities share a support.
    pub biased_downward: bool,
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log((1/n) Σ exp xᵢ)`; exact when all `xᵢ` are equal.
fn log_mean_exp(xs: impl Iterator<Item = f64> + Clone, n: usize) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    m + (xs.map(|x| (x - m).exp()).sum::<f64>() / n as f64).ln()
}

/// `D̂ = mean log(p̃₁/p̃₂) + log C_N` with `C_N = (1/N) Σ p̃₂/p̃₁`, from log
/// unnormalized densities at samples drawn from `p₁`. `C_N` estimates
/// `Z₂/Z₁`, which cancels the normalizing constants in the first term.
pub fn kl_from_log_densities(log_p1: &[f64], log_p2: &[f64]) -> Result<KlEstimate> {
    let n = log_p1.len();
    if n == 0 || n != log_p2.len() {
        return Err(Error::Config("need equally many nonzero log densities".into()));
    }
    if let Some(i) = log_p1.iter().position(|l| !(l.is_finite())) {
        return Err(Error::ZeroDensity(i));
    }
    let zero = log_p2.iter().filter(|l| *l == &f64::NEG_INFINITY).count();
    if zero > 0 {
        return Ok(KlEstimate { value: f64::INFINITY, samples: n, zero_density: zero, biased_downward: true });
    }
    if log_p2.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
        return Err(Error::Config("log p2 must be finite or −∞".into()));
    }
    let diffs = log_p1.iter().zip(log_p2).map(|(a, b)| a - b);
    let mean = diffs.clone().sum::<f64>() / n as f64;
    let log_c = log_mean_exp(diffs.map(|d| -d), n);
    Ok(KlEstimate { value: mean + log_c, samples: n, zero_density: 0, biased_downward: true })
}

/// KL estimate from samples of `p₁` and log unnormalized densities.
pub fn kl_estimate<F1, F2>(samples: &[DVector<f64>], log_p1: F1, log_p2: F2) -> Result<KlEstimate>
where
    F1: Fn(&DVector<f64>) -> f64,
    F2: Fn(&DVector<f64>) -> f64,
{
    let a: Vec<f64> = samples.iter().map(&log_p1).collect();
    let b: Vec<f64> = samples.iter().map(&log_p2).collect();
    kl_from_log_densities(&a, &b)
}

/// Product Gaussian kernel density with Scott's per-coordinate bandwidth.
#[derive(Debug, Clone)]
pub struct GaussianKde {
    points: Vec<DVector<f64>>,
    bandwidth: DVector<f64>,
    log_norm: f64,
}

impl GaussianKde {
    pub fn new(points: Vec<DVector<f64>>) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(Error::Config("kernel density needs at least two points".into()));
        }
        let d = points[0].len();
        let mean = points.iter().fold(DVector::zeros(d), |m, x| m + x) / n as f64;
        let var = points.iter().fold(DVector::zeros(d), |v: DVector<f64>, x| v + (x - &mean).map(|e| e * e)) / (n as f64 - 1.0);
        let factor = (n as f64).powf(-1.0 / (d as f64 + 4.0));
        let bandwidth = var.map(|v| v.sqrt() * factor);
        if bandwidth.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::DegenerateSeries);
        }
        let log_norm = -(n as f64).ln()
            - bandwidth.iter().map(|h| h.ln()).sum::<f64>()
            - 0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln();
        Ok(Self { points, bandwidth, log_norm })
    }

    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        let terms = self.points.iter().map(|p| {
            -0.5 * p.iter().zip(x.iter()).zip(self.bandwidth.iter()).map(|((a, b), h)| ((a - b) / h).powi(2)).sum::<f64>()
        });
        log_sum_exp(terms) + self.log_norm
    }
}
