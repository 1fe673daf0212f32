//! Adaptive time integrators: Tsitouras 5(4) for non-stiff problems and
//! three-stage Radau IIA for stiff ones, both with cubic Hermite dense output.

mod radau;
mod tsit5;

pub use radau::radau5_integrate;
pub use tsit5::tsit5_integrate;

use nalgebra::DVector;

use crate::error::OdeError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    /// Take uniform steps of this size without error control.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
    pub safety: f64,
    pub min_factor: f64,
    pub max_factor: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-9,
            h0: None,
            fixed_step: None,
            max_steps: 1_000_000,
            safety: 0.9,
            min_factor: 0.2,
            max_factor: 5.0,
        }
    }
}

impl IntegratorOptions {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Default::default() }
    }

    pub fn fixed(h: f64) -> Self {
        Self { fixed_step: Some(h), ..Default::default() }
    }

    fn validate(&self, t0: f64, t1: f64) -> Result<(), OdeError> {
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(OdeError::Invalid(format!("empty or non-finite span [{t0}, {t1}]")));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(OdeError::Invalid("tolerances must be positive".into()));
        }
        if let Some(h) = self.fixed_step {
            if !(h > 0.0) {
                return Err(OdeError::Invalid("fixed step must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Accepted steps of an integration, with derivatives for Hermite
/// interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationResult {
    pub t: Vec<f64>,
    pub y: Vec<DVector<f64>>,
    pub dy: Vec<DVector<f64>>,
    pub accepted: usize,
    pub rejected: usize,
}

impl IntegrationResult {
    fn start(t0: f64, y0: DVector<f64>, f0: DVector<f64>) -> Self {
        Self { t: vec![t0], y: vec![y0], dy: vec![f0], accepted: 0, rejected: 0 }
    }

    fn push(&mut self, t: f64, y: DVector<f64>, dy: DVector<f64>) {
        self.t.push(t);
        self.y.push(y);
        self.dy.push(dy);
        self.accepted += 1;
    }

    pub fn final_state(&self) -> &DVector<f64> {
        self.y.last().expect("at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.t.last().expect("at least the initial time")
    }

    /// Cubic Hermite interpolation; `t` is clamped to the integrated span.
    pub fn interpolate(&self, t: f64) -> DVector<f64> {
        let n = self.t.len();
        if n == 1 || t <= self.t[0] {
            return self.y[0].clone();
        }
        if t >= self.t[n - 1] {
            return self.y[n - 1].clone();
        }
        let i = self.t.partition_point(|&s| s <= t) - 1;
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        &self.y[i] * h00 + &self.dy[i] * (h10 * h) + &self.y[i + 1] * h01 + &self.dy[i + 1] * (h11 * h)
    }

    pub fn sample(&self, times: &[f64]) -> Vec<DVector<f64>> {
        times.iter().map(|&t| self.interpolate(t)).collect()
    }
}

fn error_norm(err: &DVector<f64>, y0: &DVector<f64>, y1: &DVector<f64>, rtol: f64, atol: f64) -> f64 {
    let n = err.len().max(1) as f64;
    let s: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let sc = atol + rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (s / n).sqrt()
}

fn check_finite(y: &DVector<f64>, t: f64) -> Result<(), OdeError> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(OdeError::NonFinite { t })
    }
}

/// Starting step from the local Lipschitz estimate and an explicit Euler probe.
fn initial_step<F>(f: &F, t0: f64, y0: &DVector<f64>, f0: &DVector<f64>, order: i32, span: f64, opts: &IntegratorOptions) -> f64
where
    F: Fn(f64, &[f64]) -> DVector<f64>,
{
    let z = DVector::zeros(y0.len());
    let d0 = error_norm(y0, y0, &z, opts.rtol, opts.atol);
    let d1 = error_norm(f0, y0, &z, opts.rtol, opts.atol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1 = y0 + f0 * h0;
    let f1 = f(t0 + h0, y1.as_slice());
    let d2 = error_norm(&(f1 - f0), y0, &z, opts.rtol, opts.atol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / (order as f64 + 1.0))
    };
    (100.0 * h0).min(h1).min(span)
}
