use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::base::VariableLayout;
use crate::error::{Error, Result};

pub const BOX_COEFFICIENT: f64 = 100.0;
pub const DEFAULT_ARC_THRESHOLD: f64 = 0.3;

/// Default bounds per repressilator parameter block.
pub fn default_block_bounds(block: &str) -> Option<(f64, f64)> {
    match block {
        "k0" | "k1" => Some((-5.0, 5.0)),
        "n" => Some((0.0, 10.0)),
        _ => None,
    }
}

/// Half-quadratic walls `c (x − max)²` above `max` and `c (min − x)²` below
/// `min`, as a potential (negative log prior).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRestraint {
    pub indices: Vec<usize>,
    pub bounds: Vec<(f64, f64)>,
    pub coefficient: f64,
}

impl BoxRestraint {
    pub fn new(indices: Vec<usize>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if indices.len() != bounds.len() {
            return Err(Error::Config(format!("{} indices but {} bounds", indices.len(), bounds.len())));
        }
        if let Some((lo, hi)) = bounds.iter().find(|(lo, hi)| !(lo < hi)) {
            return Err(Error::Config(format!("empty box [{lo}, {hi}]")));
        }
        Ok(Self { indices, bounds, coefficient: BOX_COEFFICIENT })
    }

    /// Restraint over every layout block with default bounds.
    pub fn from_layout(layout: &VariableLayout) -> Result<Self> {
        Self::from_layout_with(layout, default_block_bounds)
    }

    /// Restraint over every block for which `bounds_of` returns bounds.
    pub fn from_layout_with<F>(layout: &VariableLayout, bounds_of: F) -> Result<Self>
    where
        F: Fn(&str) -> Option<(f64, f64)>,
    {
        let (mut idx, mut b) = (Vec::new(), Vec::new());
        for (name, _) in layout.blocks() {
            if let Some(bb) = bounds_of(name) {
                for i in layout.range(name)? {
                    idx.push(i);
                    b.push(bb);
                }
            }
        }
        Self::new(idx, b)
    }

    pub fn value(&self, q: &DVector<f64>) -> f64 {
        self.indices.iter().zip(&self.bounds).map(|(&i, &(lo, hi))| self.coefficient * excess(q[i], lo, hi).powi(2)).sum()
    }

    /// Adds the gradient into `grad` and returns the value.
    pub fn accumulate(&self, q: &DVector<f64>, grad: &mut DVector<f64>) -> f64 {
        let mut v = 0.0;
        for (&i, &(lo, hi)) in self.indices.iter().zip(&self.bounds) {
            let e = excess(q[i], lo, hi);
            v += self.coefficient * e * e;
            grad[i] += 2.0 * self.coefficient * e;
        }
        v
    }

    pub fn contains(&self, q: &DVector<f64>) -> bool {
        self.indices.iter().zip(&self.bounds).all(|(&i, &(lo, hi))| q[i] >= lo && q[i] <= hi)
    }
}

/// Signed distance outside `[lo, hi]`, zero inside.
fn excess(x: f64, lo: f64, hi: f64) -> f64 {
    if x > hi {
        x - hi
    } else if x < lo {
        x - lo
    } else {
        0.0
    }
}

/// `u⁴ − u² + ¼` with `u = L₀/(L√2)` for `L < L₀`, zero otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcLengthPenalty {
    pub threshold: f64,
}

impl Default for ArcLengthPenalty {
    fn default() -> Self {
        Self { threshold: DEFAULT_ARC_THRESHOLD }
    }
}

impl ArcLengthPenalty {
    pub fn value(&self, l: f64) -> f64 {
        self.value_and_derivative(l).0
    }

    pub fn value_and_derivative(&self, l: f64) -> (f64, f64) {
        if l >= self.threshold {
            return (0.0, 0.0);
        }
        if !(l > 0.0) {
            return (f64::INFINITY, f64::NEG_INFINITY);
        }
        let u = self.threshold / (l * std::f64::consts::SQRT_2);
        let u2 = u * u;
        let v = u2 * u2 - u2 + 0.25;
        // du/dL = −u/L
        let dv = (4.0 * u2 * u - 2.0 * u) * (-u / l);
        (v, dv)
    }
}
