use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    /// `None` picks `max(2·dim, 16)`.
    pub walkers: Option<usize>,
    pub a: f64,
    pub seed: u64,
    /// Record walker positions every `stride` sweeps.
    pub stride: usize,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self { walkers: None, a: 1.5, seed: 0, stride: 1 }
    }
}

impl EnsembleConfig {
    pub fn walker_count(&self, dim: usize) -> usize {
        self.walkers.unwrap_or((2 * dim).max(16))
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.a > 1.0) {
            return Err(Error::Config(format!("stretch parameter must exceed 1, got {}", self.a)));
        }
        if self.walker_count(dim) < 2 * dim {
            return Err(Error::Config(format!("need at least {} walkers for dimension {dim}", 2 * dim)));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be positive".into()));
        }
        Ok(())
    }
}

/// Draw from `g(z) ∝ z^{−1/2}` on `[1/a, a]` by inverting its CDF.
pub fn sample_stretch<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    let s = a.sqrt();
    (u * (s - 1.0 / s) + 1.0 / s).powi(2)
}

/// Updates each walker once, in order, with the stretch move
/// `x' = x_k + Z (x_j − x_k)`, accepting with probability
/// `min(1, Z^{N−1} π(x')/π(x_j))`. Returns the number of accepted moves.
pub fn stretch_move_sweep<R, F>(walkers: &mut [DVector<f64>], log_probs: &mut [f64], log_post: F, a: f64, rng: &mut R) -> usize
where
    R: Rng + ?Sized,
    F: Fn(&DVector<f64>) -> f64,
{
    let n = walkers.len();
    assert!(n >= 2, "stretch moves need at least two walkers");
    let mut accepted = 0;
    for j in 0..n {
        accepted += stretch_move(walkers, log_probs, j, &log_post, a, rng) as usize;
    }
    accepted
}

/// Single-walker stretch update of walker `j`.
pub fn stretch_move<R, F>(walkers: &mut [DVector<f64>], log_probs: &mut [f64], j: usize, log_post: &F, a: f64, rng: &mut R) -> bool
where
    R: Rng + ?Sized,
    F: Fn(&DVector<f64>) -> f64,
{
    let n = walkers.len();
    let mut k = rng.random_range(0..n - 1);
    if k >= j {
        k += 1;
    }
    let z = sample_stretch(a, rng);
    let dim = walkers[j].len();
    let prop = &walkers[k] + (&walkers[j] - &walkers[k]) * z;
    let lp = log_post(&prop);
    let log_ratio = (dim as f64 - 1.0) * z.ln() + lp - log_probs[j];
    let u: f64 = rng.random();
    if lp.is_finite() && u.ln() < log_ratio {
        walkers[j] = prop;
        log_probs[j] = lp;
        true
    } else {
        false
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleRecord {
    /// `chains[w]` holds walker `w`'s recorded positions.
    pub chains: Vec<Vec<DVector<f64>>>,
    pub accepted: usize,
    /// Single-walker updates performed.
    pub steps: usize,
}

impl EnsembleRecord {
    pub fn acceptance_rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }
}

/// Runs `sweeps` sequential sweeps. Each sweep performs one update per walker.
pub fn run_ensemble<R, F>(init: Vec<DVector<f64>>, sweeps: usize, cfg: &EnsembleConfig, log_post: F, rng: &mut R) -> Result<EnsembleRecord>
where
    R: Rng + ?Sized,
    F: Fn(&DVector<f64>) -> f64,
{
    if init.len() < 2 {
        return Err(Error::Config("need at least two walkers".into()));
    }
    if !(cfg.a > 1.0) || cfg.stride == 0 {
        return Err(Error::Config(format!("invalid ensemble settings {cfg:?}")));
    }
    let mut walkers = init;
    let mut lps: Vec<f64> = walkers.iter().map(&log_post).collect();
    if let Some(i) = lps.iter().position(|v| !v.is_finite()) {
        return Err(Error::Config(format!("walker {i} starts at zero posterior density")));
    }
    let mut rec = EnsembleRecord { chains: vec![Vec::new(); walkers.len()], accepted: 0, steps: 0 };
    for s in 1..=sweeps {
        rec.accepted += stretch_move_sweep(&mut walkers, &mut lps, &log_post, cfg.a, rng);
        rec.steps += walkers.len();
        if s % cfg.stride == 0 {
            for (c, w) in rec.chains.iter_mut().zip(&walkers) {
                c.push(w.clone());
            }
        }
    }
    Ok(rec)
}
