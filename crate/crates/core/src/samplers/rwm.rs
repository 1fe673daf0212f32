use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

/// One random-walk Metropolis step on log densities: propose `k + Δt η`
/// and accept with probability `min(1, π'/π)`.
/// Returns the new point, its log density and whether it moved.
pub fn rwm_step<R, F>(k: &DVector<f64>, log_pi: f64, dt: f64, rng: &mut R, log_post: F) -> (DVector<f64>, f64, bool)
where
    R: Rng + ?Sized,
    F: Fn(&DVector<f64>) -> f64,
{
    let prop = k + DVector::from_fn(k.len(), |_, _| rng.sample::<f64, _>(StandardNormal)) * dt;
    let lp = log_post(&prop);
    let r: f64 = rng.random();
    // reject when r > π'/π; a zero-density proposal has lp = −∞
    if lp.is_nan() || (lp - log_pi) < r.ln() {
        (k.clone(), log_pi, false)
    } else {
        (prop, lp, true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RwmRecord {
    pub samples: Vec<DVector<f64>>,
    pub accepted: usize,
    pub steps: usize,
}

pub fn run_rwm<R, F>(k0: &DVector<f64>, steps: usize, dt: f64, stride: usize, rng: &mut R, log_post: F) -> RwmRecord
where
    R: Rng + ?Sized,
    F: Fn(&DVector<f64>) -> f64,
{
    let mut k = k0.clone();
    let mut lp = log_post(&k);
    let mut rec = RwmRecord { samples: Vec::new(), accepted: 0, steps };
    for i in 1..=steps {
        let (nk, nlp, acc) = rwm_step(&k, lp, dt, rng, &log_post);
        k = nk;
        lp = nlp;
        rec.accepted += acc as usize;
        if i % stride.max(1) == 0 {
            rec.samples.push(k.clone());
        }
    }
    rec
}
