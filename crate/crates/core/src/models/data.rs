use std::fmt::Write as _;

use nalgebra::DVector;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::repressilator::Repressilator;
use crate::base::{ModelOde, RngStream};
use crate::error::{Error, Result};
use crate::ode::{tsit5_integrate, IntegratorOptions};

/// Symmetric three-species parameters used for the bundled dataset:
/// `k_{j,0} = 2.32`, `k_{j,1} = 0`, `n_j = 3`. The fixed point loses
/// stability at `k_{j,0} ≈ 1.33`; at 2.32 the limit-cycle period is ≈ 4.99.
pub const BUNDLED_K0: f64 = 2.32;
pub const BUNDLED_K1: f64 = 0.0;
pub const BUNDLED_N: f64 = 3.0;
/// A state on the bundled limit cycle at the crest of `y₀`, so the bundled
/// data carry no transient.
pub const BUNDLED_Y0: [f64; 3] = [1.7255692602763588, 0.4192532706961121, -0.06996343554182746];
pub const DEFAULT_NOISE_VAR: f64 = 2.5e-3;
pub const DEFAULT_POINTS: usize = 100;
pub const DEFAULT_T_TOTAL: f64 = 30.0;

pub const BUNDLED_SEED: u64 = 20;

pub fn bundled_parameters() -> DVector<f64> {
    Repressilator::three().symmetric(BUNDLED_K0, BUNDLED_K1, BUNDLED_N)
}

/// The reference noisy dataset: bundled parameters and initial state,
/// default span, point count and noise, seed [`BUNDLED_SEED`].
pub fn bundled_dataset() -> Result<SimulatedDataset> {
    generate_data(
        &Repressilator::three(),
        bundled_parameters().as_slice(),
        &BUNDLED_Y0,
        DEFAULT_T_TOTAL,
        DEFAULT_POINTS,
        DEFAULT_NOISE_VAR,
        BUNDLED_SEED,
    )
}

/// Noisy observations of `exp(y₀)` at uniform times `tᵢ = i·T/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedDataset {
    pub species: usize,
    pub times: Vec<f64>,
    pub observations: Vec<f64>,
    pub noise_var: f64,
    pub t_total: f64,
    pub params: Vec<f64>,
    pub y0: Vec<f64>,
    pub seed: u64,
}

pub fn generate_data(
    model: &Repressilator,
    params: &[f64],
    y0: &[f64],
    t_total: f64,
    n_points: usize,
    noise_var: f64,
    seed: u64,
) -> Result<SimulatedDataset> {
    if n_points == 0 || !(t_total > 0.0) {
        return Err(Error::Config("need at least one point over a positive span".into()));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::Config("noise variance must be non-negative".into()));
    }
    let traj = tsit5_integrate(
        |_, y| model.rhs(y, params),
        &DVector::from_column_slice(y0),
        (0.0, t_total),
        &IntegratorOptions::with_tolerances(1e-10, 1e-12),
    )?;
    let times: Vec<f64> = (0..n_points).map(|i| i as f64 * t_total / n_points as f64).collect();
    let mut rng = RngStream::new(seed, 0).rng();
    let noise = Normal::new(0.0, noise_var.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    let observations = times
        .iter()
        .map(|&t| {
            let clean = traj.interpolate(t)[0].exp();
            if noise_var > 0.0 {
                clean + noise.sample(&mut rng)
            } else {
                clean
            }
        })
        .collect();
    Ok(SimulatedDataset {
        species: model.species(),
        times,
        observations,
        noise_var,
        t_total,
        params: params.to_vec(),
        y0: y0.to_vec(),
        seed,
    })
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("`{t}`: {e}"))))
        .collect()
}

impl SimulatedDataset {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# species = {}", self.species);
        let _ = writeln!(s, "# params = {}", join(&self.params));
        let _ = writeln!(s, "# y0 = {}", join(&self.y0));
        let _ = writeln!(s, "# seed = {}", self.seed);
        let _ = writeln!(s, "# noise_var = {:e}", self.noise_var);
        let _ = writeln!(s, "# t_total = {:e}", self.t_total);
        let _ = writeln!(s, "# points = {}", self.times.len());
        s.push_str("time,observation\n");
        for (t, x) in self.times.iter().zip(&self.observations) {
            let _ = writeln!(s, "{t:e},{x:e}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut ds = SimulatedDataset {
            species: 0,
            times: Vec::new(),
            observations: Vec::new(),
            noise_var: DEFAULT_NOISE_VAR,
            t_total: 0.0,
            params: Vec::new(),
            y0: Vec::new(),
            seed: 0,
        };
        let mut saw_header = false;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                let Some((k, v)) = meta.split_once('=') else { continue };
                let v = v.trim();
                let bad = |e: String| Error::Parse(format!("header `{}`: {e}", k.trim()));
                match k.trim() {
                    "species" => ds.species = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                    "params" => ds.params = parse_list(v)?,
                    "y0" => ds.y0 = parse_list(v)?,
                    "seed" => ds.seed = v.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                    "noise_var" => ds.noise_var = v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                    "t_total" => ds.t_total = v.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                    _ => {}
                }
                continue;
            }
            if !saw_header {
                saw_header = true;
                if line.starts_with("time") {
                    continue;
                }
            }
            let (t, x) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("expected `time,observation`, got `{line}`")))?;
            ds.times.push(t.trim().parse().map_err(|e| Error::Parse(format!("time `{t}`: {e}")))?);
            ds.observations.push(x.trim().parse().map_err(|e| Error::Parse(format!("value `{x}`: {e}")))?);
        }
        if ds.times.is_empty() {
            return Err(Error::Parse("dataset has no rows".into()));
        }
        if ds.t_total == 0.0 {
            let n = ds.times.len() as f64;
            ds.t_total = ds.times.last().unwrap() * n / (n - 1.0).max(1.0);
        }
        if ds.observations.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("non-finite observation".into()));
        }
        Ok(ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundled(noise: f64, seed: u64) -> SimulatedDataset {
        generate_data(
            &Repressilator::three(),
            bundled_parameters().as_slice(),
            &BUNDLED_Y0,
            DEFAULT_T_TOTAL,
            DEFAULT_POINTS,
            noise,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_data_equals_trajectory() {
        let ds = bundled(0.0, 1);
        let m = Repressilator::three();
        let p = bundled_parameters();
        let traj = tsit5_integrate(
            |_, y| m.rhs(y, p.as_slice()),
            &DVector::from_column_slice(&BUNDLED_Y0),
            (0.0, 30.0),
            &IntegratorOptions::with_tolerances(1e-10, 1e-12),
        )
        .unwrap();
        for (t, x) in ds.times.iter().zip(&ds.observations) {
            assert_eq!(*x, traj.interpolate(*t)[0].exp());
        }
        assert_eq!(ds.times.len(), 100);
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        assert_eq!(bundled(DEFAULT_NOISE_VAR, 9).to_csv(), bundled(DEFAULT_NOISE_VAR, 9).to_csv());
        assert_ne!(bundled(DEFAULT_NOISE_VAR, 9).observations, bundled(DEFAULT_NOISE_VAR, 10).observations);
    }

    #[test]
    fn csv_round_trips() {
        let ds = bundled(DEFAULT_NOISE_VAR, 4);
        let back = SimulatedDataset::from_csv(&ds.to_csv()).unwrap();
        assert_eq!(back, ds);
        assert!(SimulatedDataset::from_csv("time,observation\n").is_err());
    }
}
