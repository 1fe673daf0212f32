use std::path::{Path, PathBuf};

use clangevin::inference::{BoxRestraint, DEFAULT_ARC_THRESHOLD};
use clangevin::models::{bundled_parameters, Repressilator, BUNDLED_K0, BUNDLED_K1, BUNDLED_N, BUNDLED_Y0};
use clangevin::samplers::{EnsembleConfig, LangevinConfig, OuCoefficients, SolveSettings};
use clangevin::VariableLayout;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Run configuration, read from TOML. Every field has a default, so an empty
/// file is a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub model: ModelSection,
    pub sampler: SamplerSection,
    pub prior: PriorSection,
    pub limit_cycle: LimitCycleSection,
    pub data: DataSection,
    pub ensemble: EnsembleSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub species: usize,
    /// Packed `(k0, k1, n)`; defaults to the bundled symmetric values.
    pub params: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub dt: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub steps: usize,
    pub stride: usize,
    pub chains: usize,
    pub metropolis: bool,
    pub eps_rev: f64,
    pub ou: OuCoefficients,
    pub solver_max_iter: usize,
    pub solver_tol: f64,
    pub broyden: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorSection {
    pub k_min: f64,
    pub k_max: f64,
    pub n_min: f64,
    pub n_max: f64,
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitCycleSection {
    pub n_mesh: usize,
    pub arc_threshold: f64,
    /// Hopf samples tried before falling back to the dataset parameters.
    pub max_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub walkers: Option<usize>,
    pub a: f64,
    pub sweeps: usize,
    pub stride: usize,
    /// Standard deviation of the walker cloud around the dataset parameters.
    pub init_spread: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: None,
            model: ModelSection::default(),
            sampler: SamplerSection::default(),
            prior: PriorSection::default(),
            limit_cycle: LimitCycleSection::default(),
            data: DataSection::default(),
            ensemble: EnsembleSection::default(),
        }
    }
}

impl Default for ModelSection {
    fn default() -> Self {
        Self { species: 3, params: None }
    }
}

impl Default for SamplerSection {
    fn default() -> Self {
        let l = LangevinConfig::default();
        Self {
            dt: l.dt,
            gamma: l.gamma,
            temperature: l.temperature,
            steps: 10_000,
            stride: l.stride,
            chains: 1,
            metropolis: l.metropolis,
            eps_rev: l.eps_rev,
            ou: l.ou,
            solver_max_iter: l.solve.max_iter,
            solver_tol: l.solve.tol,
            broyden: l.solve.broyden,
        }
    }
}

impl Default for PriorSection {
    fn default() -> Self {
        Self { k_min: -5.0, k_max: 5.0, n_min: 0.0, n_max: 10.0, coefficient: clangevin::inference::BOX_COEFFICIENT }
    }
}

impl Default for LimitCycleSection {
    fn default() -> Self {
        Self { n_mesh: 20, arc_threshold: DEFAULT_ARC_THRESHOLD, max_candidates: 20 }
    }
}

impl Default for EnsembleSection {
    fn default() -> Self {
        let e = EnsembleConfig::default();
        Self { walkers: e.walkers, a: e.a, sweeps: 1000, stride: e.stride, init_spread: 0.01 }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let cfg = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text)?
            }
        };
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.sampler;
        let mut bad = Vec::new();
        if self.model.species < 3 || self.model.species.is_multiple_of(2) {
            bad.push(format!("model.species must be odd and at least 3, got {}", self.model.species));
        }
        if let Some(p) = &self.model.params {
            let want = 3 * self.model.species - 1;
            if p.len() != want {
                bad.push(format!("model.params needs {want} values, got {}", p.len()));
            }
        }
        if !(s.dt > 0.0) || !(s.gamma >= 0.0) || !(s.temperature > 0.0) || !(s.eps_rev > 0.0) || !(s.solver_tol > 0.0) {
            bad.push("sampler: dt, temperature, eps_rev and solver_tol must be positive and gamma non-negative".into());
        }
        if s.stride == 0 || s.chains == 0 || s.solver_max_iter == 0 {
            bad.push("sampler: stride, chains and solver_max_iter must be positive".into());
        }
        let p = &self.prior;
        if !(p.k_min < p.k_max) || !(p.n_min < p.n_max) || !(p.coefficient > 0.0) {
            bad.push("prior: need k_min < k_max, n_min < n_max and a positive coefficient".into());
        }
        if self.limit_cycle.n_mesh < 2 || !(self.limit_cycle.arc_threshold > 0.0) {
            bad.push("limit_cycle: n_mesh ≥ 2 and a positive arc_threshold are required".into());
        }
        let e = &self.ensemble;
        if !(e.a > 1.0) || e.stride == 0 || !(e.init_spread >= 0.0) {
            bad.push("ensemble: need a > 1, stride > 0 and init_spread ≥ 0".into());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(bad.join("; ")))
        }
    }

    pub fn model(&self) -> Result<Repressilator, CliError> {
        Repressilator::new(self.model.species).map_err(CliError::from)
    }

    pub fn params(&self) -> Result<Vec<f64>, CliError> {
        match &self.model.params {
            Some(p) => Ok(p.clone()),
            None if self.model.species == 3 => Ok(bundled_parameters().as_slice().to_vec()),
            None => Ok(self.model()?.symmetric(BUNDLED_K0, BUNDLED_K1, BUNDLED_N).as_slice().to_vec()),
        }
    }

    pub fn langevin(&self) -> LangevinConfig {
        let s = &self.sampler;
        LangevinConfig {
            dt: s.dt,
            gamma: s.gamma,
            temperature: s.temperature,
            eps_rev: s.eps_rev,
            metropolis: s.metropolis,
            stride: s.stride,
            ou: s.ou,
            solve: SolveSettings { max_iter: s.solver_max_iter, tol: s.solver_tol, broyden: s.broyden },
        }
    }

    pub fn ensemble(&self) -> EnsembleConfig {
        let e = &self.ensemble;
        EnsembleConfig { walkers: e.walkers, a: e.a, seed: self.seed, stride: e.stride }
    }

    pub fn restraint(&self, layout: &VariableLayout) -> Result<BoxRestraint, CliError> {
        let p = &self.prior;
        let mut r = BoxRestraint::from_layout_with(layout, |b| match b {
            "k0" | "k1" => Some((p.k_min, p.k_max)),
            "n" => Some((p.n_min, p.n_max)),
            _ => None,
        })?;
        r.coefficient = p.coefficient;
        Ok(r)
    }

    /// FNV-1a 64 of the canonical JSON form of the effective configuration.
    pub fn checksum(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", fnv1a(text.as_bytes()))
    }
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Initial state for generated data: the bundled point on the three-species
/// cycle, else a unit kick on the first species.
pub fn default_y0(species: usize) -> Vec<f64> {
    if species == 3 {
        BUNDLED_Y0.to_vec()
    } else {
        let mut y = vec![0.0; species];
        y[0] = 1.0;
        y
    }
}
