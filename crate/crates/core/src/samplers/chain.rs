use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::langevin::{draw_momentum, obabo_step, ChainState, LangevinConfig, RejectCause};
use crate::base::{ConstraintSystem, MassSpec, PotentialModel, RngStream};
use crate::error::{Error, Result};
use crate::linalg::{gauss_newton_solve, ConstraintFactors, GaussNewtonOptions};

/// Feasibility required of a starting point and audited on every record.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceStats {
    pub steps: usize,
    pub accepted: usize,
    pub constraint: usize,
    pub reversibility: usize,
    pub metropolis: usize,
}

impl AcceptanceStats {
    pub fn rate(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.accepted as f64 / self.steps as f64
        }
    }

    pub fn record(&mut self, accepted: bool, cause: Option<RejectCause>) {
        self.steps += 1;
        if accepted {
            self.accepted += 1;
        }
        match cause {
            Some(RejectCause::Constraint) => self.constraint += 1,
            Some(RejectCause::Reversibility) => self.reversibility += 1,
            Some(RejectCause::Metropolis) => self.metropolis += 1,
            None => {}
        }
    }

    pub fn merge(&mut self, other: &AcceptanceStats) {
        self.steps += other.steps;
        self.accepted += other.accepted;
        self.constraint += other.constraint;
        self.reversibility += other.reversibility;
        self.metropolis += other.metropolis;
    }
}

/// Subsampled output of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    pub columns: Vec<String>,
    pub samples: Vec<DVector<f64>>,
    /// Potential at each recorded sample.
    pub energies: Vec<f64>,
    pub accepted: Vec<bool>,
    pub causes: Vec<Option<RejectCause>>,
    pub stats: AcceptanceStats,
    /// Largest ‖c(q)‖∞ over the recorded samples.
    pub max_residual: f64,
    pub seed: u64,
    pub stream: u64,
}

impl ChainRecord {
    pub fn empty(columns: Vec<String>, seed: u64, stream: u64) -> Self {
        Self {
            columns,
            samples: Vec::new(),
            energies: Vec::new(),
            accepted: Vec::new(),
            causes: Vec::new(),
            stats: AcceptanceStats::default(),
            max_residual: 0.0,
            seed,
            stream,
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.stats.rate()
    }

    /// Values of one coordinate across the recorded samples.
    pub fn series(&self, index: usize) -> Vec<f64> {
        self.samples.iter().map(|q| q[index]).collect()
    }

    pub fn to_csv(&self) -> String {
        samples_to_csv(&self.columns, &self.samples)
    }

    pub fn summary(&self) -> ChainSummary {
        ChainSummary {
            seed: self.seed,
            stream: self.stream,
            acceptance_rate: self.acceptance_rate(),
            stats: self.stats.clone(),
            recorded: self.samples.len(),
            max_residual: self.max_residual,
        }
    }
}

/// Side-file content for one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub seed: u64,
    pub stream: u64,
    pub acceptance_rate: f64,
    pub stats: AcceptanceStats,
    pub recorded: usize,
    pub max_residual: f64,
}

pub fn samples_to_csv(columns: &[String], samples: &[DVector<f64>]) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for q in samples {
        let row: Vec<String> = q.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

/// Parses a header row and numeric rows; lines starting with `#` are skipped.
pub fn samples_from_csv(text: &str) -> Result<(Vec<String>, Vec<DVector<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("empty sample file".into()))?;
    let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {}: `{t}`: {e}", i + 1))))
            .collect::<Result<_>>()?;
        if vals.len() != columns.len() {
            return Err(Error::Parse(format!("row {} has {} fields, header has {}", i + 1, vals.len(), columns.len())));
        }
        rows.push(DVector::from_vec(vals));
    }
    Ok((columns, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChainOptions {
    /// Project an infeasible start onto the manifold with Gauss–Newton
    /// instead of failing.
    pub project_start: bool,
    /// Keep per-step accept flags and causes.
    pub keep_step_trace: bool,
}

/// Runs `steps` OBABO steps from `q0`, recording every `cfg.stride`-th state.
#[allow(clippy::too_many_arguments)]
pub fn run_chain(
    q0: &DVector<f64>,
    steps: usize,
    cfg: &LangevinConfig,
    c: &dyn ConstraintSystem,
    pot: &dyn PotentialModel,
    mass: &MassSpec,
    rng_stream: RngStream,
    opts: &ChainOptions,
) -> Result<ChainRecord> {
    cfg.validate()?;
    let mut record = ChainRecord::empty(c.layout().column_names(), rng_stream.seed, rng_stream.stream);
    let r0 = c.residual(q0).amax();
    let q0 = if r0 <= FEASIBILITY_TOL {
        q0.clone()
    } else if opts.project_start {
        gauss_newton_solve(c, q0, &GaussNewtonOptions::default())?.0
    } else {
        return Err(Error::InfeasibleStart(r0));
    };
    if steps == 0 {
        return Ok(record);
    }
    let mut rng = rng_stream.rng();
    let fac = ConstraintFactors::new(&c.jacobian(&q0), &q0, mass)?;
    let p0 = draw_momentum(&fac, cfg.temperature, &mut rng);
    let mut state = ChainState::new(q0, p0, c, pot, mass)?;
    for step in 1..=steps {
        let out = obabo_step(&mut state, cfg, c, pot, &mut rng);
        record.stats.record(out.accepted, out.cause);
        if opts.keep_step_trace {
            record.accepted.push(out.accepted);
            record.causes.push(out.cause);
        }
        if step % cfg.stride == 0 {
            record.max_residual = record.max_residual.max(c.residual(&state.q).amax());
            record.samples.push(state.q.clone());
            record.energies.push(state.u);
        }
    }
    Ok(record)
}

/// Counts of rejection causes keyed by name, for manifests.
pub fn cause_breakdown(stats: &AcceptanceStats) -> BTreeMap<String, usize> {
    [
        ("constraint".to_string(), stats.constraint),
        ("reversibility".to_string(), stats.reversibility),
        ("metropolis".to_string(), stats.metropolis),
    ]
    .into_iter()
    .collect()
}
