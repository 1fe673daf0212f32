use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::ess::ess;
use super::kl::KlEstimate;
use super::rhat::gelman_rubin;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEss {
    pub name: String,
    /// ESS summed over chains; `None` for a constant column.
    pub ess: Option<f64>,
    pub ess_per_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub chains: usize,
    pub samples_per_chain: Vec<usize>,
    /// Sampler steps between recorded samples.
    pub stride: usize,
    pub parameters: Vec<ParameterEss>,
    pub average_ess_per_step: Option<f64>,
    pub minimum_ess_per_step: Option<f64>,
    /// Present with two or more chains.
    pub rhat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kl: Option<KlEstimate>,
}

/// ESS per parameter and chain, summed over chains and divided by the total
/// number of sampler steps `Σ N_c · stride`; R̂ over chains truncated to the
/// shortest.
pub fn build_report(names: &[String], chains: &[Vec<DVector<f64>>], stride: usize) -> Result<DiagnosticsReport> {
    if chains.is_empty() || chains.iter().any(|c| c.is_empty()) {
        return Err(Error::Config("need at least one nonempty chain".into()));
    }
    if chains.iter().flatten().any(|q| q.len() != names.len()) {
        return Err(Error::Config(format!("samples do not match the {} named columns", names.len())));
    }
    let stride = stride.max(1);
    let steps: usize = chains.iter().map(|c| c.len() * stride).sum();
    let mut parameters = Vec::with_capacity(names.len());
    for (j, name) in names.iter().enumerate() {
        let mut total = Some(0.0);
        for c in chains {
            let series: Vec<f64> = c.iter().map(|q| q[j]).collect();
            total = match (total, ess(&series)) {
                (Some(t), Ok(e)) => Some(t + e),
                (_, Err(Error::DegenerateSeries)) | (None, _) => None,
                (_, Err(e)) => return Err(e),
            };
        }
        parameters.push(ParameterEss { name: name.clone(), ess: total, ess_per_step: total.map(|e| e / steps as f64) });
    }
    let rates: Vec<f64> = parameters.iter().filter_map(|p| p.ess_per_step).collect();
    let average = (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64);
    let minimum = rates.iter().cloned().reduce(f64::min);
    let rhat = if chains.len() >= 2 {
        let n = chains.iter().map(Vec::len).min().unwrap_or(0);
        // constant columns carry no information and would make Σ_a singular
        let live: Vec<usize> = (0..names.len()).filter(|&j| parameters[j].ess.is_some()).collect();
        let cut: Vec<Vec<DVector<f64>>> = chains
            .iter()
            .map(|c| c[..n].iter().map(|q| DVector::from_iterator(live.len(), live.iter().map(|&j| q[j]))).collect())
            .collect();
        Some(gelman_rubin(&cut)?)
    } else {
        None
    };
    Ok(DiagnosticsReport {
        chains: chains.len(),
        samples_per_chain: chains.iter().map(Vec::len).collect(),
        stride,
        parameters,
        average_ess_per_step: average,
        minimum_ess_per_step: minimum,
        rhat,
        kl: None,
    })
}
