use std::sync::Arc;

use nalgebra::DVector;

use super::likelihood::{log_likelihood_periodic, DataLikelihood, DEFAULT_SIGMA};
use super::preprocess::Template;
use super::prior::{default_block_bounds, ArcLengthPenalty, BoxRestraint};
use crate::base::{ModelOde, PotentialModel, VariableLayout};
use crate::constraints::PeriodicOrbitConstraint;
use crate::error::{Error, Result};
use crate::ode::{tsit5_integrate, IntegratorOptions};

/// Negative log prior of a constrained mode: box walls on the parameters and,
/// on periodic orbits, the arc-length penalty.
pub fn log_prior(
    q: &DVector<f64>,
    restraint: &BoxRestraint,
    penalty: Option<(&ArcLengthPenalty, &PeriodicOrbitConstraint)>,
) -> (f64, DVector<f64>) {
    let mut g = DVector::zeros(q.len());
    let mut u = restraint.accumulate(q, &mut g);
    if let Some((pen, c)) = penalty {
        let (l, dl) = c.arc_length_with_grad(q);
        let (v, dv) = pen.value_and_derivative(l);
        if v != 0.0 {
            u += v;
            g.axpy(dv, &dl, 1.0);
        }
    }
    (-u, -g)
}

/// Potential `U = −log π` for the constrained samplers.
#[derive(Clone)]
pub struct ConstrainedPosterior {
    pub restraint: BoxRestraint,
    periodic: Option<PeriodicTerms>,
}

#[derive(Clone)]
struct PeriodicTerms {
    constraint: Arc<PeriodicOrbitConstraint>,
    penalty: ArcLengthPenalty,
    likelihood: Option<DataLikelihood>,
}

impl ConstrainedPosterior {
    /// Box walls only, for fixed-point and Hopf manifolds.
    pub fn boxed(layout: &VariableLayout) -> Result<Self> {
        Ok(Self { restraint: BoxRestraint::from_layout(layout)?, periodic: None })
    }

    pub fn periodic(
        constraint: Arc<PeriodicOrbitConstraint>,
        penalty: ArcLengthPenalty,
        likelihood: Option<DataLikelihood>,
    ) -> Result<Self> {
        let restraint = BoxRestraint::from_layout(crate::base::ConstraintSystem::layout(constraint.as_ref()))?;
        Ok(Self { restraint, periodic: Some(PeriodicTerms { constraint, penalty, likelihood }) })
    }

    pub fn with_restraint(mut self, restraint: BoxRestraint) -> Self {
        self.restraint = restraint;
        self
    }

    fn evaluate(&self, q: &DVector<f64>) -> (f64, DVector<f64>) {
        let pen = self.periodic.as_ref().map(|p| (&p.penalty, p.constraint.as_ref()));
        let (mut lp, mut g) = log_prior(q, &self.restraint, pen);
        if let Some(PeriodicTerms { constraint, likelihood: Some(like), .. }) = &self.periodic {
            let (ll, gl) = log_likelihood_periodic(constraint, q, like);
            lp += ll;
            g += gl;
        }
        (-lp, -g)
    }
}

impl PotentialModel for ConstrainedPosterior {
    fn value(&self, q: &DVector<f64>) -> f64 {
        self.evaluate(q).0
    }

    fn gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        self.evaluate(q).1
    }

    fn value_and_gradient(&self, q: &DVector<f64>) -> (f64, DVector<f64>) {
        self.evaluate(q)
    }
}

/// Forward-integration posterior over `θ = (params, y(0))` for the ensemble
/// baseline.
#[derive(Clone)]
pub struct EnsemblePosterior {
    model: Arc<dyn ModelOde>,
    pub template: Template,
    pub sigma: f64,
    pub t_total: f64,
    pub restraint: BoxRestraint,
    pub penalty: ArcLengthPenalty,
    pub integrator: IntegratorOptions,
    /// Trajectory samples per template interval for the arc length.
    pub arc_oversample: usize,
    layout: Arc<VariableLayout>,
}

impl EnsemblePosterior {
    pub fn new(model: Arc<dyn ModelOde>, template: Template, t_total: f64) -> Result<Self> {
        if template.periods != 2 {
            return Err(Error::Config(format!("expected a two-period template, got {} periods", template.periods)));
        }
        let mut blocks = model.param_blocks();
        blocks.push(("y0".into(), model.dim()));
        let layout = Arc::new(VariableLayout::new(blocks)?);
        let restraint = BoxRestraint::from_layout_with(&layout, default_block_bounds)?;
        Ok(Self {
            model,
            template,
            sigma: DEFAULT_SIGMA,
            t_total,
            restraint,
            penalty: ArcLengthPenalty::default(),
            integrator: IntegratorOptions { max_steps: 50_000, ..IntegratorOptions::with_tolerances(1e-6, 1e-9) },
            arc_oversample: 8,
            layout,
        })
    }

    pub fn layout(&self) -> &Arc<VariableLayout> {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_len()
    }

    pub fn assemble(&self, params: &[f64], y0: &[f64]) -> DVector<f64> {
        let mut v = params.to_vec();
        v.extend_from_slice(y0);
        DVector::from_vec(v)
    }

    /// `exp(y₀)` on the template times and the per-period arc length of the
    /// window, or `None` if integration fails.
    pub fn simulate(&self, theta: &DVector<f64>) -> Option<(Vec<f64>, f64)> {
        let np = self.model.n_params();
        let (p, y0) = theta.as_slice().split_at(np);
        if theta.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let traj = tsit5_integrate(
            |_, y| self.model.rhs(y, p),
            &DVector::from_column_slice(y0),
            (0.0, self.t_total),
            &self.integrator,
        )
        .ok()?;
        let times = self.template.times();
        let out: Vec<f64> = times.iter().map(|&t| traj.interpolate(t)[0].exp()).collect();
        let (a, b) = (times[0], times[times.len() - 1]);
        let n = self.arc_oversample * (times.len() - 1);
        let mut length = 0.0;
        let mut prev = traj.interpolate(a);
        for i in 1..=n {
            let y = traj.interpolate(a + (b - a) * i as f64 / n as f64);
            length += (&y - &prev).norm();
            prev = y;
        }
        let length = length / self.template.periods as f64;
        (out.iter().all(|v| v.is_finite()) && length.is_finite()).then_some((out, length))
    }

    pub fn log_posterior(&self, theta: &DVector<f64>) -> f64 {
        let Some((pred, length)) = self.simulate(theta) else {
            return f64::NEG_INFINITY;
        };
        let s2 = 2.0 * self.sigma * self.sigma;
        let ll = -pred.iter().zip(&self.template.values).map(|(p, x)| (p - x).powi(2)).sum::<f64>() / s2;
        ll - self.restraint.value(theta) - self.penalty.value(length)
    }
}
