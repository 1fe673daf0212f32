//! Starting points for the staged sampling runs: fixed points at given
//! parameters, Hopf points refined from fixed-point samples, and periodic
//! orbits seeded from Hopf samples.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::base::{ConstraintSystem, MassSpec};
use crate::constraints::{
    initialize_limit_cycle, select_hopf_candidates, FixedPointConstraint, HopfConstraint, LimitCycleOptions,
    LimitCycleStart, PeriodicOrbitConstraint,
};
use crate::error::{Error, Result};
use crate::linalg::{gauss_newton_solve, gauss_newton_solve_weighted, GaussNewtonOptions};
use crate::samplers::FEASIBILITY_TOL;

/// Fixed point with the parameters held (to ~1e-12 relative): Gauss–Newton
/// from a few constant state guesses.
pub fn fixed_point_start(c: &FixedPointConstraint, params: &[f64], opts: &GaussNewtonOptions) -> Result<DVector<f64>> {
    let d = c.model().dim();
    let weights = DVector::from_fn(c.dim(), |i, _| if i < d { 1.0 } else { 1e-12 });
    let mass = MassSpec::from_inverse_diagonal(weights)?;
    let mut last = None;
    for guess in [0.0, 0.5, -0.5, 1.0, -1.0] {
        let q0 = c.assemble(&vec![guess; d], params);
        match gauss_newton_solve_weighted(c, &q0, &mass, opts) {
            Ok((q, _)) if c.residual(&q).amax() <= FEASIBILITY_TOL => return Ok(q),
            Ok(_) => {}
            Err(e) => last = Some(e),
        }
    }
    Err(last.map(Error::from).unwrap_or_else(|| Error::NoViableCandidate("fixed point did not converge".into())))
}

/// The Hopf point refined from the best-ranked fixed-point sample whose
/// Gauss–Newton solve converges, tried in order of increasing
/// `|Re ζ| / |Im ζ|`. The frequency is returned positive.
pub fn hopf_start(
    fixed: &FixedPointConstraint,
    hopf: &HopfConstraint,
    samples: &[DVector<f64>],
    max_candidates: usize,
    opts: &GaussNewtonOptions,
) -> Result<DVector<f64>> {
    for cand in select_hopf_candidates(fixed, hopf, samples)?.into_iter().take(max_candidates) {
        let Ok((q, _)) = gauss_newton_solve(hopf, &cand.q0, opts) else { continue };
        if hopf.residual(&q).amax() > FEASIBILITY_TOL || !q.iter().all(|v| v.is_finite()) {
            continue;
        }
        let part = hopf.parts(&q);
        if part.omega.abs() < 1e-8 {
            continue;
        }
        if part.omega > 0.0 {
            return Ok(q);
        }
        // (a, −b, −ω) solves the same system
        let im: Vec<f64> = part.im_v.iter().map(|v| -v).collect();
        return Ok(hopf.assemble(part.y, part.params, part.re_v, &im, -part.omega));
    }
    Err(Error::NoViableCandidate("no Hopf candidate converged".into()))
}

/// Where a periodic-orbit start came from.
#[derive(Debug, Clone, PartialEq)]
pub enum CycleSource {
    /// Index into the Hopf samples.
    Hopf(usize),
    Fallback,
}

#[derive(Debug, Clone)]
pub struct CycleSeed {
    pub start: LimitCycleStart,
    pub source: CycleSource,
    pub arc_length: f64,
}

/// Periodic-orbit start from Hopf samples ranked by `(2π/ω − τ_data)²`.
///
/// Each candidate's parameters are relaxed from its fixed point nudged along
/// `Re v`; the first orbit that converges with arc length at least
/// `min_arc` is used. Near a Hopf point the cycle is usually too small or
/// absent, so after `max_candidates` attempts the `fallback` parameters and
/// initial state are used instead.
#[allow(clippy::too_many_arguments)]
pub fn limit_cycle_start(
    periodic: &PeriodicOrbitConstraint,
    hopf: &HopfConstraint,
    hopf_samples: &[DVector<f64>],
    tau_data: f64,
    min_arc: f64,
    max_candidates: usize,
    fallback: (&[f64], &[f64]),
    opts: &LimitCycleOptions,
) -> Result<CycleSeed> {
    let mut ranked: Vec<(usize, f64)> = hopf_samples
        .iter()
        .enumerate()
        .filter_map(|(i, q)| {
            let w = hopf.parts(q).omega.abs();
            (w > 0.0).then(|| (i, (2.0 * PI / w - tau_data).powi(2)))
        })
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    let accept = |start: LimitCycleStart| {
        let (l, _) = periodic.arc_length_with_grad(&start.q);
        (periodic.residual(&start.q).amax() <= FEASIBILITY_TOL && l >= min_arc).then_some((start, l))
    };
    for &(i, _) in ranked.iter().take(max_candidates) {
        let part = hopf.parts(&hopf_samples[i]);
        let y0: Vec<f64> = part.y.iter().zip(part.re_v).map(|(y, v)| y + 0.1 * v).collect();
        let Ok(start) = initialize_limit_cycle(periodic, part.params, &y0, part.omega.abs(), opts) else { continue };
        if let Some((start, arc_length)) = accept(start) {
            return Ok(CycleSeed { start, source: CycleSource::Hopf(i), arc_length });
        }
    }
    let (params, y0) = fallback;
    let start = initialize_limit_cycle(periodic, params, y0, 2.0 * PI / tau_data, opts)?;
    accept(start)
        .map(|(start, arc_length)| CycleSeed { start, source: CycleSource::Fallback, arc_length })
        .ok_or_else(|| Error::NoViableCandidate("fallback parameters give no usable orbit".into()))
}
