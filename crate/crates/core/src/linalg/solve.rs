use nalgebra::DVector;

use super::factor::ConstraintFactors;
use crate::base::{ConstraintSystem, MassSpec};
use crate::error::LinalgError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Absolute ∞-norm tolerance on the residual.
    pub tol: f64,
    pub broyden: bool,
    /// Broyden updates kept before falling back to the cached Gram matrix.
    pub restart: usize,
    /// Growth factor of ‖c‖ treated as divergence.
    pub divergence: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_iter: 50, tol: 1e-10, broyden: true, restart: 20, divergence: 1e4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub q: DVector<f64>,
    pub lambda: DVector<f64>,
    pub iters: usize,
}

/// Finds `q = q_guess + M⁻¹c_q(q_prev)ᵀλ` with `c(q) = 0`.
///
/// Quasi-Newton in λ with the Gram matrix `c_q(q_prev) M⁻¹ c_q(q_prev)ᵀ`
/// from `fac_prev` standing in for the true Jacobian, optionally improved by
/// "good" Broyden updates of its inverse, kept in product form.
pub fn solve_position_constraints(
    q_guess: &DVector<f64>,
    fac_prev: &ConstraintFactors,
    c: &dyn ConstraintSystem,
    opts: &SolveOptions,
) -> Result<SolveOutcome, LinalgError> {
    let m = fac_prev.n_constraints();
    let mut lambda = DVector::zeros(m);
    let mut q = q_guess.clone();
    let mut r = c.residual(&q);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let r0 = r.amax();
    // pairs (a_j, s_j): H_{j+1}v = H_j v + a_j (s_jᵀ H_j v)
    let mut updates: Vec<(DVector<f64>, DVector<f64>)> = Vec::new();
    let apply_h = |updates: &[(DVector<f64>, DVector<f64>)], v: &DVector<f64>| {
        let mut h = fac_prev.gram_solve(v);
        for (a, s) in updates {
            let d = s.dot(&h);
            h.axpy(d, a, 1.0);
        }
        h
    };
    let mut iters = 0;
    while r.amax() > opts.tol {
        if iters == opts.max_iter {
            return Err(LinalgError::NoConvergence { iters, residual: r.amax() });
        }
        iters += 1;
        let step = -apply_h(&updates, &r);
        lambda += &step;
        q = q_guess + fac_prev.apply_minv_jt(&lambda);
        let r_new = c.residual(&q);
        let cur = r_new.amax();
        if !cur.is_finite() || cur > opts.divergence * r0.max(opts.tol) {
            return Err(LinalgError::ResidualDiverged { initial: r0, current: cur });
        }
        if opts.broyden {
            if updates.len() == opts.restart {
                updates.clear();
            }
            let hy = apply_h(&updates, &(&r_new - &r));
            let denom = step.dot(&hy);
            if denom.abs() > 1e-14 * step.norm() * hy.norm() && denom != 0.0 {
                updates.push(((&step - &hy) / denom, step));
            }
        }
        r = r_new;
    }
    Ok(SolveOutcome { q, lambda, iters })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussNewtonOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for GaussNewtonOptions {
    fn default() -> Self {
        Self { max_iter: 50, tol: 1e-10 }
    }
}

/// Gauss–Newton with minimal-norm steps `δq = −c_qᵀ(c_q c_qᵀ)⁻¹c`.
/// Returns the point and the number of iterations.
pub fn gauss_newton_solve(
    c: &dyn ConstraintSystem,
    q0: &DVector<f64>,
    opts: &GaussNewtonOptions,
) -> Result<(DVector<f64>, usize), LinalgError> {
    gauss_newton_solve_weighted(c, q0, &MassSpec::identity(q0.len()), opts)
}

/// Gauss–Newton with steps of minimal `M`-norm, `δq = −M⁻¹c_qᵀ(c_q M⁻¹ c_qᵀ)⁻¹c`.
/// A small inverse mass on a coordinate keeps it nearly fixed.
pub fn gauss_newton_solve_weighted(
    c: &dyn ConstraintSystem,
    q0: &DVector<f64>,
    mass: &MassSpec,
    opts: &GaussNewtonOptions,
) -> Result<(DVector<f64>, usize), LinalgError> {
    let mut q = q0.clone();
    let mut r = c.residual(&q);
    let mut iters = 0;
    loop {
        let res = r.amax();
        if !res.is_finite() {
            return Err(LinalgError::NoConvergence { iters, residual: res });
        }
        if res <= opts.tol {
            return Ok((q, iters));
        }
        if iters == opts.max_iter {
            return Err(LinalgError::NoConvergence { iters, residual: res });
        }
        iters += 1;
        let fac = ConstraintFactors::new(&c.jacobian(&q), &q, mass)?;
        let (dq, _) = fac.min_norm_correction(&r);
        q -= dq;
        r = c.residual(&q);
    }
}
