use nalgebra::{DMatrix, DVector};

use crate::base::ConstraintSystem;
use crate::error::{Error, LinalgError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PalcOptions {
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Step halvings allowed before the branch is abandoned.
    pub max_halvings: usize,
}

impl Default for PalcOptions {
    fn default() -> Self {
        Self { newton_tol: 1e-10, newton_max_iter: 20, max_halvings: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PalcBranch {
    pub points: Vec<DVector<f64>>,
    pub tangents: Vec<DVector<f64>>,
    /// True when the corrector failed after all halvings.
    pub stopped_early: bool,
}

/// Unit null vector of the `(N−1) × N` Jacobian, oriented along `prev`.
pub fn branch_tangent(j: &DMatrix<f64>, prev: Option<&DVector<f64>>) -> Result<DVector<f64>> {
    let n = j.ncols();
    if j.nrows() + 1 != n {
        return Err(Error::Config(format!("continuation needs N − 1 constraints, got {} for N = {n}", j.nrows())));
    }
    let gram = (j * j.transpose()).cholesky().ok_or(LinalgError::RankDeficient { row: 0 })?;
    let project = |v: &DVector<f64>| v - j.transpose() * gram.solve(&(j * v));
    let t = match prev {
        Some(p) => project(p),
        None => (0..n)
            .map(|i| project(&DVector::from_fn(n, |k, _| if k == i { 1.0 } else { 0.0 })))
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or_else(|| DVector::zeros(n)),
    };
    let norm = t.norm();
    if !(norm > 1e-12) {
        return Err(LinalgError::RankDeficient { row: 0 }.into());
    }
    let mut t = t / norm;
    if prev.is_none() {
        let (imax, _) = t.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
        if t[imax] < 0.0 {
            t = -t;
        }
    }
    Ok(t)
}

/// Newton on `c(q) = 0, tᵀ(q − q_pred) = 0`.
fn correct(c: &dyn ConstraintSystem, q_pred: &DVector<f64>, t: &DVector<f64>, opts: &PalcOptions) -> Option<DVector<f64>> {
    let n = q_pred.len();
    let mut q = q_pred.clone();
    for _ in 0..=opts.newton_max_iter {
        let r = c.residual(&q);
        let arc = t.dot(&(&q - q_pred));
        if !r.iter().all(|v| v.is_finite()) {
            return None;
        }
        if r.amax() <= opts.newton_tol && arc.abs() <= opts.newton_tol {
            return Some(q);
        }
        let j = c.jacobian(&q).to_dense();
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (n - 1, n)).copy_from(&j);
        a.row_mut(n - 1).copy_from(&t.transpose());
        let mut rhs = DVector::zeros(n);
        rhs.rows_mut(0, n - 1).copy_from(&r);
        rhs[n - 1] = arc;
        let dq = a.lu().solve(&rhs)?;
        q -= dq;
    }
    None
}

/// Pseudoarclength continuation of a one-dimensional solution branch.
///
/// Each step predicts `q + h t` along the unit tangent and corrects on the
/// hyperplane orthogonal to `t`, so turning points in any single coordinate
/// are passed without trouble. The initial tangent has its largest
/// component positive; a negative `step` traces the other direction.
pub fn palc_trace(
    c: &dyn ConstraintSystem,
    q0: &DVector<f64>,
    step: f64,
    n_steps: usize,
    opts: &PalcOptions,
) -> Result<PalcBranch> {
    let r0 = c.residual(q0).amax();
    if !(r0 <= 1e-8) {
        return Err(Error::InfeasibleStart(r0));
    }
    let mut t = branch_tangent(&c.jacobian(q0).to_dense(), None)?;
    let mut q = q0.clone();
    let mut branch = PalcBranch { points: vec![q.clone()], tangents: vec![t.clone()], stopped_early: false };
    for _ in 0..n_steps {
        let mut h = step;
        let mut next = None;
        for _ in 0..=opts.max_halvings {
            let pred = &q + &t * h;
            if let Some(qn) = correct(c, &pred, &t, opts) {
                next = Some(qn);
                break;
            }
            h *= 0.5;
        }
        let Some(qn) = next else {
            branch.stopped_early = true;
            break;
        };
        let tn = match branch_tangent(&c.jacobian(&qn).to_dense(), Some(&t)) {
            Ok(tn) => tn,
            Err(_) => {
                branch.stopped_early = true;
                break;
            }
        };
        q = qn;
        t = tn;
        branch.points.push(q.clone());
        branch.tangents.push(t.clone());
    }
    Ok(branch)
}
