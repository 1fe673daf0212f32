//! Central-difference validation of analytic derivatives.

use nalgebra::{DMatrix, DVector};

use super::model::{ConstraintSystem, PotentialModel};
use crate::error::{Error, Result};

fn relative_error(fd: f64, analytic: f64) -> f64 {
    (fd - analytic).abs() / (1.0 + analytic.abs())
}

/// Largest entrywise `|fd − J| / (1 + |J|)` between a central-difference
/// Jacobian of `residual` and `analytic`, with step `h·(1 + |qᵢ|)`.
pub fn check_jacobian_fn<F>(residual: F, analytic: &DMatrix<f64>, q: &DVector<f64>, h: f64) -> Result<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut worst = 0.0f64;
    let mut qq = q.clone();
    for i in 0..q.len() {
        let hi = h * (1.0 + q[i].abs());
        qq[i] = q[i] + hi;
        let plus = residual(&qq);
        qq[i] = q[i] - hi;
        let minus = residual(&qq);
        qq[i] = q[i];
        if plus.iter().chain(minus.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteDerivative(i));
        }
        for r in 0..plus.len() {
            let fd = (plus[r] - minus[r]) / (2.0 * hi);
            worst = worst.max(relative_error(fd, analytic[(r, i)]));
        }
    }
    Ok(worst)
}

pub fn check_jacobian(sys: &dyn ConstraintSystem, q: &DVector<f64>, h: f64) -> Result<f64> {
    let analytic = sys.jacobian(q).to_dense();
    check_jacobian_fn(|x| sys.residual(x), &analytic, q, h)
}

pub fn check_gradient(pot: &dyn PotentialModel, q: &DVector<f64>, h: f64) -> Result<f64> {
    let g = pot.gradient(q);
    let analytic = DMatrix::from_row_slice(1, g.len(), g.as_slice());
    check_jacobian_fn(|x| DVector::from_element(1, pot.value(x)), &analytic, q, h)
}
