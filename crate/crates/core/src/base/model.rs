use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::layout::VariableLayout;
use crate::linalg::BorderedSparseJacobian;

/// Right-hand side of an autonomous ODE `dy/dt = f(y, params)`.
///
/// `params` is the model's flat free-parameter vector; `param_blocks` names
/// its pieces so constraint layouts can be assembled from them.
pub trait ModelOde: Send + Sync {
    fn dim(&self) -> usize;

    fn n_params(&self) -> usize;

    fn param_blocks(&self) -> Vec<(String, usize)>;

    fn rhs(&self, y: &[f64], params: &[f64]) -> DVector<f64>;

    /// ∂f/∂y, `dim × dim`.
    fn jac_y(&self, y: &[f64], params: &[f64]) -> DMatrix<f64>;

    /// ∂f/∂params, `dim × n_params`.
    fn jac_params(&self, y: &[f64], params: &[f64]) -> DMatrix<f64>;

    /// Derivatives of the product `f_y(y, params) · v` with respect to `y`
    /// and to `params`. The default differentiates [`ModelOde::jac_y`]
    /// by central differences.
    fn jac_y_times_vec_derivs(
        &self,
        y: &[f64],
        params: &[f64],
        v: &[f64],
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = self.dim();
        let np = self.n_params();
        let vv = DVector::from_column_slice(v);
        let mut dy = DMatrix::zeros(d, d);
        let mut dp = DMatrix::zeros(d, np);
        let mut yy = y.to_vec();
        for j in 0..d {
            let h = 1e-6 * (1.0 + y[j].abs());
            yy[j] = y[j] + h;
            let plus = self.jac_y(&yy, params) * &vv;
            yy[j] = y[j] - h;
            let minus = self.jac_y(&yy, params) * &vv;
            yy[j] = y[j];
            dy.set_column(j, &((plus - minus) / (2.0 * h)));
        }
        let mut pp = params.to_vec();
        for j in 0..np {
            let h = 1e-6 * (1.0 + params[j].abs());
            pp[j] = params[j] + h;
            let plus = self.jac_y(y, &pp) * &vv;
            pp[j] = params[j] - h;
            let minus = self.jac_y(y, &pp) * &vv;
            pp[j] = params[j];
            dp.set_column(j, &((plus - minus) / (2.0 * h)));
        }
        (dy, dp)
    }
}

impl<M: ModelOde + ?Sized> ModelOde for Arc<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn n_params(&self) -> usize {
        (**self).n_params()
    }
    fn param_blocks(&self) -> Vec<(String, usize)> {
        (**self).param_blocks()
    }
    fn rhs(&self, y: &[f64], params: &[f64]) -> DVector<f64> {
        (**self).rhs(y, params)
    }
    fn jac_y(&self, y: &[f64], params: &[f64]) -> DMatrix<f64> {
        (**self).jac_y(y, params)
    }
    fn jac_params(&self, y: &[f64], params: &[f64]) -> DMatrix<f64> {
        (**self).jac_params(y, params)
    }
    fn jac_y_times_vec_derivs(
        &self,
        y: &[f64],
        params: &[f64],
        v: &[f64],
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        (**self).jac_y_times_vec_derivs(y, params, v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureTag {
    Dense,
    BorderedSparse,
}

/// Jacobian of a constraint system in whichever form its structure allows.
#[derive(Debug, Clone)]
pub enum ConstraintJacobian {
    Dense(DMatrix<f64>),
    Bordered(BorderedSparseJacobian),
}

impl ConstraintJacobian {
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            ConstraintJacobian::Dense(j) => j.clone(),
            ConstraintJacobian::Bordered(b) => b.to_dense(),
        }
    }

    pub fn nrows(&self) -> usize {
        match self {
            ConstraintJacobian::Dense(j) => j.nrows(),
            ConstraintJacobian::Bordered(b) => b.nrows(),
        }
    }
}

/// Equality constraints `c(q) = 0` defining the manifold a sampler moves on.
pub trait ConstraintSystem: Send + Sync {
    fn layout(&self) -> &Arc<VariableLayout>;

    fn n_constraints(&self) -> usize;

    fn residual(&self, q: &DVector<f64>) -> DVector<f64>;

    fn jacobian(&self, q: &DVector<f64>) -> ConstraintJacobian;

    fn structure(&self) -> StructureTag {
        StructureTag::Dense
    }

    fn dim(&self) -> usize {
        self.layout().total_len()
    }
}

/// Potential energy `U(q) = -log π(q)` up to an additive constant.
pub trait PotentialModel: Send + Sync {
    fn value(&self, q: &DVector<f64>) -> f64;

    fn gradient(&self, q: &DVector<f64>) -> DVector<f64>;

    fn value_and_gradient(&self, q: &DVector<f64>) -> (f64, DVector<f64>) {
        (self.value(q), self.gradient(q))
    }
}

/// U ≡ 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatPotential;

impl PotentialModel for FlatPotential {
    fn value(&self, _q: &DVector<f64>) -> f64 {
        0.0
    }
    fn gradient(&self, q: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(q.len())
    }
}
