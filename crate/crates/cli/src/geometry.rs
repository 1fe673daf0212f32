use std::sync::Arc;

use clangevin::{ConstraintJacobian, ConstraintSystem, VariableLayout};
use nalgebra::{DMatrix, DVector};

/// `‖q‖² = 1`.
pub struct UnitSphere(Arc<VariableLayout>);

/// `q_last = 0`.
pub struct CoordinatePlane(Arc<VariableLayout>);

fn layout_for(columns: &[String]) -> clangevin::Result<Arc<VariableLayout>> {
    Ok(Arc::new(VariableLayout::new(columns.iter().map(|c| (c.clone(), 1)))?))
}

impl UnitSphere {
    pub fn new(columns: &[String]) -> clangevin::Result<Self> {
        Ok(Self(layout_for(columns)?))
    }
}

impl CoordinatePlane {
    pub fn new(columns: &[String]) -> clangevin::Result<Self> {
        Ok(Self(layout_for(columns)?))
    }
}

impl ConstraintSystem for UnitSphere {
    fn layout(&self) -> &Arc<VariableLayout> {
        &self.0
    }
    fn n_constraints(&self) -> usize {
        1
    }
    fn residual(&self, q: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, q.norm_squared() - 1.0)
    }
    fn jacobian(&self, q: &DVector<f64>) -> ConstraintJacobian {
        ConstraintJacobian::Dense(DMatrix::from_fn(1, q.len(), |_, j| 2.0 * q[j]))
    }
}

impl ConstraintSystem for CoordinatePlane {
    fn layout(&self) -> &Arc<VariableLayout> {
        &self.0
    }
    fn n_constraints(&self) -> usize {
        1
    }
    fn residual(&self, q: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, q[q.len() - 1])
    }
    fn jacobian(&self, q: &DVector<f64>) -> ConstraintJacobian {
        let n = q.len();
        ConstraintJacobian::Dense(DMatrix::from_fn(1, n, |_, j| if j == n - 1 { 1.0 } else { 0.0 }))
    }
}
