use nalgebra::DVector;

use crate::base::ConstraintSystem;
use crate::error::{Error, Result};
use crate::linalg::tangent_basis;

/// Volume-element weight `det(Q̂ Q̂ᵀ)^{1/2}` for projecting the manifold onto
/// the coordinates `coords`, where `Q̂` holds those rows of an orthonormal
/// tangent basis at each sample.
///
/// Reweighting samples of the manifold's surface measure by these values
/// gives the density of the projected coordinates.
pub fn curvature_weights(samples: &[DVector<f64>], c: &dyn ConstraintSystem, coords: &[usize]) -> Result<Vec<f64>> {
    let n = c.dim();
    let dim = n - c.n_constraints();
    if coords.is_empty() || coords.len() > dim {
        return Err(Error::Config(format!("need 1..={dim} projection coordinates, got {}", coords.len())));
    }
    if let Some(i) = coords.iter().find(|&&i| i >= n) {
        return Err(Error::Config(format!("coordinate {i} out of range for dimension {n}")));
    }
    samples
        .iter()
        .map(|q| {
            let t = tangent_basis(&c.jacobian(q).to_dense())?;
            let qh = t.select_rows(coords);
            let g = &qh * qh.transpose();
            Ok(g.determinant().max(0.0).sqrt())
        })
        .collect()
}
