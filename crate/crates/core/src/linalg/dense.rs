use nalgebra::{DMatrix, DVector};

use crate::base::MassSpec;
use crate::error::LinalgError;

/// `J·M^{-1/2} = L·Q` with `L` lower triangular (positive diagonal) and `Q`
/// row-orthonormal.
#[derive(Debug, Clone)]
pub struct LqFactors {
    pub l: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

pub(crate) const RANK_TOL: f64 = 1e-12;

pub fn lq_factorize(j: &DMatrix<f64>, mass: &MassSpec) -> Result<LqFactors, LinalgError> {
    let (m, n) = j.shape();
    if mass.dim() != n {
        return Err(LinalgError::Dimension(format!(
            "jacobian has {n} columns, mass has dimension {}",
            mass.dim()
        )));
    }
    if m > n {
        return Err(LinalgError::Dimension(format!("{m} constraints exceed dimension {n}")));
    }
    if j.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    if m == 0 {
        return Ok(LqFactors { l: DMatrix::zeros(0, 0), q: DMatrix::zeros(0, n) });
    }
    let mut js = j.clone();
    for (c, s) in mass.inverse_sqrt().iter().enumerate() {
        js.column_mut(c).scale_mut(*s);
    }
    let qr = js.transpose().qr();
    let mut q = qr.q(); // n × m
    let mut r = qr.r(); // m × m
    let thresh = RANK_TOL * j.norm();
    for i in 0..m {
        if r[(i, i)].abs() <= thresh {
            return Err(LinalgError::RankDeficient { row: i });
        }
        if r[(i, i)] < 0.0 {
            r.row_mut(i).neg_mut();
            q.column_mut(i).neg_mut();
        }
    }
    Ok(LqFactors { l: r.transpose(), q: q.transpose() })
}

impl LqFactors {
    pub fn n_constraints(&self) -> usize {
        self.l.nrows()
    }

    /// Solves the scaled KKT system `z + Jsᵀx = f`, `Js z = g` where `Js = LQ`.
    pub(crate) fn kkt_solve(&self, f: &DVector<f64>, g: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        if self.n_constraints() == 0 {
            return (f.clone(), DVector::zeros(0));
        }
        let qf = &self.q * f;
        let linv_g = self.l.solve_lower_triangular(g).expect("nonsingular L");
        let z = f - self.q.tr_mul(&qf) + self.q.tr_mul(&linv_g);
        let x = self
            .l
            .tr_solve_lower_triangular(&(qf - linv_g))
            .expect("nonsingular L");
        (z, x)
    }

    /// `Jsᵀ λ`
    pub(crate) fn apply_jst(&self, lambda: &DVector<f64>) -> DVector<f64> {
        if self.n_constraints() == 0 {
            return DVector::zeros(self.q.ncols());
        }
        self.q.tr_mul(&self.l.tr_mul(lambda))
    }
}

/// Orthonormal basis of the null space of `j` as the columns of an
/// `n × (n − m)` matrix, completing the rows of the LQ factor `Q`.
pub fn tangent_basis(j: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    let (m, n) = j.shape();
    let lq = lq_factorize(j, &MassSpec::identity(n))?;
    let mut aug = DMatrix::zeros(n, m + n);
    aug.view_mut((0, 0), (n, m)).copy_from(&lq.q.transpose());
    aug.view_mut((0, m), (n, n)).fill_with_identity();
    let full = aug.qr().q();
    Ok(full.columns(m, n - m).into_owned())
}
