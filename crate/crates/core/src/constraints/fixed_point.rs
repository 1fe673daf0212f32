use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::base::{ConstraintJacobian, ConstraintSystem, ModelOde, VariableLayout};

pub(crate) fn layout_with_params(
    model: &dyn ModelOde,
    head: Vec<(String, usize)>,
    tail: Vec<(String, usize)>,
) -> Arc<VariableLayout> {
    let mut blocks = head;
    blocks.extend(model.param_blocks().into_iter().filter(|(_, l)| *l > 0));
    blocks.extend(tail);
    Arc::new(VariableLayout::new(blocks).expect("model blocks are distinct from constraint blocks"))
}

/// `f(y, params) = 0` on `q = (y, params)`.
#[derive(Clone)]
pub struct FixedPointConstraint {
    model: Arc<dyn ModelOde>,
    layout: Arc<VariableLayout>,
}

pub fn build_fixed_point(model: Arc<dyn ModelOde>) -> FixedPointConstraint {
    let layout = layout_with_params(model.as_ref(), vec![("y".into(), model.dim())], vec![]);
    FixedPointConstraint { model, layout }
}

impl FixedPointConstraint {
    pub fn model(&self) -> &Arc<dyn ModelOde> {
        &self.model
    }

    pub fn split<'a>(&self, q: &'a DVector<f64>) -> (&'a [f64], &'a [f64]) {
        q.as_slice().split_at(self.model.dim())
    }

    pub fn assemble(&self, y: &[f64], params: &[f64]) -> DVector<f64> {
        DVector::from_iterator(y.len() + params.len(), y.iter().chain(params).copied())
    }

    /// Jacobian `f_y` at the point.
    pub fn jac_y(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let (y, p) = self.split(q);
        self.model.jac_y(y, p)
    }
}

impl ConstraintSystem for FixedPointConstraint {
    fn layout(&self) -> &Arc<VariableLayout> {
        &self.layout
    }

    fn n_constraints(&self) -> usize {
        self.model.dim()
    }

    fn residual(&self, q: &DVector<f64>) -> DVector<f64> {
        let (y, p) = self.split(q);
        self.model.rhs(y, p)
    }

    fn jacobian(&self, q: &DVector<f64>) -> ConstraintJacobian {
        let (y, p) = self.split(q);
        let d = self.model.dim();
        let mut j = DMatrix::zeros(d, q.len());
        j.columns_mut(0, d).copy_from(&self.model.jac_y(y, p));
        j.columns_mut(d, p.len()).copy_from(&self.model.jac_params(y, p));
        ConstraintJacobian::Dense(j)
    }
}

/// Extended system for Hopf points on `q = (y, params, Re v, Im v, ω)`:
///
/// ```text
/// f = 0,   f_y a + ω b = 0,   f_y b − ω a = 0,   ‖a‖² + ‖b‖² = 1,   b₀ = 0
/// ```
///
/// so that `f_y (a + ib) = iω (a + ib)`.
#[derive(Clone)]
pub struct HopfConstraint {
    model: Arc<dyn ModelOde>,
    layout: Arc<VariableLayout>,
}

pub fn build_hopf(model: Arc<dyn ModelOde>) -> HopfConstraint {
    let d = model.dim();
    let layout = layout_with_params(
        model.as_ref(),
        vec![("y".into(), d)],
        vec![("re_v".into(), d), ("im_v".into(), d), ("omega".into(), 1)],
    );
    HopfConstraint { model, layout }
}

/// Borrowed pieces of a Hopf-layout vector.
pub struct HopfParts<'a> {
    pub y: &'a [f64],
    pub params: &'a [f64],
    pub re_v: &'a [f64],
    pub im_v: &'a [f64],
    pub omega: f64,
}

impl HopfConstraint {
    pub fn model(&self) -> &Arc<dyn ModelOde> {
        &self.model
    }

    pub fn parts<'a>(&self, q: &'a DVector<f64>) -> HopfParts<'a> {
        let d = self.model.dim();
        let np = self.model.n_params();
        let s = q.as_slice();
        HopfParts {
            y: &s[..d],
            params: &s[d..d + np],
            re_v: &s[d + np..2 * d + np],
            im_v: &s[2 * d + np..3 * d + np],
            omega: s[3 * d + np],
        }
    }

    pub fn assemble(&self, y: &[f64], params: &[f64], re_v: &[f64], im_v: &[f64], omega: f64) -> DVector<f64> {
        let mut v: Vec<f64> = Vec::with_capacity(self.layout.total_len());
        v.extend_from_slice(y);
        v.extend_from_slice(params);
        v.extend_from_slice(re_v);
        v.extend_from_slice(im_v);
        v.push(omega);
        DVector::from_vec(v)
    }

    pub fn jac_y(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let h = self.parts(q);
        self.model.jac_y(h.y, h.params)
    }
}

impl ConstraintSystem for HopfConstraint {
    fn layout(&self) -> &Arc<VariableLayout> {
        &self.layout
    }

    fn n_constraints(&self) -> usize {
        3 * self.model.dim() + 2
    }

    fn residual(&self, q: &DVector<f64>) -> DVector<f64> {
        let h = self.parts(q);
        let d = self.model.dim();
        let a = DVector::from_column_slice(h.re_v);
        let b = DVector::from_column_slice(h.im_v);
        let jy = self.model.jac_y(h.y, h.params);
        let mut r = DVector::zeros(3 * d + 2);
        r.rows_mut(0, d).copy_from(&self.model.rhs(h.y, h.params));
        r.rows_mut(d, d).copy_from(&(&jy * &a + &b * h.omega));
        r.rows_mut(2 * d, d).copy_from(&(&jy * &b - &a * h.omega));
        r[3 * d] = a.norm_squared() + b.norm_squared() - 1.0;
        r[3 * d + 1] = b[0];
        r
    }

    fn jacobian(&self, q: &DVector<f64>) -> ConstraintJacobian {
        let h = self.parts(q);
        let d = self.model.dim();
        let np = self.model.n_params();
        let jy = self.model.jac_y(h.y, h.params);
        let jp = self.model.jac_params(h.y, h.params);
        let (day, dap) = self.model.jac_y_times_vec_derivs(h.y, h.params, h.re_v);
        let (dby, dbp) = self.model.jac_y_times_vec_derivs(h.y, h.params, h.im_v);
        let (ca, cb, cw) = (d + np, 2 * d + np, 3 * d + np);
        let eye = DMatrix::<f64>::identity(d, d);
        let mut j = DMatrix::zeros(3 * d + 2, q.len());
        j.view_mut((0, 0), (d, d)).copy_from(&jy);
        j.view_mut((0, d), (d, np)).copy_from(&jp);
        j.view_mut((d, 0), (d, d)).copy_from(&day);
        j.view_mut((d, d), (d, np)).copy_from(&dap);
        j.view_mut((d, ca), (d, d)).copy_from(&jy);
        j.view_mut((d, cb), (d, d)).copy_from(&(&eye * h.omega));
        for i in 0..d {
            j[(d + i, cw)] = h.im_v[i];
            j[(2 * d + i, cw)] = -h.re_v[i];
        }
        j.view_mut((2 * d, 0), (d, d)).copy_from(&dby);
        j.view_mut((2 * d, d), (d, np)).copy_from(&dbp);
        j.view_mut((2 * d, ca), (d, d)).copy_from(&(&eye * -h.omega));
        j.view_mut((2 * d, cb), (d, d)).copy_from(&jy);
        for i in 0..d {
            j[(3 * d, ca + i)] = 2.0 * h.re_v[i];
            j[(3 * d, cb + i)] = 2.0 * h.im_v[i];
        }
        j[(3 * d + 1, cb)] = 1.0;
        ConstraintJacobian::Dense(j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::check_jacobian;
    use crate::constraints::{imaginary_pair_distance, select_hopf_candidates};
    use crate::linalg::{gauss_newton_solve, GaussNewtonOptions};
    use crate::models::{Repressilator, StuartLandau};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dimensions() {
        let m = Arc::new(Repressilator::three());
        let f = build_fixed_point(m.clone());
        assert_eq!((f.n_constraints(), f.dim()), (3, 11));
        let h = build_hopf(m);
        assert_eq!((h.n_constraints(), h.dim()), (11, 18));
    }

    #[test]
    fn fixed_point_residual_and_jacobian() {
        let m = Arc::new(Repressilator::three());
        let f = build_fixed_point(m.clone());
        let q = f.assemble(&[0.0; 3], m.symmetric(0.0, 0.0, 2.0).as_slice());
        assert!((f.residual(&q) - DVector::from_element(3, -0.5)).amax() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let q0 = DVector::from_fn(11, |i, _| if i >= 8 { rng.random_range(0.5..4.0) } else { rng.random_range(-1.0..1.0) });
            let (q, _) = gauss_newton_solve(&f, &q0, &GaussNewtonOptions::default()).unwrap();
            assert!(f.residual(&q).amax() < 1e-10);
            assert!(check_jacobian(&f, &q, 1e-6).unwrap() < 1e-6);
        }
    }

    #[test]
    fn stuart_landau_hopf_at_zero_mu() {
        let h = build_hopf(Arc::new(StuartLandau));
        let q0 = h.assemble(&[0.05, -0.02], &[0.1, 1.7], &[0.6, 0.1], &[0.05, -0.7], 1.5);
        let (q, _) = gauss_newton_solve(&h, &q0, &GaussNewtonOptions::default()).unwrap();
        let part = h.parts(&q);
        assert!(part.params[0].abs() < 1e-10);
        assert!((part.omega.abs() - part.params[1].abs()).abs() < 1e-10);
        assert!(check_jacobian(&h, &q, 1e-6).unwrap() < 1e-5);
    }

    #[test]
    fn repressilator_hopf_from_candidates() {
        let m = Arc::new(Repressilator::three());
        let f = build_fixed_point(m.clone());
        let h = build_hopf(m.clone());
        // symmetric fixed points near the Hopf crossing at k0 ≈ 1.33
        let samples: Vec<DVector<f64>> = [1.0, 1.2, 1.5, 2.0]
            .iter()
            .map(|&k0| {
                let p = m.symmetric(k0, 0.0, 3.0);
                let q0 = f.assemble(&[0.5; 3], p.as_slice());
                let mut q = gauss_newton_solve(&f, &q0, &GaussNewtonOptions::default()).unwrap().0;
                q.rows_mut(3, 8).copy_from(&p);
                gauss_newton_solve(&f, &q, &GaussNewtonOptions::default()).unwrap().0
            })
            .collect();
        let cands = select_hopf_candidates(&f, &h, &samples).unwrap();
        assert!(cands.windows(2).all(|w| w[0].ratio <= w[1].ratio));
        let (q, _) = gauss_newton_solve(&h, &cands[0].q0, &GaussNewtonOptions::default()).unwrap();
        assert!(h.residual(&q).amax() < 1e-10);
        let part = h.parts(&q);
        assert!(part.omega > 0.0);
        assert!(imaginary_pair_distance(&h.jac_y(&q), part.omega) < 1e-8);
        assert!(check_jacobian(&h, &q, 1e-6).unwrap() < 1e-5);
    }
}
