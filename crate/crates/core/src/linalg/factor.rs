use nalgebra::DVector;

use super::bordered::{bordered_lq_factorize, BorderedFactors};
use super::dense::{lq_factorize, LqFactors};
use crate::base::{ConstraintJacobian, MassSpec};
use crate::error::LinalgError;

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Factorization {
    Dense(LqFactors),
    Bordered(BorderedFactors),
}

/// Factorization of `c_q(q)·M^{-1/2}` at a source point, with the mass it
/// was built for.
#[derive(Debug, Clone)]
pub struct ConstraintFactors {
    inner: Factorization,
    source: DVector<f64>,
    mass: MassSpec,
}

impl ConstraintFactors {
    pub fn new(jac: &ConstraintJacobian, q: &DVector<f64>, mass: &MassSpec) -> Result<Self, LinalgError> {
        let inner = match jac {
            ConstraintJacobian::Dense(j) => Factorization::Dense(lq_factorize(j, mass)?),
            ConstraintJacobian::Bordered(b) => Factorization::Bordered(bordered_lq_factorize(b, mass)?),
        };
        Ok(Self { inner, source: q.clone(), mass: mass.clone() })
    }

    pub fn inner(&self) -> &Factorization {
        &self.inner
    }

    pub fn source(&self) -> &DVector<f64> {
        &self.source
    }

    pub fn mass(&self) -> &MassSpec {
        &self.mass
    }

    pub fn n_constraints(&self) -> usize {
        match &self.inner {
            Factorization::Dense(f) => f.n_constraints(),
            Factorization::Bordered(f) => f.n_constraints(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mass.dim()
    }

    fn kkt_solve(&self, f: &DVector<f64>, g: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        match &self.inner {
            Factorization::Dense(fac) => fac.kkt_solve(f, g),
            Factorization::Bordered(fac) => fac.kkt_solve(f, g),
        }
    }

    /// Cotangent projection of `p_hat`: returns `(p, μ)` with
    /// `p = p̂ + c_qᵀμ` and `c_q M⁻¹ p = 0`.
    pub fn project(&self, p_hat: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let w = self.mass.apply_inverse_sqrt(p_hat);
        let (z, x) = self.kkt_solve(&w, &DVector::zeros(self.n_constraints()));
        (self.mass.apply_sqrt(&z), -x)
    }

    /// `(I − QᵀQ) v` in the scaled coordinates `M^{-1/2}`-weighted.
    pub fn tangent_projection_scaled(&self, v: &DVector<f64>) -> DVector<f64> {
        self.kkt_solve(v, &DVector::zeros(self.n_constraints())).0
    }

    /// Minimal-M-norm `δq = M⁻¹c_qᵀδλ` with `c_q δq = c`; returns `(δq, δλ)`.
    pub fn min_norm_correction(&self, c: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (z, x) = self.kkt_solve(&DVector::zeros(self.dim()), c);
        (self.mass.apply_inverse_sqrt(&z), -x)
    }

    /// `(c_q M⁻¹ c_qᵀ)⁻¹ v`
    pub fn gram_solve(&self, v: &DVector<f64>) -> DVector<f64> {
        -self.kkt_solve(&DVector::zeros(self.dim()), v).1
    }

    /// `M⁻¹ c_qᵀ λ`
    pub fn apply_minv_jt(&self, lambda: &DVector<f64>) -> DVector<f64> {
        let jst = match &self.inner {
            Factorization::Dense(fac) => fac.apply_jst(lambda),
            Factorization::Bordered(fac) => fac.apply_jst(lambda),
        };
        self.mass.apply_inverse_sqrt(&jst)
    }
}

/// Cotangent projection; see [`ConstraintFactors::project`].
pub fn project_momentum(p_hat: &DVector<f64>, fac: &ConstraintFactors) -> (DVector<f64>, DVector<f64>) {
    fac.project(p_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{BorderedSparseJacobian, CsrMatrix};
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};

    fn circle_factors(q: &[f64]) -> ConstraintFactors {
        let j = DMatrix::from_row_slice(1, 2, &[2.0 * q[0], 2.0 * q[1]]);
        ConstraintFactors::new(&ConstraintJacobian::Dense(j), &DVector::from_column_slice(q), &MassSpec::identity(2))
            .unwrap()
    }

    #[test]
    fn circle_projection_removes_radial_part() {
        let fac = circle_factors(&[1.0, 0.0]);
        let (p, mu) = project_momentum(&DVector::from_vec(vec![1.0, 1.0]), &fac);
        assert!((p - DVector::from_vec(vec![0.0, 1.0])).norm() < 1e-15);
        // p = p̂ + Jᵀμ with J = (2, 0)
        assert!((mu[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn cotangent_input_is_fixed() {
        let fac = circle_factors(&[0.6, 0.8]);
        let p_hat = DVector::from_vec(vec![-0.8, 0.6]) * 0.37;
        let (p, _) = fac.project(&p_hat);
        assert!((p - &p_hat).amax() < 1e-14);
    }

    fn random_case(seed: u64) -> (DMatrix<f64>, MassSpec, DVector<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let (m, n) = (4, 9);
        let j = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
        let inv = DVector::from_fn(n, |_, _| rng.random_range(0.3..3.0));
        let p = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        (j, MassSpec::from_inverse_diagonal(inv).unwrap(), p)
    }

    #[test]
    fn general_mass_projection_matches_explicit_projector() {
        let (j, mass, p_hat) = random_case(21);
        let minv = DMatrix::from_diagonal(mass.inverse());
        let fac = ConstraintFactors::new(&ConstraintJacobian::Dense(j.clone()), &DVector::zeros(9), &mass).unwrap();
        let (p, _) = fac.project(&p_hat);
        assert!((&j * &minv * &p).norm() < 1e-10 * p_hat.norm());
        // p = p̂ − Jᵀ(J M⁻¹ Jᵀ)⁻¹ J M⁻¹ p̂
        let g = &j * &minv * j.transpose();
        let oracle = &p_hat - j.transpose() * g.lu().solve(&(&j * &minv * &p_hat)).unwrap();
        assert!((&p - &oracle).norm() < 1e-12);
        // p̂ − p is M⁻¹-orthogonal to every cotangent direction
        let t = fac.tangent_projection_scaled(&DVector::from_fn(9, |i, _| (i as f64).cos()));
        let tangent_p = mass.apply_sqrt(&t);
        assert!(((&p_hat - &p).dot(&mass.apply_inverse(&tangent_p))).abs() < 1e-12);
    }

    #[test]
    fn corrections_are_normal_and_solve_linearization() {
        let (j, mass, _) = random_case(22);
        let fac = ConstraintFactors::new(&ConstraintJacobian::Dense(j.clone()), &DVector::zeros(9), &mass).unwrap();
        let c = DVector::from_vec(vec![0.3, -0.1, 0.7, 0.2]);
        let (dq, dl) = fac.min_norm_correction(&c);
        assert!((&j * &dq - &c).norm() < 1e-12);
        assert!((mass.apply_inverse(&(j.transpose() * &dl)) - &dq).norm() < 1e-12);
        assert!((fac.apply_minv_jt(&dl) - &dq).norm() < 1e-12);
        assert!((fac.gram_solve(&c) - dl).norm() < 1e-12);
    }

    #[test]
    fn no_constraints_is_identity() {
        let fac = ConstraintFactors::new(
            &ConstraintJacobian::Dense(DMatrix::zeros(0, 3)),
            &DVector::zeros(3),
            &MassSpec::identity(3),
        )
        .unwrap();
        let p = DVector::from_vec(vec![1.0, -2.0, 3.0]);
        assert_eq!(fac.project(&p).0, p);
    }

    #[test]
    fn bordered_and_dense_paths_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let (m, n_a, n_b) = (30, 36, 6);
        let mut trip = Vec::new();
        for r in 0..m - 2 {
            for c in r..r + 3 {
                trip.push((r, c, rng.random_range(-1.0..1.0)));
            }
        }
        trip.push((m - 2, 0, 1.0));
        trip.push((m - 2, n_a - 1, -1.0));
        trip.push((m - 1, 1, 1.0));
        trip.push((m - 1, n_a - 2, -1.0));
        let a = CsrMatrix::from_triplets(m, n_a, trip);
        let b = DMatrix::from_fn(m, n_b, |_, _| rng.random_range(-1.0..1.0));
        let bj = BorderedSparseJacobian::new(a, b, vec![m - 2, m - 1]).unwrap();
        let dense = bj.to_dense();
        let inv = DVector::from_fn(n_a + n_b, |_, _| rng.random_range(0.5..2.0));
        let mass = MassSpec::from_inverse_diagonal(inv).unwrap();
        let q = DVector::zeros(n_a + n_b);
        let fs = ConstraintFactors::new(&ConstraintJacobian::Bordered(bj), &q, &mass).unwrap();
        let fd = ConstraintFactors::new(&ConstraintJacobian::Dense(dense), &q, &mass).unwrap();
        let p = DVector::from_fn(n_a + n_b, |_, _| rng.random_range(-1.0..1.0));
        let (ps, mus) = fs.project(&p);
        let (pd, mud) = fd.project(&p);
        assert!((ps - pd).amax() < 1e-8);
        assert!((mus - mud).amax() < 1e-8);
        let c = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        assert!((fs.min_norm_correction(&c).0 - fd.min_norm_correction(&c).0).amax() < 1e-8);
    }

    proptest::proptest! {
        #[test]
        fn projection_is_idempotent(seed in 0u64..500) {
            let (j, mass, p_hat) = random_case(seed);
            let fac = ConstraintFactors::new(&ConstraintJacobian::Dense(j), &DVector::zeros(9), &mass).unwrap();
            let (p1, _) = fac.project(&p_hat);
            let (p2, _) = fac.project(&p1);
            proptest::prop_assert!((&p2 - &p1).amax() < 1e-13 * (1.0 + p_hat.amax()));
        }
    }
}
