//! Constraint Jacobians of the form `[A B]` with `A` sparse and banded after
//! reordering, `B` a few dense columns.
//!
//! Rather than forming an explicit sparse LQ of `A` (which is rank deficient
//! for periodic orbits: the unpinned phase leaves `A` short of full row rank),
//! the factorization works on the augmented system
//!
//! ```text
//!     z + Jsᵀ x = f
//!     Js z      = g,        Js = J·M^{-1/2}
//! ```
//!
//! whose solution gives both the cotangent projection (`f = w, g = 0`) and
//! the minimal-norm correction (`f = 0, g = c`). Rows listed in
//! `border_rows`, together with the dense columns, are eliminated through a
//! small dense Schur complement; the remaining core is a banded matrix.

use nalgebra::{DMatrix, DVector};

use super::banded::{BandedLu, BandedMatrix};
use super::dense::RANK_TOL;
use super::sparse::CsrMatrix;
use crate::base::MassSpec;
use crate::error::LinalgError;

#[derive(Debug, Clone)]
pub struct BorderedSparseJacobian {
    /// Derivatives w.r.t. the leading (discretized BVP) columns.
    pub a: CsrMatrix,
    /// Derivatives w.r.t. the trailing dense columns.
    pub b: DMatrix<f64>,
    /// Rows coupling distant parts of `A` (periodicity, global equations).
    pub border_rows: Vec<usize>,
}

impl BorderedSparseJacobian {
    pub fn new(a: CsrMatrix, b: DMatrix<f64>, border_rows: Vec<usize>) -> Result<Self, LinalgError> {
        if a.nrows() != b.nrows() {
            return Err(LinalgError::Dimension(format!(
                "sparse block has {} rows, dense block {}",
                a.nrows(),
                b.nrows()
            )));
        }
        if border_rows.iter().any(|&r| r >= a.nrows()) {
            return Err(LinalgError::Dimension("border row out of range".into()));
        }
        Ok(Self { a, b, border_rows })
    }

    pub fn nrows(&self) -> usize {
        self.a.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.a.ncols() + self.b.ncols()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows(), self.ncols());
        d.columns_mut(0, self.a.ncols()).copy_from(&self.a.to_dense());
        d.columns_mut(self.a.ncols(), self.b.ncols()).copy_from(&self.b);
        d
    }
}

#[derive(Debug, Clone)]
pub struct BorderedFactors {
    m: usize,
    n_a: usize,
    n_b: usize,
    core_rows: Vec<usize>,
    border_rows: Vec<usize>,
    a: CsrMatrix,
    b: DMatrix<f64>,
    pos_z: Vec<usize>,
    pos_x: Vec<usize>,
    core: BandedLu,
    /// `K_c⁻¹ K_cb` in core ordering.
    w: DMatrix<f64>,
    k_cb: DMatrix<f64>,
    schur: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

pub fn bordered_lq_factorize(
    jac: &BorderedSparseJacobian,
    mass: &MassSpec,
) -> Result<BorderedFactors, LinalgError> {
    let m = jac.nrows();
    let n_a = jac.a.ncols();
    let n_b = jac.b.ncols();
    if mass.dim() != n_a + n_b {
        return Err(LinalgError::Dimension(format!(
            "jacobian has {} columns, mass has dimension {}",
            n_a + n_b,
            mass.dim()
        )));
    }
    if m > n_a + n_b {
        return Err(LinalgError::Dimension(format!("{m} constraints exceed dimension {}", n_a + n_b)));
    }
    let isq = mass.inverse_sqrt().as_slice();
    let a = jac.a.scale_columns(&isq[..n_a]);
    let mut b = jac.b.clone();
    for c in 0..n_b {
        b.column_mut(c).scale_mut(isq[n_a + c]);
    }
    if b.iter().any(|v| !v.is_finite()) || (0..m).any(|i| a.row(i).any(|(_, v)| !v.is_finite())) {
        return Err(LinalgError::NonFinite);
    }
    let scale = (b.norm_squared() + (0..m).flat_map(|i| a.row(i).map(|(_, v)| v * v)).sum::<f64>())
        .sqrt()
        .max(1.0);

    let mut is_border = vec![false; m];
    let mut border_rows = jac.border_rows.clone();
    border_rows.sort_unstable();
    border_rows.dedup();
    for &r in &border_rows {
        is_border[r] = true;
    }
    let core_rows: Vec<usize> = (0..m).filter(|&r| !is_border[r]).collect();

    // Interleave: each z_j goes just before the first core row touching it.
    let n_c = n_a + core_rows.len();
    let mut pos_z = vec![usize::MAX; n_a];
    let mut pos_x = vec![0usize; core_rows.len()];
    let mut next = 0;
    for (ci, &r) in core_rows.iter().enumerate() {
        let mut cols: Vec<usize> = a.row(r).map(|(j, _)| j).collect();
        cols.sort_unstable();
        for j in cols {
            if pos_z[j] == usize::MAX {
                pos_z[j] = next;
                next += 1;
            }
        }
        pos_x[ci] = next;
        next += 1;
    }
    for p in pos_z.iter_mut() {
        if *p == usize::MAX {
            *p = next;
            next += 1;
        }
    }
    debug_assert_eq!(next, n_c);

    let mut bw = 0usize;
    for (ci, &r) in core_rows.iter().enumerate() {
        for (j, _) in a.row(r) {
            bw = bw.max(pos_z[j].abs_diff(pos_x[ci]));
        }
    }
    let mut kc = BandedMatrix::zeros(n_c, bw, bw);
    for &p in &pos_z {
        kc.add(p, p, 1.0);
    }
    for (ci, &r) in core_rows.iter().enumerate() {
        for (j, v) in a.row(r) {
            kc.add(pos_z[j], pos_x[ci], v);
            kc.add(pos_x[ci], pos_z[j], v);
        }
    }
    let core = kc.factorize(RANK_TOL * scale).map_err(|e| match e {
        LinalgError::RankDeficient { row } => {
            let ci = pos_x.iter().position(|&p| p == row).unwrap_or(0);
            LinalgError::RankDeficient { row: core_rows.get(ci).copied().unwrap_or(0) }
        }
        other => other,
    })?;

    let n_r = border_rows.len();
    let n_bord = n_b + n_r;
    let mut k_cb = DMatrix::zeros(n_c, n_bord);
    for (ci, &r) in core_rows.iter().enumerate() {
        for t in 0..n_b {
            k_cb[(pos_x[ci], t)] = b[(r, t)];
        }
    }
    for (ri, &r) in border_rows.iter().enumerate() {
        for (j, v) in a.row(r) {
            k_cb[(pos_z[j], n_b + ri)] += v;
        }
    }
    let mut w = k_cb.clone();
    for c in 0..n_bord {
        core.solve_in_place(w.column_mut(c).as_mut_slice());
    }
    let mut s = DMatrix::zeros(n_bord, n_bord);
    for t in 0..n_b {
        s[(t, t)] = 1.0;
        for (ri, &r) in border_rows.iter().enumerate() {
            s[(t, n_b + ri)] = b[(r, t)];
            s[(n_b + ri, t)] = b[(r, t)];
        }
    }
    s -= k_cb.tr_mul(&w);
    let schur = s.lu();
    if n_bord > 0 {
        let u = schur.u();
        let umax = u.diagonal().amax().max(1.0);
        for i in 0..n_bord {
            if !(u[(i, i)].abs() > RANK_TOL * umax) {
                let row = if i >= n_b { border_rows[i - n_b] } else { m.saturating_sub(1) };
                return Err(LinalgError::RankDeficient { row });
            }
        }
    }
    Ok(BorderedFactors { m, n_a, n_b, core_rows, border_rows, a, b, pos_z, pos_x, core, w, k_cb, schur })
}

impl BorderedFactors {
    pub fn n_constraints(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n_a + self.n_b
    }

    pub(crate) fn kkt_solve(&self, f: &DVector<f64>, g: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n_c = self.n_a + self.core_rows.len();
        let mut rc = vec![0.0; n_c];
        for j in 0..self.n_a {
            rc[self.pos_z[j]] = f[j];
        }
        for (ci, &r) in self.core_rows.iter().enumerate() {
            rc[self.pos_x[ci]] = g[r];
        }
        self.core.solve_in_place(&mut rc);
        let uc1 = DVector::from_vec(rc);
        let n_bord = self.n_b + self.border_rows.len();
        let mut rb = DVector::zeros(n_bord);
        for t in 0..self.n_b {
            rb[t] = f[self.n_a + t];
        }
        for (ri, &r) in self.border_rows.iter().enumerate() {
            rb[self.n_b + ri] = g[r];
        }
        let ub = if n_bord > 0 {
            let rhs = rb - self.k_cb.tr_mul(&uc1);
            self.schur.solve(&rhs).expect("nonsingular Schur complement")
        } else {
            DVector::zeros(0)
        };
        let uc = if n_bord > 0 { uc1 - &self.w * &ub } else { uc1 };
        let mut z = DVector::zeros(self.n_a + self.n_b);
        let mut x = DVector::zeros(self.m);
        for j in 0..self.n_a {
            z[j] = uc[self.pos_z[j]];
        }
        for (ci, &r) in self.core_rows.iter().enumerate() {
            x[r] = uc[self.pos_x[ci]];
        }
        for t in 0..self.n_b {
            z[self.n_a + t] = ub[t];
        }
        for (ri, &r) in self.border_rows.iter().enumerate() {
            x[r] = ub[self.n_b + ri];
        }
        (z, x)
    }

    /// `Jsᵀ λ`
    pub(crate) fn apply_jst(&self, lambda: &DVector<f64>) -> DVector<f64> {
        let top = self.a.tr_mul_vec(lambda.as_slice());
        let bottom = self.b.tr_mul(lambda);
        let mut out = DVector::zeros(self.dim());
        out.rows_mut(0, self.n_a).copy_from(&top);
        out.rows_mut(self.n_a, self.n_b).copy_from(&bottom);
        out
    }

    /// `Js v`
    #[cfg(test)]
    pub(crate) fn apply_js(&self, v: &DVector<f64>) -> DVector<f64> {
        self.a.mul_vec(&v.as_slice()[..self.n_a]) + &self.b * v.rows(self.n_a, self.n_b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_bordered(m: usize, n: usize, n_b: usize, n_border: usize, seed: u64) -> BorderedSparseJacobian {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n_a = n - n_b;
        let mut trip = Vec::new();
        let border: Vec<usize> = (m - n_border..m).collect();
        for r in 0..m - n_border {
            let c0 = r * (n_a - 4) / (m - n_border);
            for c in c0..(c0 + 4).min(n_a) {
                trip.push((r, c, rng.random_range(-1.0..1.0)));
            }
        }
        for &r in &border {
            trip.push((r, 0, rng.random_range(-1.0..1.0)));
            trip.push((r, n_a - 1, rng.random_range(-1.0..1.0)));
        }
        let a = CsrMatrix::from_triplets(m, n_a, trip);
        let b = DMatrix::from_fn(m, n_b, |_, _| rng.random_range(-1.0..1.0));
        BorderedSparseJacobian::new(a, b, border).unwrap()
    }

    #[test]
    fn kkt_solution_satisfies_both_blocks() {
        let jac = random_bordered(40, 60, 6, 3, 5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let inv = DVector::from_fn(60, |_, _| rng.random_range(0.5..2.0));
        let mass = MassSpec::from_inverse_diagonal(inv).unwrap();
        let fac = bordered_lq_factorize(&jac, &mass).unwrap();
        let f = DVector::from_fn(60, |_, _| rng.random_range(-1.0..1.0));
        let g = DVector::from_fn(40, |_, _| rng.random_range(-1.0..1.0));
        let (z, x) = fac.kkt_solve(&f, &g);
        let r1 = &z + fac.apply_jst(&x) - &f;
        let r2 = fac.apply_js(&z) - &g;
        assert!(r1.norm() < 1e-10, "{}", r1.norm());
        assert!(r2.norm() < 1e-10, "{}", r2.norm());
    }

    #[test]
    fn identity_block_without_dense_columns() {
        let jac = BorderedSparseJacobian::new(CsrMatrix::identity(5), DMatrix::zeros(5, 0), vec![]).unwrap();
        let fac = bordered_lq_factorize(&jac, &MassSpec::identity(5)).unwrap();
        let f = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let (z, x) = fac.kkt_solve(&f, &DVector::zeros(5));
        // Q = I, so everything is normal
        assert!(z.norm() < 1e-14);
        assert!((x - f).norm() < 1e-14);
    }

    #[test]
    fn to_dense_places_blocks() {
        let jac = random_bordered(10, 16, 2, 1, 1);
        let d = jac.to_dense();
        assert_eq!(d.shape(), (10, 16));
        assert_eq!(d.columns(14, 2), jac.b.columns(0, 2));
    }
}
