use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::base::ModelOde;

/// Hopf normal form `ẋ = μx − ωy − x r²`, `ẏ = ωx + μy − y r²`.
/// Parameters `[μ, ω]`; the limit cycle for μ > 0 has radius √μ and period 2π/ω.
#[derive(Debug, Clone, Copy, Default)]
pub struct StuartLandau;

impl ModelOde for StuartLandau {
    fn dim(&self) -> usize {
        2
    }
    fn n_params(&self) -> usize {
        2
    }
    fn param_blocks(&self) -> Vec<(String, usize)> {
        vec![("mu".into(), 1), ("freq".into(), 1)]
    }
    fn rhs(&self, y: &[f64], p: &[f64]) -> DVector<f64> {
        let (x, z, mu, w) = (y[0], y[1], p[0], p[1]);
        let r2 = x * x + z * z;
        DVector::from_vec(vec![mu * x - w * z - x * r2, w * x + mu * z - z * r2])
    }
    fn jac_y(&self, y: &[f64], p: &[f64]) -> DMatrix<f64> {
        let (x, z, mu, w) = (y[0], y[1], p[0], p[1]);
        DMatrix::from_row_slice(
            2,
            2,
            &[mu - 3.0 * x * x - z * z, -w - 2.0 * x * z, w - 2.0 * x * z, mu - x * x - 3.0 * z * z],
        )
    }
    fn jac_params(&self, y: &[f64], _p: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[y[0], -y[1], y[1], y[0]])
    }
    fn jac_y_times_vec_derivs(&self, y: &[f64], _p: &[f64], v: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let (x, z) = (y[0], y[1]);
        let dy = DMatrix::from_row_slice(
            2,
            2,
            &[
                -6.0 * x * v[0] - 2.0 * z * v[1],
                -2.0 * z * v[0] - 2.0 * x * v[1],
                -2.0 * z * v[0] - 2.0 * x * v[1],
                -2.0 * x * v[0] - 6.0 * z * v[1],
            ],
        );
        let dp = DMatrix::from_row_slice(2, 2, &[v[0], -v[1], v[1], v[0]]);
        (dy, dp)
    }
}

/// `ẏ₁ = ω y₂`, `ẏ₂ = −ω y₁` with no free parameters.
#[derive(Debug, Clone, Copy)]
pub struct HarmonicOscillator {
    pub omega: f64,
}

impl ModelOde for HarmonicOscillator {
    fn dim(&self) -> usize {
        2
    }
    fn n_params(&self) -> usize {
        0
    }
    fn param_blocks(&self) -> Vec<(String, usize)> {
        Vec::new()
    }
    fn rhs(&self, y: &[f64], _p: &[f64]) -> DVector<f64> {
        DVector::from_vec(vec![self.omega * y[1], -self.omega * y[0]])
    }
    fn jac_y(&self, _y: &[f64], _p: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, self.omega, -self.omega, 0.0])
    }
    fn jac_params(&self, _y: &[f64], _p: &[f64]) -> DMatrix<f64> {
        DMatrix::zeros(2, 0)
    }
    fn jac_y_times_vec_derivs(&self, _y: &[f64], _p: &[f64], _v: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        (DMatrix::zeros(2, 2), DMatrix::zeros(2, 0))
    }
}

/// A model with some parameters held at fixed values; the remaining ones
/// keep their block names (shortened where a block is partly pinned).
#[derive(Clone)]
pub struct PinnedModel<M: ModelOde> {
    inner: Arc<M>,
    values: Vec<f64>,
    free: Vec<usize>,
    blocks: Vec<(String, usize)>,
}

impl<M: ModelOde> PinnedModel<M> {
    /// `pinned` lists `(index, value)` pairs in the inner flat parameter vector.
    pub fn new(inner: M, pinned: &[(usize, f64)]) -> Self {
        let n = inner.n_params();
        let mut values = vec![0.0; n];
        let mut is_free = vec![true; n];
        for &(i, v) in pinned {
            values[i] = v;
            is_free[i] = false;
        }
        let free: Vec<usize> = (0..n).filter(|&i| is_free[i]).collect();
        let mut blocks = Vec::new();
        let mut start = 0;
        for (name, len) in inner.param_blocks() {
            let kept = (start..start + len).filter(|&i| is_free[i]).count();
            if kept > 0 {
                blocks.push((name, kept));
            }
            start += len;
        }
        Self { inner: Arc::new(inner), values, free, blocks }
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    /// Full inner parameter vector from the free parameters.
    pub fn expand(&self, p: &[f64]) -> Vec<f64> {
        let mut full = self.values.clone();
        for (k, &i) in self.free.iter().enumerate() {
            full[i] = p[k];
        }
        full
    }

    fn restrict_columns(&self, m: DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(m.nrows(), self.free.len(), |r, c| m[(r, self.free[c])])
    }
}

impl<M: ModelOde> ModelOde for PinnedModel<M> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn n_params(&self) -> usize {
        self.free.len()
    }
    fn param_blocks(&self) -> Vec<(String, usize)> {
        self.blocks.clone()
    }
    fn rhs(&self, y: &[f64], p: &[f64]) -> DVector<f64> {
        self.inner.rhs(y, &self.expand(p))
    }
    fn jac_y(&self, y: &[f64], p: &[f64]) -> DMatrix<f64> {
        self.inner.jac_y(y, &self.expand(p))
    }
    fn jac_params(&self, y: &[f64], p: &[f64]) -> DMatrix<f64> {
        self.restrict_columns(self.inner.jac_params(y, &self.expand(p)))
    }
    fn jac_y_times_vec_derivs(&self, y: &[f64], p: &[f64], v: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let (dy, dp) = self.inner.jac_y_times_vec_derivs(y, &self.expand(p), v);
        (dy, self.restrict_columns(dp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stuart_landau_second_derivatives_match_default() {
        struct Fd;
        impl ModelOde for Fd {
            fn dim(&self) -> usize {
                2
            }
            fn n_params(&self) -> usize {
                2
            }
            fn param_blocks(&self) -> Vec<(String, usize)> {
                StuartLandau.param_blocks()
            }
            fn rhs(&self, y: &[f64], p: &[f64]) -> DVector<f64> {
                StuartLandau.rhs(y, p)
            }
            fn jac_y(&self, y: &[f64], p: &[f64]) -> DMatrix<f64> {
                StuartLandau.jac_y(y, p)
            }
            fn jac_params(&self, y: &[f64], p: &[f64]) -> DMatrix<f64> {
                StuartLandau.jac_params(y, p)
            }
        }
        let (y, p, v) = ([0.3, -0.7], [0.4, 2.0], [0.9, -0.2]);
        let (a, b) = StuartLandau.jac_y_times_vec_derivs(&y, &p, &v);
        let (c, d) = Fd.jac_y_times_vec_derivs(&y, &p, &v);
        assert!((a - c).amax() < 1e-8 && (b - d).amax() < 1e-8);
    }

    #[test]
    fn pinning_drops_columns_and_blocks() {
        let m = PinnedModel::new(StuartLandau, &[(1, 3.0)]);
        assert_eq!(m.n_params(), 1);
        assert_eq!(m.param_blocks(), vec![("mu".to_string(), 1)]);
        let y = [0.5, 0.1];
        assert_eq!(m.rhs(&y, &[0.2]), StuartLandau.rhs(&y, &[0.2, 3.0]));
        assert_eq!(m.jac_params(&y, &[0.2]).ncols(), 1);
        assert_eq!(m.jac_params(&y, &[0.2])[(1, 0)], 0.1);
    }
}
