use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::base::ModelOde;
use crate::error::{Error, Result};

/// ln(1 + eˣ) without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// 1 / (1 + e⁻ˣ) without overflow.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Cyclic repressilator with `2l + 1` species in log coordinates:
///
/// `f_j = exp(k_{j,0} − y_j) / (1 + exp(n_{j−1} y_{j−1})) − exp(k_{j,1})`
///
/// with `k_{0,1} = 0` fixed. Parameters are flattened as
/// `[k0 (d), k1 (d − 1, species 1..d), n (d)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Repressilator {
    species: usize,
}

impl Repressilator {
    pub fn new(species: usize) -> Result<Self> {
        if species < 3 || species.is_multiple_of(2) {
            return Err(Error::Config(format!("species count must be odd and at least 3, got {species}")));
        }
        Ok(Self { species })
    }

    pub fn three() -> Self {
        Self { species: 3 }
    }

    pub fn species(&self) -> usize {
        self.species
    }

    /// Flat parameter vector from per-species arrays (`k1[0]` is ignored).
    pub fn pack(&self, k0: &[f64], k1: &[f64], n: &[f64]) -> DVector<f64> {
        let d = self.species;
        assert!(k0.len() == d && k1.len() == d && n.len() == d);
        let mut p = Vec::with_capacity(3 * d - 1);
        p.extend_from_slice(k0);
        p.extend_from_slice(&k1[1..]);
        p.extend_from_slice(n);
        DVector::from_vec(p)
    }

    /// Symmetric parameters: every `k_{j,0} = k0`, `k_{j,1} = k1` (species ≥ 1), `n_j = n`.
    pub fn symmetric(&self, k0: f64, k1: f64, n: f64) -> DVector<f64> {
        let d = self.species;
        let mut k1v = vec![k1; d];
        k1v[0] = 0.0;
        self.pack(&vec![k0; d], &k1v, &vec![n; d])
    }

    #[inline]
    fn k0(&self, p: &[f64], j: usize) -> f64 {
        p[j]
    }

    #[inline]
    fn k1(&self, p: &[f64], j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            p[self.species + j - 1]
        }
    }

    #[inline]
    fn n(&self, p: &[f64], j: usize) -> f64 {
        p[2 * self.species - 1 + j]
    }

    #[inline]
    fn prev(&self, j: usize) -> usize {
        (j + self.species - 1) % self.species
    }

    pub fn k0_index(&self, j: usize) -> usize {
        j
    }

    pub fn k1_index(&self, j: usize) -> Option<usize> {
        (j > 0).then(|| self.species + j - 1)
    }

    pub fn n_index(&self, j: usize) -> usize {
        2 * self.species - 1 + j
    }

    /// Parameter blocks with their admissible box.
    pub fn default_bounds(&self) -> Vec<(f64, f64)> {
        let d = self.species;
        let mut b = vec![(-5.0, 5.0); 2 * d - 1];
        b.extend(std::iter::repeat_n((0.0, 10.0), d));
        b
    }

    /// Production term `exp(k_{j,0} − y_j − softplus(n_{j−1} y_{j−1}))` and the
    /// logistic factor of its denominator.
    #[inline]
    fn production(&self, y: &[f64], p: &[f64], j: usize) -> (f64, f64) {
        let i = self.prev(j);
        let u = self.n(p, i) * y[i];
        ((self.k0(p, j) - y[j] - softplus(u)).exp(), logistic(u))
    }
}

impl ModelOde for Repressilator {
    fn dim(&self) -> usize {
        self.species
    }

    fn n_params(&self) -> usize {
        3 * self.species - 1
    }

    fn param_blocks(&self) -> Vec<(String, usize)> {
        let d = self.species;
        vec![("k0".into(), d), ("k1".into(), d - 1), ("n".into(), d)]
    }

    fn rhs(&self, y: &[f64], p: &[f64]) -> DVector<f64> {
        DVector::from_fn(self.species, |j, _| self.production(y, p, j).0 - self.k1(p, j).exp())
    }

    fn jac_y(&self, y: &[f64], p: &[f64]) -> DMatrix<f64> {
        let d = self.species;
        let mut jm = DMatrix::zeros(d, d);
        for j in 0..d {
            let i = self.prev(j);
            let (g, s) = self.production(y, p, j);
            jm[(j, j)] = -g;
            jm[(j, i)] = -g * s * self.n(p, i);
        }
        jm
    }

    fn jac_params(&self, y: &[f64], p: &[f64]) -> DMatrix<f64> {
        let d = self.species;
        let mut jm = DMatrix::zeros(d, self.n_params());
        for j in 0..d {
            let i = self.prev(j);
            let (g, s) = self.production(y, p, j);
            jm[(j, self.k0_index(j))] = g;
            if let Some(c) = self.k1_index(j) {
                jm[(j, c)] = -self.k1(p, j).exp();
            }
            jm[(j, self.n_index(i))] = -g * s * y[i];
        }
        jm
    }

    fn jac_y_times_vec_derivs(&self, y: &[f64], p: &[f64], v: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = self.species;
        let mut dy = DMatrix::zeros(d, d);
        let mut dp = DMatrix::zeros(d, self.n_params());
        for j in 0..d {
            let i = self.prev(j);
            let (g, s) = self.production(y, p, j);
            let ni = self.n(p, i);
            let ds = s * (1.0 - s);
            // (f_y v)_j = −g (v_j + s nᵢ vᵢ)
            let a = v[j] + s * ni * v[i];
            dy[(j, j)] = g * a;
            dy[(j, i)] = g * ni * (s * a - ds * ni * v[i]);
            dp[(j, self.k0_index(j))] = -g * a;
            dp[(j, self.n_index(i))] = g * (s * y[i] * a - ds * y[i] * ni * v[i] - s * v[i]);
        }
        (dy, dp)
    }
}
