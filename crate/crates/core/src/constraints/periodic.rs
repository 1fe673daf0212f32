use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::fixed_point::layout_with_params;
use crate::base::{ConstraintJacobian, ConstraintSystem, ModelOde, StructureTag, VariableLayout};
use crate::error::{Error, Result};
use crate::linalg::{BorderedSparseJacobian, CsrMatrix};

const SQRT3_6: f64 = 0.288_675_134_594_812_9;
/// Gauss–Legendre nodes on [0, 1].
pub const GAUSS2: [f64; 2] = [0.5 - SQRT3_6, 0.5 + SQRT3_6];

/// Five-point Gauss–Legendre rule on [0, 1].
pub(crate) fn gauss5() -> [(f64, f64); 5] {
    let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let wa = (322.0 + 13.0 * 70f64.sqrt()) / 900.0;
    let wb = (322.0 - 13.0 * 70f64.sqrt()) / 900.0;
    let w0 = 128.0 / 225.0;
    [
        (0.5 * (1.0 - b), 0.5 * wb),
        (0.5 * (1.0 - a), 0.5 * wa),
        (0.5, 0.5 * w0),
        (0.5 * (1.0 + a), 0.5 * wa),
        (0.5 * (1.0 + b), 0.5 * wb),
    ]
}

/// Quadratic Lagrange basis at ξ = 0, ½, 1.
#[inline]
pub(crate) fn basis(xi: f64) -> [f64; 3] {
    [2.0 * (xi - 0.5) * (xi - 1.0), -4.0 * xi * (xi - 1.0), 2.0 * xi * (xi - 0.5)]
}

#[inline]
pub(crate) fn basis_deriv(xi: f64) -> [f64; 3] {
    [4.0 * xi - 3.0, 4.0 - 8.0 * xi, 4.0 * xi - 1.0]
}

/// Periodic orbit of `dy/dt = f(y, params)` rescaled to `s ∈ [0, 1]`,
/// discretized by piecewise quadratics collocated at two Gauss points per
/// element, with an adaptive mesh.
///
/// Unknowns: `y` at mesh points and element midpoints (`2N + 1` points, the
/// two ends kept separate), interior mesh points, the total mesh density σ,
/// the period τ, then the model parameters. Residuals per element `i`:
///
/// ```text
/// Σ_k y_k ℓ_k'(ξ_j) − h_i τ f(p_i(ξ_j)) = 0      j = 1, 2
/// h_i ρ_i − σ / N = 0,   ρ = (1 + ‖d²y/ds²‖²)^{1/4}
/// ```
///
/// followed by periodicity `y(0) − y(1) = 0`. No phase condition is imposed.
#[derive(Clone)]
pub struct PeriodicOrbitConstraint {
    model: Arc<dyn ModelOde>,
    n_mesh: usize,
    layout: Arc<VariableLayout>,
}

pub fn build_periodic(model: Arc<dyn ModelOde>, n_mesh: usize) -> Result<PeriodicOrbitConstraint> {
    if n_mesh < 4 {
        return Err(Error::Config(format!("need at least 4 mesh intervals, got {n_mesh}")));
    }
    let d = model.dim();
    let layout = layout_with_params(
        model.as_ref(),
        vec![
            ("y".into(), d * (2 * n_mesh + 1)),
            ("mesh".into(), n_mesh - 1),
            ("sigma".into(), 1),
            ("tau".into(), 1),
        ],
        vec![],
    );
    Ok(PeriodicOrbitConstraint { model, n_mesh, layout })
}

/// Decoded view of a periodic-orbit vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationMesh {
    /// `s₀ = 0, …, s_N = 1`.
    pub mesh: Vec<f64>,
    /// Values at `s₀, mid₀, s₁, mid₁, …, s_N`.
    pub points: Vec<DVector<f64>>,
    pub sigma: f64,
    pub tau: f64,
    pub params: Vec<f64>,
}

impl CollocationMesh {
    pub fn n_mesh(&self) -> usize {
        self.mesh.len() - 1
    }

    pub fn element_of(&self, s: f64) -> usize {
        let n = self.n_mesh();
        (self.mesh.partition_point(|&m| m <= s).max(1) - 1).min(n - 1)
    }

    fn element_values(&self, i: usize) -> [&DVector<f64>; 3] {
        [&self.points[2 * i], &self.points[2 * i + 1], &self.points[2 * i + 2]]
    }

    pub fn eval(&self, s: f64) -> DVector<f64> {
        let i = self.element_of(s);
        let h = self.mesh[i + 1] - self.mesh[i];
        let l = basis((s - self.mesh[i]) / h);
        let [a, b, c] = self.element_values(i);
        a * l[0] + b * l[1] + c * l[2]
    }

    /// `dy/ds`
    pub fn eval_deriv(&self, s: f64) -> DVector<f64> {
        let i = self.element_of(s);
        let h = self.mesh[i + 1] - self.mesh[i];
        let l = basis_deriv((s - self.mesh[i]) / h);
        let [a, b, c] = self.element_values(i);
        (a * l[0] + b * l[1] + c * l[2]) / h
    }

    /// `∫₀¹ ‖dy/ds‖ ds` by five-point Gauss quadrature per element.
    pub fn arc_length(&self) -> f64 {
        let g = gauss5();
        (0..self.n_mesh())
            .map(|i| {
                let [a, b, c] = self.element_values(i);
                g.iter()
                    .map(|&(xi, w)| {
                        let l = basis_deriv(xi);
                        w * ((a - b) * l[0] + (c - b) * l[2]).norm()
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Per-element `∫ρ ds`.
    pub fn element_densities(&self) -> Vec<f64> {
        (0..self.n_mesh())
            .map(|i| {
                let h = self.mesh[i + 1] - self.mesh[i];
                let [a, b, c] = self.element_values(i);
                let acc = (a - b * 2.0 + c) * (4.0 / (h * h));
                h * (1.0 + acc.norm_squared()).powf(0.25)
            })
            .collect()
    }

    /// CSV rows `s, y_0 … y_{d−1}` at mesh points and midpoints, with τ and
    /// the parameters in the header.
    pub fn to_csv(&self, param_names: &[String]) -> String {
        let d = self.points[0].len();
        let mut out = String::new();
        let _ = writeln!(out, "# tau = {:e}", self.tau);
        let _ = writeln!(out, "# n_mesh = {}", self.n_mesh());
        for (name, v) in param_names.iter().zip(&self.params) {
            let _ = writeln!(out, "# {name} = {v:e}");
        }
        out.push('s');
        for c in 0..d {
            let _ = write!(out, ",y_{c}");
        }
        out.push('\n');
        for (k, p) in self.points.iter().enumerate() {
            let s = if k % 2 == 0 {
                self.mesh[k / 2]
            } else {
                0.5 * (self.mesh[k / 2] + self.mesh[k / 2 + 1])
            };
            let _ = write!(out, "{s:e}");
            for v in p.iter() {
                let _ = write!(out, ",{v:e}");
            }
            out.push('\n');
        }
        out
    }
}

impl PeriodicOrbitConstraint {
    pub fn model(&self) -> &Arc<dyn ModelOde> {
        &self.model
    }

    pub fn n_mesh(&self) -> usize {
        self.n_mesh
    }

    fn d(&self) -> usize {
        self.model.dim()
    }

    fn n_y(&self) -> usize {
        self.d() * (2 * self.n_mesh + 1)
    }

    /// Index of component `c` of collocation point `k`.
    pub fn y_index(&self, k: usize, c: usize) -> usize {
        k * self.d() + c
    }

    /// Index of interior mesh point `i` (1 ≤ i < N).
    pub fn mesh_index(&self, i: usize) -> Option<usize> {
        (i > 0 && i < self.n_mesh).then(|| self.n_y() + i - 1)
    }

    pub fn sigma_index(&self) -> usize {
        self.n_y() + self.n_mesh - 1
    }

    pub fn tau_index(&self) -> usize {
        self.sigma_index() + 1
    }

    pub fn params_start(&self) -> usize {
        self.tau_index() + 1
    }

    pub fn params<'a>(&self, q: &'a DVector<f64>) -> &'a [f64] {
        &q.as_slice()[self.params_start()..]
    }

    fn mesh_point(&self, q: &DVector<f64>, i: usize) -> f64 {
        match self.mesh_index(i) {
            Some(k) => q[k],
            None if i == 0 => 0.0,
            None => 1.0,
        }
    }

    fn point<'a>(&self, q: &'a DVector<f64>, k: usize) -> &'a [f64] {
        let d = self.d();
        &q.as_slice()[k * d..(k + 1) * d]
    }

    pub fn decode(&self, q: &DVector<f64>) -> CollocationMesh {
        let mesh = (0..=self.n_mesh).map(|i| self.mesh_point(q, i)).collect();
        let points = (0..=2 * self.n_mesh).map(|k| DVector::from_column_slice(self.point(q, k))).collect();
        CollocationMesh {
            mesh,
            points,
            sigma: q[self.sigma_index()],
            tau: q[self.tau_index()],
            params: self.params(q).to_vec(),
        }
    }

    /// Value of `y_comp(s)` and its gradient w.r.t. `q` as sparse `(index, ∂)` pairs.
    pub fn eval_with_grad(&self, q: &DVector<f64>, s: f64, comp: usize) -> (f64, Vec<(usize, f64)>) {
        let mesh: Vec<f64> = (0..=self.n_mesh).map(|i| self.mesh_point(q, i)).collect();
        let i = (mesh.partition_point(|&m| m <= s).max(1) - 1).min(self.n_mesh - 1);
        let h = mesh[i + 1] - mesh[i];
        let xi = (s - mesh[i]) / h;
        let l = basis(xi);
        let dl = basis_deriv(xi);
        let mut val = 0.0;
        let mut dxi = 0.0;
        let mut grad = Vec::with_capacity(5);
        for k in 0..3 {
            let idx = self.y_index(2 * i + k, comp);
            val += q[idx] * l[k];
            dxi += q[idx] * dl[k];
            grad.push((idx, l[k]));
        }
        if let Some(m) = self.mesh_index(i) {
            grad.push((m, dxi * (xi - 1.0) / h));
        }
        if let Some(m) = self.mesh_index(i + 1) {
            grad.push((m, -dxi * xi / h));
        }
        (val, grad)
    }

    /// Arc length and its gradient w.r.t. `q`.
    pub fn arc_length_with_grad(&self, q: &DVector<f64>) -> (f64, DVector<f64>) {
        let d = self.d();
        let g = gauss5();
        let mut grad = DVector::zeros(q.len());
        let mut total = 0.0;
        for i in 0..self.n_mesh {
            for &(xi, w) in &g {
                let dl = basis_deriv(xi);
                // Σ ℓ_k' = 0, so differences keep constant pieces exactly flat
                let (a, b, c) = (self.point(q, 2 * i), self.point(q, 2 * i + 1), self.point(q, 2 * i + 2));
                let v = DVector::from_fn(d, |r, _| (a[r] - b[r]) * dl[0] + (c[r] - b[r]) * dl[2]);
                let n = v.norm();
                total += w * n;
                if n > 0.0 {
                    for k in 0..3 {
                        for c in 0..d {
                            grad[self.y_index(2 * i + k, c)] += w * dl[k] * v[c] / n;
                        }
                    }
                }
            }
        }
        (total, grad)
    }

    /// Builds an unknown vector from a closed curve `s ↦ y(s)` on [0, 1]:
    /// the mesh equidistributes ρ of the curve, σ is the discrete total.
    pub fn from_curve<F>(&self, curve: F, tau: f64, params: &[f64]) -> DVector<f64>
    where
        F: Fn(f64) -> DVector<f64>,
    {
        let n = self.n_mesh;
        let d = self.d();
        let fine = 64 * n;
        let hf = 1.0 / fine as f64;
        let samples: Vec<DVector<f64>> = (0..=fine).map(|j| curve(j as f64 * hf)).collect();
        // ρ from centered second differences of the curve, wrapped periodically
        let rho: Vec<f64> = (0..fine)
            .map(|j| {
                let prev = if j == 0 { &samples[fine - 1] } else { &samples[j - 1] };
                let acc = (prev - &samples[j] * 2.0 + &samples[j + 1]) / (hf * hf);
                (1.0 + acc.norm_squared()).powf(0.25)
            })
            .collect();
        let mut cum = vec![0.0; fine + 1];
        for j in 0..fine {
            cum[j + 1] = cum[j] + 0.5 * hf * (rho[j] + rho[(j + 1) % fine]);
        }
        let total = cum[fine];
        let mut mesh = vec![0.0; n + 1];
        mesh[n] = 1.0;
        for (i, m) in mesh.iter_mut().enumerate().take(n).skip(1) {
            let target = total * i as f64 / n as f64;
            let j = cum.partition_point(|&c| c < target).clamp(1, fine);
            let frac = (target - cum[j - 1]) / (cum[j] - cum[j - 1]).max(1e-300);
            *m = (j as f64 - 1.0 + frac) * hf;
        }
        let mut q = DVector::zeros(self.layout.total_len());
        for i in 0..n {
            for (k, s) in [(2 * i, mesh[i]), (2 * i + 1, 0.5 * (mesh[i] + mesh[i + 1]))] {
                let y = curve(s);
                for c in 0..d {
                    q[self.y_index(k, c)] = y[c];
                }
            }
        }
        let y_end = curve(1.0);
        for c in 0..d {
            q[self.y_index(2 * n, c)] = y_end[c];
        }
        for i in 1..n {
            q[self.mesh_index(i).unwrap()] = mesh[i];
        }
        q[self.tau_index()] = tau;
        let ps = self.params_start();
        q.as_mut_slice()[ps..].copy_from_slice(params);
        let sigma: f64 = self.decode(&q).element_densities().iter().sum();
        q[self.sigma_index()] = sigma;
        q
    }

    fn element_row(&self, i: usize) -> usize {
        i * (2 * self.d() + 1)
    }
}

impl ConstraintSystem for PeriodicOrbitConstraint {
    fn layout(&self) -> &Arc<VariableLayout> {
        &self.layout
    }

    fn n_constraints(&self) -> usize {
        2 * self.d() * self.n_mesh + self.d() + self.n_mesh
    }

    fn structure(&self) -> StructureTag {
        StructureTag::BorderedSparse
    }

    fn residual(&self, q: &DVector<f64>) -> DVector<f64> {
        let d = self.d();
        let n = self.n_mesh;
        let tau = q[self.tau_index()];
        let sigma = q[self.sigma_index()];
        let params = self.params(q);
        let mut r = DVector::zeros(self.n_constraints());
        for i in 0..n {
            let h = self.mesh_point(q, i + 1) - self.mesh_point(q, i);
            let pts = [self.point(q, 2 * i), self.point(q, 2 * i + 1), self.point(q, 2 * i + 2)];
            let row = self.element_row(i);
            for (j, &xi) in GAUSS2.iter().enumerate() {
                let l = basis(xi);
                let dl = basis_deriv(xi);
                let p: Vec<f64> = (0..d).map(|c| (0..3).map(|k| pts[k][c] * l[k]).sum()).collect();
                let f = self.model.rhs(&p, params);
                for c in 0..d {
                    let dp: f64 = (0..3).map(|k| pts[k][c] * dl[k]).sum();
                    r[row + j * d + c] = dp - h * tau * f[c];
                }
            }
            let acc2: f64 = (0..d)
                .map(|c| (4.0 * (pts[0][c] - 2.0 * pts[1][c] + pts[2][c]) / (h * h)).powi(2))
                .sum();
            r[row + 2 * d] = h * (1.0 + acc2).powf(0.25) - sigma / n as f64;
        }
        let base = n * (2 * d + 1);
        for c in 0..d {
            r[base + c] = q[self.y_index(0, c)] - q[self.y_index(2 * n, c)];
        }
        r
    }

    fn jacobian(&self, q: &DVector<f64>) -> ConstraintJacobian {
        let d = self.d();
        let n = self.n_mesh;
        let np = self.model.n_params();
        let tau = q[self.tau_index()];
        let params = self.params(q);
        let m = self.n_constraints();
        let n_a = self.n_y() + n - 1;
        let n_b = 2 + np;
        let (col_sigma, col_tau, col_p) = (0, 1, 2);
        let mut trip = Vec::with_capacity(n * (2 * d * (3 * d + 2) + 3 * d + 2) + 2 * d);
        let mut b = DMatrix::zeros(m, n_b);
        let mut border = Vec::with_capacity(n + d);
        for i in 0..n {
            let h = self.mesh_point(q, i + 1) - self.mesh_point(q, i);
            let pts = [self.point(q, 2 * i), self.point(q, 2 * i + 1), self.point(q, 2 * i + 2)];
            let row = self.element_row(i);
            let left = self.mesh_index(i);
            let right = self.mesh_index(i + 1);
            for (j, &xi) in GAUSS2.iter().enumerate() {
                let l = basis(xi);
                let dl = basis_deriv(xi);
                let p: Vec<f64> = (0..d).map(|c| (0..3).map(|k| pts[k][c] * l[k]).sum()).collect();
                let f = self.model.rhs(&p, params);
                let fy = self.model.jac_y(&p, params);
                let fp = self.model.jac_params(&p, params);
                for r_c in 0..d {
                    let rr = row + j * d + r_c;
                    for k in 0..3 {
                        for c in 0..d {
                            let mut v = -h * tau * fy[(r_c, c)] * l[k];
                            if c == r_c {
                                v += dl[k];
                            }
                            if v != 0.0 {
                                trip.push((rr, self.y_index(2 * i + k, c), v));
                            }
                        }
                    }
                    // ∂/∂h = −τ f, h = s_{i+1} − s_i
                    if let Some(col) = right {
                        trip.push((rr, col, -tau * f[r_c]));
                    }
                    if let Some(col) = left {
                        trip.push((rr, col, tau * f[r_c]));
                    }
                    b[(rr, col_tau)] = -h * f[r_c];
                    for c in 0..np {
                        b[(rr, col_p + c)] = -h * tau * fp[(r_c, c)];
                    }
                }
            }
            let rr = row + 2 * d;
            border.push(rr);
            let acc: Vec<f64> = (0..d).map(|c| 4.0 * (pts[0][c] - 2.0 * pts[1][c] + pts[2][c]) / (h * h)).collect();
            let a2: f64 = acc.iter().map(|v| v * v).sum();
            let rho = (1.0 + a2).powf(0.25);
            let g = 0.5 * (1.0 + a2).powf(-0.75);
            for c in 0..d {
                // ∂(hρ)/∂y_k = h g a · ∂a/∂y_k with ∂a/∂y = (4, −8, 4)/h²
                let base = h * g * acc[c] * 4.0 / (h * h);
                for (k, w) in [(0, 1.0), (1, -2.0), (2, 1.0)] {
                    trip.push((rr, self.y_index(2 * i + k, c), base * w));
                }
            }
            let dh = rho - a2 * (1.0 + a2).powf(-0.75);
            if let Some(col) = right {
                trip.push((rr, col, dh));
            }
            if let Some(col) = left {
                trip.push((rr, col, -dh));
            }
            b[(rr, col_sigma)] = -1.0 / n as f64;
        }
        let base = n * (2 * d + 1);
        for c in 0..d {
            trip.push((base + c, self.y_index(0, c), 1.0));
            trip.push((base + c, self.y_index(2 * n, c), -1.0));
            border.push(base + c);
        }
        let a = CsrMatrix::from_triplets(m, n_a, trip);
        ConstraintJacobian::Bordered(BorderedSparseJacobian::new(a, b, border).expect("consistent shapes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::check_jacobian;
    use crate::models::{HarmonicOscillator, Repressilator};
    use std::f64::consts::PI;

    #[test]
    fn counts_match_layout() {
        let c = build_periodic(Arc::new(Repressilator::three()), 60).unwrap();
        assert_eq!(c.n_constraints(), 3 * 120 + 3 + 59 + 1);
        assert_eq!(c.dim() - c.n_constraints(), 8 + 1);
        assert!(build_periodic(Arc::new(Repressilator::three()), 3).is_err());
    }

    #[test]
    fn gauss5_integrates_degree_nine() {
        let g = gauss5();
        let s: f64 = g.iter().map(|(x, w)| w * x.powi(9)).sum();
        assert!((s - 0.1).abs() < 1e-15);
    }

    #[test]
    fn harmonic_substitution_residual_is_fourth_order() {
        // ẏ₁ = 2π y₂, ẏ₂ = −2π y₁ is solved by (cos 2πs, −sin 2πs) with τ = 1
        let model = Arc::new(HarmonicOscillator { omega: 2.0 * PI });
        let mut res = Vec::new();
        for n in [10, 20, 40, 80] {
            let c = build_periodic(model.clone(), n).unwrap();
            let q = c.from_curve(|s| DVector::from_vec(vec![(2.0 * PI * s).cos(), -(2.0 * PI * s).sin()]), 1.0, &[]);
            let mesh = c.decode(&q);
            let uniform = mesh.mesh.windows(2).all(|w| ((w[1] - w[0]) * n as f64 - 1.0).abs() < 1e-6);
            assert!(uniform);
            res.push(c.residual(&q).amax());
        }
        // closed-form value of the local residual at N = 20, computed independently
        assert!((res[1] - 5.7932e-5).abs() < 2e-8, "{res:?}");
        for w in res.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!((rate - 4.0).abs() < 0.1, "{res:?}");
        }
        assert!(res[2] < 1e-5);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let model = Arc::new(Repressilator::three());
        let c = build_periodic(model.clone(), 8).unwrap();
        let p = crate::models::bundled_parameters();
        let q = c.from_curve(
            |s| {
                let t = 2.0 * PI * s;
                DVector::from_vec(vec![t.cos(), (t - 2.0).cos(), (t + 2.0).sin() * 0.7])
            },
            5.0,
            p.as_slice(),
        );
        let err = check_jacobian(&c, &q, 1e-6).unwrap();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn eval_gradient_matches_finite_differences() {
        let model = Arc::new(Repressilator::three());
        let c = build_periodic(model, 6).unwrap();
        let mut q = c.from_curve(|s| DVector::from_vec(vec![(7.0 * s).sin(), s * s, s.cos()]), 3.0, &[0.0; 8]);
        q[c.mesh_index(2).unwrap()] += 0.03;
        for s in [0.05, 0.41, 0.77] {
            let (_, g) = c.eval_with_grad(&q, s, 1);
            let mut dense = DVector::<f64>::zeros(q.len());
            for (i, v) in g {
                dense[i] += v;
            }
            for i in 0..q.len() {
                let h = 1e-6;
                let mut a = q.clone();
                a[i] += h;
                let mut b = q.clone();
                b[i] -= h;
                let fd = (c.eval_with_grad(&a, s, 1).0 - c.eval_with_grad(&b, s, 1).0) / (2.0 * h);
                assert!((fd - dense[i]).abs() < 1e-6, "s {s} index {i}: {fd} vs {}", dense[i]);
            }
        }
        let (l, g) = c.arc_length_with_grad(&q);
        assert!((l - c.decode(&q).arc_length()).abs() < 1e-14);
        for i in 0..q.len() {
            let h = 1e-6;
            let mut a = q.clone();
            a[i] += h;
            let mut b = q.clone();
            b[i] -= h;
            let fd = (c.arc_length_with_grad(&a).0 - c.arc_length_with_grad(&b).0) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn unit_circle_arc_length() {
        let c = build_periodic(Arc::new(HarmonicOscillator { omega: 2.0 * PI }), 20).unwrap();
        let q = c.from_curve(|s| DVector::from_vec(vec![(2.0 * PI * s).cos(), -(2.0 * PI * s).sin()]), 1.0, &[]);
        assert!((c.decode(&q).arc_length() - 2.0 * PI).abs() < 1e-3);
        let q0 = c.from_curve(|_| DVector::from_vec(vec![0.3, -0.2]), 1.0, &[]);
        assert_eq!(c.decode(&q0).arc_length(), 0.0);
    }
}
