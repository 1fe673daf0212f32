use nalgebra::{Complex, DMatrix, DVector};

use super::fixed_point::{FixedPointConstraint, HopfConstraint};
use crate::error::{Error, Result};

type C64 = Complex<f64>;

/// Eigenvalue of `j` with positive imaginary part minimizing `|Re ζ / Im ζ|`,
/// with its eigenvector (unit norm, first component real and non-negative).
pub fn leading_oscillatory_mode(j: &DMatrix<f64>) -> Result<(f64, C64, DVector<C64>)> {
    let eig = j.complex_eigenvalues();
    let scale = j.norm().max(1e-300);
    let best = eig
        .iter()
        .filter(|z| z.im > 1e-12 * scale)
        .map(|z| ((z.re / z.im).abs(), *z))
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let (ratio, zeta) = best.ok_or(Error::NoComplexPair)?;
    let v = eigenvector(j, zeta);
    Ok((ratio, zeta, v))
}

/// Inverse iteration at a slightly shifted eigenvalue.
pub fn eigenvector(j: &DMatrix<f64>, zeta: C64) -> DVector<C64> {
    let d = j.nrows();
    let shift = zeta + C64::new(1e-10 * (1.0 + zeta.norm()), 1e-10 * (1.0 + zeta.norm()));
    let a = DMatrix::from_fn(d, d, |r, c| {
        let v = C64::new(j[(r, c)], 0.0);
        if r == c {
            v - shift
        } else {
            v
        }
    });
    let lu = a.lu();
    let mut x = DVector::from_fn(d, |i, _| C64::new(1.0 + 0.1 * i as f64, 0.3 - 0.05 * i as f64));
    for _ in 0..4 {
        if let Some(nx) = lu.solve(&x) {
            let n = nx.norm();
            if n.is_finite() && n > 0.0 {
                x = nx.unscale(n);
            }
        }
    }
    normalize_phase(x)
}

fn normalize_phase(mut v: DVector<C64>) -> DVector<C64> {
    let n = v.norm();
    if n > 0.0 {
        v.unscale_mut(n);
    }
    let v0 = v[0];
    if v0.norm() > 0.0 {
        let rot = v0.conj() / v0.norm();
        v.iter_mut().for_each(|z| *z *= rot);
    }
    v
}

/// Largest distance from ±iω to the nearest eigenvalue of `j`.
pub fn imaginary_pair_distance(j: &DMatrix<f64>, omega: f64) -> f64 {
    let eig = j.complex_eigenvalues();
    let near = |target: C64| eig.iter().map(|z| (z - target).norm()).fold(f64::INFINITY, f64::min);
    near(C64::new(0.0, omega)).max(near(C64::new(0.0, -omega)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopfCandidate {
    /// Position of the source sample in the input batch.
    pub index: usize,
    pub ratio: f64,
    pub eigenvalue: C64,
    /// Starting point in the Hopf layout.
    pub q0: DVector<f64>,
}

/// Ranks fixed-point samples by how close their most oscillatory mode is to
/// the imaginary axis and packages each as a Hopf-system starting point.
pub fn select_hopf_candidates(
    fixed: &FixedPointConstraint,
    hopf: &HopfConstraint,
    samples: &[DVector<f64>],
) -> Result<Vec<HopfCandidate>> {
    let mut out = Vec::new();
    for (index, q) in samples.iter().enumerate() {
        let (y, p) = fixed.split(q);
        let j = fixed.jac_y(q);
        let Ok((ratio, zeta, v)) = leading_oscillatory_mode(&j) else { continue };
        let re: Vec<f64> = v.iter().map(|z| z.re).collect();
        let mut im: Vec<f64> = v.iter().map(|z| z.im).collect();
        im[0] = 0.0;
        out.push(HopfCandidate { index, ratio, eigenvalue: zeta, q0: hopf.assemble(y, p, &re, &im, zeta.im) });
    }
    if out.is_empty() {
        return Err(Error::NoComplexPair);
    }
    out.sort_by(|a, b| a.ratio.total_cmp(&b.ratio));
    Ok(out)
}
