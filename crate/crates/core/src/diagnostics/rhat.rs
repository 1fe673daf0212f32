use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue floor below which the within-chain covariance is
/// treated as singular.
const SINGULAR_TOL: f64 = 1e-12;

fn mean(xs: &[DVector<f64>]) -> DVector<f64> {
    xs.iter().fold(DVector::zeros(xs[0].len()), |m, x| m + x) / xs.len() as f64
}

fn covariance(xs: &[DVector<f64>], mu: &DVector<f64>) -> DMatrix<f64> {
    let d = mu.len();
    let mut c = DMatrix::zeros(d, d);
    for x in xs {
        let v = x - mu;
        c.ger(1.0, &v, &v, 1.0);
    }
    c / (xs.len() as f64 - 1.0)
}

/// Within-chain `Σ_a` (mean of chain covariances) and between-chain
/// `Σ_b = N/(M−1) Σ_m (μ_m − μ)(μ_m − μ)ᵀ`.
pub fn chain_covariances(chains: &[Vec<DVector<f64>>]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::Config(format!("R-hat needs at least two chains, got {m}")));
    }
    let n = chains[0].len();
    if n < 2 || chains.iter().any(|c| c.len() != n) {
        return Err(Error::Config("R-hat needs chains of equal length ≥ 2".into()));
    }
    let d = chains[0][0].len();
    if chains.iter().flatten().any(|x| x.len() != d) {
        return Err(Error::Config("samples have mixed dimensions".into()));
    }
    let means: Vec<DVector<f64>> = chains.iter().map(|c| mean(c)).collect();
    let grand = mean(&means);
    let mut within = DMatrix::zeros(d, d);
    for (c, mu) in chains.iter().zip(&means) {
        within += covariance(c, mu);
    }
    within /= m as f64;
    let mut between = DMatrix::zeros(d, d);
    for mu in &means {
        let v = mu - &grand;
        between.ger(1.0, &v, &v, 1.0);
    }
    between *= n as f64 / (m as f64 - 1.0);
    Ok((within, between))
}

/// Multivariate potential scale reduction `‖Σ_a⁻¹ Σ‖₂` with
/// `Σ = ((N−1)/N) Σ_a + (1/N) Σ_b`, evaluated as the largest eigenvalue of
/// the symmetric `Σ_a^{−1/2} Σ Σ_a^{−1/2}`.
pub fn gelman_rubin(chains: &[Vec<DVector<f64>>]) -> Result<f64> {
    let (within, between) = chain_covariances(chains)?;
    let n = chains[0].len() as f64;
    let eig = SymmetricEigen::new(within);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if !(top > 0.0) || eig.eigenvalues.iter().any(|&l| !(l > SINGULAR_TOL * top)) {
        return Err(Error::SingularWithinChainCovariance);
    }
    let inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    let mut s = &inv_sqrt * between * &inv_sqrt;
    s = (&s + s.transpose()) * 0.5;
    // Σ_a^{−1/2} Σ_a Σ_a^{−1/2} = I exactly, so only Σ_b needs the transform
    let lmax = SymmetricEigen::new(s).eigenvalues.iter().cloned().fold(0.0, f64::max);
    Ok((n - 1.0) / n + lmax / n)
}
