use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

pub const MIN_SERIES_LEN: usize = 10;

/// Normalized autocorrelation `C(t)` for `t = 0..N`, from the FFT of the
/// mean-removed series zero-padded to a power of two ≥ 2N.
pub fn autocorrelation(series: &[f64]) -> Result<Vec<f64>> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let len = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series.iter().map(|x| Complex::new(x - mean, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for z in &mut buf {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let c0 = buf[0].re;
    let scale = series.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if !(c0 > (n as f64) * len as f64 * (1e-14 * scale).powi(2)) || !c0.is_finite() {
        return Err(Error::DegenerateSeries);
    }
    Ok(buf[..n].iter().map(|z| z.re / c0).collect())
}

/// Integrated autocorrelation time `−1 + 2 Σ_t C(t)`, the sum truncated by
/// Geyer's initial positive sequence: pairs `C(2k) + C(2k+1)` are added
/// until the first nonpositive one.
pub fn integrated_autocorrelation_time(series: &[f64]) -> Result<f64> {
    if series.len() < MIN_SERIES_LEN {
        return Err(Error::Config(format!("series of length {} is too short for ESS", series.len())));
    }
    let rho = autocorrelation(series)?;
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < rho.len() {
        let pair = rho[2 * k] + rho[2 * k + 1];
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 1;
    }
    Ok(-1.0 + 2.0 * sum)
}

/// Effective sample size `N / τ_int`, capped at `N`. Antithetic series can
/// give `τ_int ≤ 1`, even negative under truncation; those report `N`.
pub fn ess(series: &[f64]) -> Result<f64> {
    let tau = integrated_autocorrelation_time(series)?;
    let n = series.len() as f64;
    Ok(if tau > 1.0 { n / tau } else { n })
}
