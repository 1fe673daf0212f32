use std::fmt::Write as _;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::SimulatedDataset;

/// Dominant mode must carry this multiple of the mean nonzero-mode power.
const DOMINANCE: f64 = 4.0;
const ANCHOR_GRID: usize = 2048;

/// Band-limited interpolant of uniformly sampled data on `[0, T)`,
/// extended periodically.
#[derive(Debug, Clone)]
pub struct TrigInterpolant {
    coeffs: Vec<Complex<f64>>,
    t_total: f64,
}

impl TrigInterpolant {
    pub fn new(values: &[f64], t_total: f64) -> Self {
        let n = values.len();
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        Self { coeffs: buf, t_total }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `|X_k|²` for `k = 0..=n/2`.
    pub fn power(&self) -> Vec<f64> {
        self.coeffs[..=self.len() / 2].iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_deriv(t).0
    }

    /// Value and time derivative at `t`.
    pub fn eval_with_deriv(&self, t: f64) -> (f64, f64) {
        let n = self.len();
        let w0 = 2.0 * std::f64::consts::PI / self.t_total;
        let w = w0 * t;
        let (mut s, mut ds) = (self.coeffs[0].re, 0.0);
        let half = n / 2;
        let top = if n.is_multiple_of(2) { half } else { half + 1 };
        for k in 1..top {
            let z = self.coeffs[k] * Complex::from_polar(1.0, w * k as f64);
            s += 2.0 * z.re;
            ds -= 2.0 * z.im * w0 * k as f64;
        }
        if n.is_multiple_of(2) && n > 1 {
            let a = w * half as f64;
            s += self.coeffs[half].re * a.cos();
            ds -= self.coeffs[half].re * a.sin() * w0 * half as f64;
        }
        (s / n as f64, ds / n as f64)
    }
}

/// Averaged data on a phase grid. `phases` are in units of `tau_data`;
/// the grid point with phase `s` sits at time `origin + s·tau_data`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub tau_data: f64,
    pub periods: usize,
    pub origin: f64,
    pub phases: Vec<f64>,
    pub values: Vec<f64>,
    pub checksum: String,
}

impl Template {
    pub fn times(&self) -> Vec<f64> {
        self.phases.iter().map(|s| self.origin + s * self.tau_data).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# tau_data = {:e}", self.tau_data);
        let _ = writeln!(s, "# periods = {}", self.periods);
        let _ = writeln!(s, "# origin = {:e}", self.origin);
        let _ = writeln!(s, "# checksum = {}", self.checksum);
        s.push_str("phase,value\n");
        for (p, v) in self.phases.iter().zip(&self.values) {
            let _ = writeln!(s, "{p:e},{v:e}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut t = Template { tau_data: 0.0, periods: 1, origin: 0.0, phases: vec![], values: vec![], checksum: String::new() };
        let bad = |what: &str, e: String| Error::Parse(format!("template {what}: {e}"));
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(meta) = line.strip_prefix('#') {
                let Some((k, v)) = meta.split_once('=') else { continue };
                let v = v.trim();
                match k.trim() {
                    "tau_data" => t.tau_data = v.parse().map_err(|e: std::num::ParseFloatError| bad("tau_data", e.to_string()))?,
                    "periods" => t.periods = v.parse().map_err(|e: std::num::ParseIntError| bad("periods", e.to_string()))?,
                    "origin" => t.origin = v.parse().map_err(|e: std::num::ParseFloatError| bad("origin", e.to_string()))?,
                    "checksum" => t.checksum = v.to_string(),
                    _ => {}
                }
                continue;
            }
            if line.starts_with("phase") {
                continue;
            }
            let (p, v) = line.split_once(',').ok_or_else(|| bad("row", line.to_string()))?;
            t.phases.push(p.trim().parse().map_err(|e: std::num::ParseFloatError| bad("phase", e.to_string()))?);
            t.values.push(v.trim().parse().map_err(|e: std::num::ParseFloatError| bad("value", e.to_string()))?);
        }
        if !(t.tau_data > 0.0) || t.values.is_empty() {
            return Err(Error::Parse("template needs tau_data > 0 and at least one row".into()));
        }
        Ok(t)
    }
}

/// FNV-1a digest of the dataset file text, in hex.
pub fn dataset_checksum(ds: &SimulatedDataset) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in ds.to_csv().bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

/// Index of the strongest nonzero Fourier mode of the mean-removed data.
pub fn dominant_mode(values: &[f64]) -> Result<usize> {
    if values.len() < 4 {
        return Err(Error::NoDominantMode);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let centred: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let power = TrigInterpolant::new(&centred, 1.0).power();
    let modes = &power[1..];
    let total: f64 = modes.iter().sum();
    let scale: f64 = values.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    if !(total > 1e-24 * scale * values.len() as f64) {
        return Err(Error::NoDominantMode);
    }
    let (k, peak) = modes.iter().enumerate().fold((0, 0.0), |best, (i, &p)| if p > best.1 { (i, p) } else { best });
    if peak < DOMINANCE * total / modes.len() as f64 {
        return Err(Error::NoDominantMode);
    }
    Ok(k + 1)
}

struct Prepared {
    interp: TrigInterpolant,
    tau: f64,
    k_max: usize,
    per_period: usize,
}

fn prepare(ds: &SimulatedDataset) -> Result<Prepared> {
    let n = ds.observations.len();
    let k_max = dominant_mode(&ds.observations)?;
    if k_max < 2 {
        return Err(Error::Config(format!("data span only {k_max} period; need at least two")));
    }
    let tau = ds.t_total / k_max as f64;
    let per_period = ((n as f64 / k_max as f64).round() as usize).max(8);
    Ok(Prepared { interp: TrigInterpolant::new(&ds.observations, ds.t_total), tau, k_max, per_period })
}

/// Dominant period `τ = T/k_max` and the one-period average
/// `x̄(s) = (1/k_max) Σ_j x((j + s)τ)` on `s = m/M`, with phase 0 moved to
/// the maximum of `x̄`.
pub fn preprocess_constrained(ds: &SimulatedDataset) -> Result<Template> {
    let pr = prepare(ds)?;
    let avg_d = |s: f64| {
        (0..pr.k_max).fold((0.0, 0.0), |acc, j| {
            let (v, d) = pr.interp.eval_with_deriv((j as f64 + s) * pr.tau);
            (acc.0 + v / pr.k_max as f64, acc.1 + d / pr.k_max as f64)
        })
    };
    let avg = |s: f64| avg_d(s).0;
    let anchor = argmax_periodic(&avg_d);
    let m = pr.per_period;
    let phases: Vec<f64> = (0..m).map(|i| i as f64 / m as f64).collect();
    let values = phases.iter().map(|s| avg(anchor + s)).collect();
    Ok(Template { tau_data: pr.tau, periods: 1, origin: anchor * pr.tau, phases, values, checksum: dataset_checksum(ds) })
}

/// Two-period template over `[T − 2τ, T]`, averaging the data over the
/// `⌊T/2τ⌋` consecutive windows of length `2τ` ending at `T`.
pub fn preprocess_ensemble(ds: &SimulatedDataset) -> Result<Template> {
    let pr = prepare(ds)?;
    let windows = (pr.k_max / 2).max(1);
    let span = 2.0 * pr.tau;
    let origin = ds.t_total - span;
    let m = pr.per_period;
    let phases: Vec<f64> = (0..=2 * m).map(|i| i as f64 / m as f64).collect();
    let values = phases
        .iter()
        .map(|s| (0..windows).map(|j| pr.interp.eval(origin + s * pr.tau - j as f64 * span)).sum::<f64>() / windows as f64)
        .collect();
    Ok(Template { tau_data: pr.tau, periods: 2, origin, phases, values, checksum: dataset_checksum(ds) })
}

/// Location in `[0, 1)` of the maximum of a 1-periodic function given with
/// its derivative: grid search, then bisection on the derivative.
fn argmax_periodic<F: Fn(f64) -> (f64, f64)>(f: &F) -> f64 {
    let h = 1.0 / ANCHOR_GRID as f64;
    let (best, _) = (0..ANCHOR_GRID).map(|i| i as f64 * h).fold((0.0, f64::NEG_INFINITY), |b, s| {
        let v = f(s).0;
        if v > b.1 {
            (s, v)
        } else {
            b
        }
    });
    let (mut a, mut b) = (best - h, best + h);
    if !(f(a).1 > 0.0 && f(b).1 < 0.0) {
        return best.rem_euclid(1.0);
    }
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if f(m).1 > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    (0.5 * (a + b)).rem_euclid(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::ModelOde;
    use crate::models::{bundled_dataset, bundled_parameters, Repressilator, BUNDLED_Y0};
    use crate::ode::{tsit5_integrate, IntegratorOptions};
    use nalgebra::DVector;
    use std::f64::consts::PI;

    fn synthetic(f: impl Fn(f64) -> f64, n: usize, t_total: f64) -> SimulatedDataset {
        let times: Vec<f64> = (0..n).map(|i| i as f64 * t_total / n as f64).collect();
        SimulatedDataset {
            species: 3,
            observations: times.iter().map(|&t| f(t)).collect(),
            times,
            noise_var: 0.0,
            t_total,
            params: vec![],
            y0: vec![],
            seed: 0,
        }
    }

    fn sine() -> SimulatedDataset {
        synthetic(|t| (2.0 * PI * t / 5.0).sin(), 100, 30.0)
    }

    #[test]
    fn pure_sine_period() {
        let t = preprocess_constrained(&sine()).unwrap();
        assert_eq!(t.tau_data, 5.0);
        assert_eq!(dominant_mode(&sine().observations).unwrap(), 6);
        // anchored at the crest of the sine
        assert!((t.values[0] - 1.0).abs() < 1e-12);
        assert!((t.origin - 1.25).abs() < 1e-6, "{}", t.origin);
        for (s, v) in t.phases.iter().zip(&t.values) {
            assert!((v - (2.0 * PI * s).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_signal_has_no_mode() {
        assert_eq!(preprocess_constrained(&synthetic(|_| 2.0, 100, 30.0)), Err(Error::NoDominantMode));
    }

    #[test]
    fn interpolant_reproduces_samples() {
        for n in [15, 16] {
            let ds = synthetic(|t| (t * 1.3).sin() + 0.2 * t, n, 7.0);
            let it = TrigInterpolant::new(&ds.observations, 7.0);
            for (t, x) in ds.times.iter().zip(&ds.observations) {
                assert!((it.eval(*t) - x).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ensemble_template_spans_two_periods() {
        let t = preprocess_ensemble(&sine()).unwrap();
        let times = t.times();
        assert!((times[times.len() - 1] - times[0] - 2.0 * t.tau_data).abs() < 1e-12);
        assert_eq!(*times.last().unwrap(), 30.0);
        let m = (t.values.len() - 1) / 2;
        for i in 0..=m {
            assert!((t.values[i] - t.values[i + m]).abs() < 1e-12);
        }
    }

    /// Mean spacing of local maxima of `exp(y₀)` along the noiseless trajectory.
    fn peak_to_peak_period() -> f64 {
        let m = Repressilator::three();
        let p = bundled_parameters();
        let traj = tsit5_integrate(
            |_, y| m.rhs(y, p.as_slice()),
            &DVector::from_column_slice(&BUNDLED_Y0),
            (0.0, 30.0),
            &IntegratorOptions::with_tolerances(1e-10, 1e-12),
        )
        .unwrap();
        let dt = 1e-3;
        let xs: Vec<f64> = (0..30_000).map(|i| traj.interpolate(i as f64 * dt)[0]).collect();
        let peaks: Vec<f64> = (1..xs.len() - 1).filter(|&i| xs[i] > xs[i - 1] && xs[i] >= xs[i + 1]).map(|i| i as f64 * dt).collect();
        (peaks[peaks.len() - 1] - peaks[1]) / (peaks.len() - 2) as f64
    }

    #[test]
    fn bundled_period_matches_peaks() {
        let ds = bundled_dataset().unwrap();
        let t = preprocess_constrained(&ds).unwrap();
        let oracle = peak_to_peak_period();
        assert!((t.tau_data - oracle).abs() / oracle < 0.05, "{} vs {oracle}", t.tau_data);
    }

    #[test]
    fn bundled_ensemble_template_is_tiled_constrained_template() {
        let ds = bundled_dataset().unwrap();
        let one = preprocess_constrained(&ds).unwrap();
        let two = preprocess_ensemble(&ds).unwrap();
        let it = TrigInterpolant::new(&ds.observations, ds.t_total);
        let avg = |s: f64| (0..6).map(|j| it.eval((j as f64 + s) * one.tau_data)).sum::<f64>() / 6.0;
        let noise = ds.noise_var.sqrt();
        let worst = two
            .times()
            .iter()
            .zip(&two.values)
            .map(|(t, v)| (v - avg((t / one.tau_data).rem_euclid(1.0))).abs())
            .fold(0.0, f64::max);
        let rms = (two
            .times()
            .iter()
            .zip(&two.values)
            .map(|(t, v)| (v - avg((t / one.tau_data).rem_euclid(1.0))).powi(2))
            .sum::<f64>()
            / two.values.len() as f64)
            .sqrt();
        // 3-window vs 6-segment averages differ by averaged noise plus transient
        assert!(rms < noise, "rms {rms}, worst {worst}");
    }

    #[test]
    fn circular_period_shift_invariance() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let mut ds = synthetic(|t| (2.0 * PI * t / 5.0).sin().exp() + 0.3 * (4.0 * PI * t / 5.0).cos(), 120, 30.0);
        for x in &mut ds.observations {
            *x += noise.sample(&mut rng);
        }
        // 20 samples per period
        let mut shifted = ds.clone();
        shifted.observations.rotate_left(20);
        let a = preprocess_constrained(&ds).unwrap();
        let b = preprocess_constrained(&shifted).unwrap();
        assert_eq!(a.tau_data, b.tau_data);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn template_csv_round_trip() {
        let t = preprocess_constrained(&bundled_dataset().unwrap()).unwrap();
        let back = Template::from_csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
        assert_eq!(t.checksum.len(), 16);
    }
}
