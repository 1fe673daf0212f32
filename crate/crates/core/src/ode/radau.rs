use nalgebra::{DMatrix, DVector};

use super::{check_finite, error_norm, initial_step, IntegrationResult, IntegratorOptions};
use crate::error::OdeError;

struct Tableau {
    a: [[f64; 3]; 3],
    c: [f64; 3],
    // error-estimate weights and the real eigenvalue of A⁻¹
    dd: [f64; 3],
    gamma0: f64,
}

fn tableau() -> Tableau {
    let s6 = 6f64.sqrt();
    Tableau {
        a: [
            [(88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0],
            [(296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0],
            [(16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0],
        ],
        c: [(4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0],
        dd: [-(13.0 + 7.0 * s6) / 3.0, (-13.0 + 7.0 * s6) / 3.0, -1.0 / 3.0],
        gamma0: {
            let a = 81f64.cbrt();
            let b = 9f64.cbrt();
            30.0 / (6.0 + a - b)
        },
    }
}

const MAX_NEWTON: usize = 7;

/// Integrates `dy/dt = f(t, y)` with the three-stage Radau IIA method (order 5).
/// `jac(t, y)` returns ∂f/∂y.
pub fn radau5_integrate<F, J>(
    f: F,
    jac: J,
    y0: &DVector<f64>,
    t_span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<IntegrationResult, OdeError>
where
    F: Fn(f64, &[f64]) -> DVector<f64>,
    J: Fn(f64, &[f64]) -> DMatrix<f64>,
{
    let (t0, t1) = t_span;
    opts.validate(t0, t1)?;
    check_finite(y0, t0)?;
    let tab = tableau();
    let d = y0.len();
    let mut t = t0;
    let mut y = y0.clone();
    let mut fy = f(t, y.as_slice());
    check_finite(&fy, t)?;
    let mut out = IntegrationResult::start(t, y.clone(), fy.clone());
    let span = t1 - t0;
    let mut h = match (opts.fixed_step, opts.h0) {
        (Some(h), _) => h,
        (None, Some(h)) => h,
        (None, None) => initial_step(&f, t0, &y, &fy, 3, span, opts),
    };
    let fnewt = if opts.fixed_step.is_some() {
        1e-12
    } else {
        (10.0 * f64::EPSILON / opts.rtol).max(0.03f64.min(opts.rtol.sqrt()))
    };
    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;
    let mut newton_failures = 0usize;
    let mut first = true;
    let mut last_rejected = false;
    while t < t1 {
        if steps == opts.max_steps {
            return Err(OdeError::MinStepReached { t });
        }
        steps += 1;
        let last = t + h >= t1 - 1e-12 * span.max(1.0);
        if last {
            h = t1 - t;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(OdeError::MinStepReached { t });
        }
        let jm = jac(t, y.as_slice());
        let scal = DVector::from_iterator(d, y.iter().map(|v| opts.atol + opts.rtol * v.abs()));

        // simplified Newton on the stacked stage increments Z = (Z₁, Z₂, Z₃)
        let mut e = DMatrix::<f64>::identity(3 * d, 3 * d);
        for i in 0..3 {
            for j in 0..3 {
                let mut blk = e.view_mut((i * d, j * d), (d, d));
                blk -= &jm * (h * tab.a[i][j]);
            }
        }
        let lu = e.lu();
        let mut z = DVector::<f64>::zeros(3 * d);
        let mut converged = false;
        let mut prev_norm = f64::INFINITY;
        let mut theta: f64 = 0.0;
        for it in 0..MAX_NEWTON {
            let fs: Vec<DVector<f64>> = (0..3)
                .map(|i| {
                    let yi = &y + z.rows(i * d, d);
                    f(t + tab.c[i] * h, yi.as_slice())
                })
                .collect();
            let mut rhs = -&z;
            for i in 0..3 {
                for j in 0..3 {
                    let mut r = rhs.rows_mut(i * d, d);
                    r.axpy(h * tab.a[i][j], &fs[j], 1.0);
                }
            }
            let dz = match lu.solve(&rhs) {
                Some(dz) if dz.iter().all(|v| v.is_finite()) => dz,
                _ => break,
            };
            let norm = (0..3 * d).map(|k| (dz[k] / scal[k % d]).powi(2)).sum::<f64>().sqrt()
                / ((3 * d) as f64).sqrt();
            if it > 0 {
                theta = norm / prev_norm;
                if theta >= 0.99 {
                    break;
                }
            }
            z += dz;
            let eta = if it == 0 { norm } else { theta / (1.0 - theta) * norm };
            prev_norm = norm;
            if eta <= fnewt || norm == 0.0 {
                converged = true;
                break;
            }
        }
        if !converged {
            newton_failures += 1;
            if newton_failures > 20 {
                return Err(OdeError::NewtonStageFailure { t });
            }
            if opts.fixed_step.is_some() {
                return Err(OdeError::NewtonStageFailure { t });
            }
            out.rejected += 1;
            h *= 0.5;
            last_rejected = true;
            continue;
        }
        newton_failures = 0;
        let y_new = &y + z.rows(2 * d, d);
        let f_new = f(t + h, y_new.as_slice());
        if opts.fixed_step.is_some() {
            if !y_new.iter().chain(f_new.iter()).all(|v| v.is_finite()) {
                return Err(OdeError::NonFinite { t: t + h });
            }
            t = if last { t1 } else { t + h };
            y = y_new;
            fy = f_new;
            out.push(t, y.clone(), fy.clone());
            continue;
        }

        // embedded estimate: (γ₀/h − J) e = f(y) + Σ dd_i Z_i / h
        let mut ee = -jm.clone();
        for i in 0..d {
            ee[(i, i)] += tab.gamma0 / h;
        }
        let elu = ee.lu();
        let mut f2 = DVector::zeros(d);
        for i in 0..3 {
            f2.axpy(tab.dd[i] / h, &z.rows(i * d, d).into_owned(), 1.0);
        }
        let mut est = elu.solve(&(&fy + &f2)).unwrap_or_else(|| DVector::from_element(d, f64::INFINITY));
        let mut err = error_norm(&est, &y, &y_new, opts.rtol, opts.atol);
        if err >= 1.0 && (first || last_rejected) {
            let f1 = f(t, (&y + &est).as_slice());
            est = elu.solve(&(f1 + &f2)).unwrap_or_else(|| DVector::from_element(d, f64::INFINITY));
            err = error_norm(&est, &y, &y_new, opts.rtol, opts.atol);
        }
        if !err.is_finite() {
            err = f64::INFINITY;
        }
        if err <= 1.0 && f_new.iter().all(|v| v.is_finite()) {
            let err_c = err.max(1e-10);
            let fac = opts.safety * err_c.powf(-0.7 / 4.0) * err_prev.powf(0.4 / 4.0);
            t = if last { t1 } else { t + h };
            y = y_new;
            fy = f_new;
            out.push(t, y.clone(), fy.clone());
            err_prev = err_c;
            h *= fac.clamp(opts.min_factor, opts.max_factor);
            first = false;
            last_rejected = false;
        } else {
            out.rejected += 1;
            let fac = if err.is_finite() { opts.safety * err.powf(-0.25) } else { opts.min_factor };
            h *= fac.clamp(opts.min_factor, 1.0);
            last_rejected = true;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collocation_conditions_hold() {
        let tab = tableau();
        // Σ_j a_ij c_j^{k-1} = c_i^k / k for k = 1, 2, 3
        for i in 0..3 {
            for k in 1..=3 {
                let lhs: f64 = (0..3).map(|j| tab.a[i][j] * tab.c[j].powi(k - 1)).sum();
                assert!((lhs - tab.c[i].powi(k) / k as f64).abs() < 1e-14);
            }
        }
        let ainv = DMatrix::from_fn(3, 3, |i, j| tab.a[i][j]).try_inverse().unwrap();
        let eig = ainv.complex_eigenvalues();
        assert!(eig.iter().any(|z| z.im.abs() < 1e-10 && (z.re - tab.gamma0).abs() < 1e-10));
        assert!((tab.gamma0 - 3.637834252744496).abs() < 1e-12);
    }

    #[test]
    fn linear_decay_to_tolerance() {
        let opts = IntegratorOptions::with_tolerances(1e-8, 1e-10);
        let r = radau5_integrate(
            |_, y| DVector::from_element(1, -2.0 * y[0]),
            |_, _| DMatrix::from_element(1, 1, -2.0),
            &DVector::from_element(1, 1.0),
            (0.0, 1.0),
            &opts,
        )
        .unwrap();
        let exact = (-2.0f64).exp();
        assert!((r.final_state()[0] - exact).abs() < 1e-8 * 10.0 * exact.max(1.0));
    }

    #[test]
    fn stiff_forcing_tracks_quasi_steady_state() {
        let lam = 1e6;
        let r = radau5_integrate(
            |t, y| DVector::from_element(1, -lam * (y[0] - t.cos())),
            |_, _| DMatrix::from_element(1, 1, -lam),
            &DVector::from_element(1, 0.0),
            (0.0, 2.0),
            &IntegratorOptions::default(),
        )
        .unwrap();
        // explicit stability limit is 2/λ = 2e-6
        assert!(r.accepted < 2000, "{} steps", r.accepted);
        let max_h = r.t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        assert!(max_h > 1e3 * 2.0 / lam);
        for (t, y) in r.t.iter().zip(&r.y).filter(|(t, _)| **t > 1e-3) {
            assert!((y[0] - t.cos()).abs() < 1e-4, "t = {t}");
        }
    }

    #[test]
    fn fixed_steps_have_fifth_order() {
        let hs: Vec<f64> = (0..5).map(|k| 0.5 / 2f64.powi(k)).collect();
        let errs: Vec<f64> = hs
            .iter()
            .map(|&h| {
                let r = radau5_integrate(
                    |_, y| DVector::from_element(1, -y[0]),
                    |_, _| DMatrix::from_element(1, 1, -1.0),
                    &DVector::from_element(1, 1.0),
                    (0.0, 2.0),
                    &IntegratorOptions::fixed(h),
                )
                .unwrap();
                (r.final_state()[0] - (-2.0f64).exp()).abs()
            })
            .collect();
        let slope = crate::ode::tests_support::loglog_slope(&hs, &errs);
        assert!((slope - 5.0).abs() < 0.3, "slope {slope}, errors {errs:?}");
    }
}
