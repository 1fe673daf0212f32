use nalgebra::DVector;

use super::{check_finite, error_norm, initial_step, IntegrationResult, IntegratorOptions};
use crate::error::OdeError;

const C: [f64; 6] = [0.161, 0.327, 0.9, 0.9800255409045097, 1.0, 1.0];

const A: [[f64; 6]; 6] = [
    [0.161, 0.0, 0.0, 0.0, 0.0, 0.0],
    [-0.008480655492356989, 0.335480655492357, 0.0, 0.0, 0.0, 0.0],
    [2.897153057105493, -6.359448489975075, 4.3622954328695815, 0.0, 0.0, 0.0],
    [5.325864828439257, -11.748883564062828, 7.4955393428898365, -0.09249506636175525, 0.0, 0.0],
    [5.86145544294642, -12.92096931784711, 8.159367898576159, -0.071584973281401, -0.028269050394068383, 0.0],
    [
        0.09646076681806523,
        0.01,
        0.4798896504144996,
        1.379008574103742,
        -3.290069515436081,
        2.324710524099774,
    ],
];

// b − b̂; the last entry multiplies the FSAL stage.
const BTILDE: [f64; 7] = [
    -0.001780011052225777,
    -0.0008164344596567469,
    0.007880878010261995,
    -0.1447110071732629,
    0.5823571654525552,
    -0.45808210592918697,
    1.0 / 66.0,
];

/// Integrates `dy/dt = f(t, y)` over `t_span` with the Tsitouras 5(4) pair.
pub fn tsit5_integrate<F>(
    f: F,
    y0: &DVector<f64>,
    t_span: (f64, f64),
    opts: &IntegratorOptions,
) -> Result<IntegrationResult, OdeError>
where
    F: Fn(f64, &[f64]) -> DVector<f64>,
{
    let (t0, t1) = t_span;
    opts.validate(t0, t1)?;
    check_finite(y0, t0)?;
    let mut t = t0;
    let mut y = y0.clone();
    let mut k1 = f(t, y.as_slice());
    check_finite(&k1, t)?;
    let mut out = IntegrationResult::start(t, y.clone(), k1.clone());
    let span = t1 - t0;
    let mut h = match (opts.fixed_step, opts.h0) {
        (Some(h), _) => h,
        (None, Some(h)) => h,
        (None, None) => initial_step(&f, t0, &y, &k1, 5, span, opts),
    };
    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;
    const BETA1: f64 = 0.7 / 5.0;
    const BETA2: f64 = 0.4 / 5.0;
    while t < t1 {
        if steps == opts.max_steps {
            return Err(OdeError::MinStepReached { t });
        }
        steps += 1;
        let last = t + h >= t1 - 1e-12 * span.max(1.0);
        if last {
            h = t1 - t;
        }
        let hmin = 1e-14 * t.abs().max(1.0);
        if h < hmin {
            return Err(OdeError::MinStepReached { t });
        }
        let mut k = Vec::with_capacity(7);
        k.push(k1.clone());
        for s in 0..5 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    ys.axpy(h * A[s][j], kj, 1.0);
                }
            }
            k.push(f(t + C[s] * h, ys.as_slice()));
        }
        let mut y_new = y.clone();
        for (j, kj) in k.iter().enumerate() {
            y_new.axpy(h * A[5][j], kj, 1.0);
        }
        let k7 = f(t + h, y_new.as_slice());
        let finite = y_new.iter().chain(k7.iter()).all(|v| v.is_finite());
        k.push(k7);
        if opts.fixed_step.is_some() {
            if !finite {
                return Err(OdeError::NonFinite { t: t + h });
            }
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k.pop().unwrap();
            out.push(t, y.clone(), k1.clone());
            continue;
        }
        let err = if finite {
            let mut e = DVector::zeros(y.len());
            for (j, kj) in k.iter().enumerate() {
                e.axpy(h * BTILDE[j], kj, 1.0);
            }
            error_norm(&e, &y, &y_new, opts.rtol, opts.atol)
        } else {
            f64::INFINITY
        };
        if err <= 1.0 {
            let err_c = err.max(1e-10);
            let fac = opts.safety * err_c.powf(-BETA1) * err_prev.powf(BETA2);
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k.pop().unwrap();
            out.push(t, y.clone(), k1.clone());
            err_prev = err_c;
            h *= fac.clamp(opts.min_factor, opts.max_factor);
        } else {
            out.rejected += 1;
            let fac = if err.is_finite() { opts.safety * err.powf(-0.2) } else { opts.min_factor };
            h *= fac.clamp(opts.min_factor, 1.0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_rows_are_consistent() {
        for s in 0..5 {
            let row: f64 = A[s].iter().sum();
            assert!((row - C[s]).abs() < 1e-12, "row {s}");
        }
        assert!((A[5].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(BTILDE.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn exponential_decay() {
        let opts = IntegratorOptions::with_tolerances(1e-8, 1e-10);
        let r = tsit5_integrate(|_, y| DVector::from_element(1, -y[0]), &DVector::from_element(1, 1.0), (0.0, 1.0), &opts)
            .unwrap();
        assert!((r.final_state()[0] - (-1.0f64).exp()).abs() < 1e-7);
        assert_eq!(r.final_time(), 1.0);
        assert!(r.t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn harmonic_energy_is_conserved() {
        let opts = IntegratorOptions::with_tolerances(1e-8, 1e-10);
        let w = 2.0 * std::f64::consts::PI;
        let r = tsit5_integrate(
            |_, y| DVector::from_vec(vec![w * y[1], -w * y[0]]),
            &DVector::from_vec(vec![1.0, 0.0]),
            (0.0, 10.0),
            &opts,
        )
        .unwrap();
        for y in &r.y {
            assert!((y.norm_squared() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn fixed_steps_have_fifth_order() {
        let mut errs = Vec::new();
        // relative error at t = 20 keeps the finest step above round-off
        let hs: Vec<f64> = (0..5).map(|k| 0.125 / 2f64.powi(k)).collect();
        for &h in &hs {
            let r = tsit5_integrate(
                |_, y| DVector::from_element(1, -y[0]),
                &DVector::from_element(1, 1.0),
                (0.0, 20.0),
                &IntegratorOptions::fixed(h),
            )
            .unwrap();
            errs.push((r.final_state()[0] / (-20.0f64).exp() - 1.0).abs());
        }
        let slope = crate::ode::tests_support::loglog_slope(&hs, &errs);
        assert!((slope - 5.0).abs() < 0.3, "slope {slope}, errors {errs:?}");
    }

    #[test]
    fn blow_up_is_reported() {
        let r = tsit5_integrate(
            |_, y| DVector::from_element(1, y[0] * y[0]),
            &DVector::from_element(1, 1.0),
            (0.0, 2.0),
            &IntegratorOptions::default(),
        );
        assert!(matches!(r, Err(OdeError::MinStepReached { .. }) | Err(OdeError::NonFinite { .. })));
    }
}
