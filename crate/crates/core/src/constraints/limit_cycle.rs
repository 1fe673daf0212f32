use std::f64::consts::PI;

use nalgebra::DVector;

use super::periodic::PeriodicOrbitConstraint;
use crate::error::{Error, Result};
use crate::base::MassSpec;
use crate::linalg::{gauss_newton_solve_weighted, GaussNewtonOptions};
use crate::ode::{radau5_integrate, IntegrationResult, IntegratorOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitCycleOptions {
    /// Integration length in units of `2π/ω`.
    pub periods: f64,
    pub rtol: f64,
    pub atol: f64,
    pub newton: GaussNewtonOptions,
}

impl Default for LimitCycleOptions {
    fn default() -> Self {
        Self { periods: 10.0, rtol: 1e-9, atol: 1e-11, newton: GaussNewtonOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitCycleStart {
    pub q: DVector<f64>,
    /// Period measured on the integrated trajectory, before Newton.
    pub period_estimate: f64,
    pub newton_iters: usize,
}

/// Mean spacing of upward crossings of the mean of component 0 over the
/// second half of the trajectory.
pub fn estimate_period(traj: &IntegrationResult) -> Option<f64> {
    let t_end = traj.final_time();
    let t_start = traj.t[0] + 0.5 * (t_end - traj.t[0]);
    let n = 4000;
    let h = (t_end - t_start) / n as f64;
    let xs: Vec<f64> = (0..=n).map(|i| traj.interpolate(t_start + i as f64 * h)[0]).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let spread = xs.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    if !(spread > 1e-8) {
        return None;
    }
    let crossings: Vec<f64> = xs
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < mean && w[1] >= mean)
        .map(|(i, w)| t_start + h * (i as f64 + (mean - w[0]) / (w[1] - w[0])))
        .collect();
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Feasible periodic-orbit point for the given parameters: relax onto the
/// attractor from `y0` for `periods · 2π/ω`, take the last period of the
/// trajectory as the initial curve and polish with Gauss–Newton. The
/// parameters are held (to within ~1e-12 relative) at the given values.
pub fn initialize_limit_cycle(
    c: &PeriodicOrbitConstraint,
    params: &[f64],
    y0: &[f64],
    omega: f64,
    opts: &LimitCycleOptions,
) -> Result<LimitCycleStart> {
    if !(omega > 0.0) {
        return Err(Error::Config(format!("frequency must be positive, got {omega}")));
    }
    let model = c.model().clone();
    let t_end = opts.periods * 2.0 * PI / omega;
    let traj = radau5_integrate(
        |_, y| model.rhs(y, params),
        |_, y| model.jac_y(y, params),
        &DVector::from_column_slice(y0),
        (0.0, t_end),
        &IntegratorOptions::with_tolerances(opts.rtol, opts.atol),
    )?;
    let period = estimate_period(&traj).unwrap_or(2.0 * PI / omega);
    let start = t_end - period;
    let q0 = c.from_curve(|s| traj.interpolate(start + s * period), period, params);
    let ps = c.params_start();
    let weights = DVector::from_fn(q0.len(), |i, _| if i >= ps { 1e-12 } else { 1.0 });
    let mass = MassSpec::from_inverse_diagonal(weights).expect("positive weights");
    let (q, newton_iters) = gauss_newton_solve_weighted(c, &q0, &mass, &opts.newton)?;
    Ok(LimitCycleStart { q, period_estimate: period, newton_iters })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{ConstraintSystem, ModelOde};
    use crate::constraints::{build_periodic, CollocationMesh};
    use crate::models::{bundled_parameters, Repressilator, StuartLandau, BUNDLED_Y0};
    use crate::ode::tsit5_integrate;
    use std::sync::Arc;

    fn stuart_landau(n: usize) -> (PeriodicOrbitConstraint, CollocationMesh) {
        let c = build_periodic(Arc::new(StuartLandau), n).unwrap();
        let w = 2.0 * PI;
        let s = initialize_limit_cycle(&c, &[1.0, w], &[0.5, 0.1], w, &LimitCycleOptions::default()).unwrap();
        assert!(c.residual(&s.q).amax() <= 1e-10);
        let mesh = c.decode(&s.q);
        assert!((mesh.params[0] - 1.0).abs() < 1e-12 && (mesh.params[1] - w).abs() < 1e-12);
        (c, mesh)
    }

    fn mesh_point_radius_error(mesh: &CollocationMesh) -> f64 {
        mesh.points.iter().step_by(2).map(|p| (p.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn stuart_landau_cycle() {
        let (_, mesh) = stuart_landau(40);
        assert!((mesh.tau - 1.0).abs() < 1e-6, "{}", mesh.tau);
        let mean_r = (0..4000).map(|i| mesh.eval((i as f64 + 0.5) / 4000.0).norm()).sum::<f64>() / 4000.0;
        assert!((mean_r - 1.0).abs() < 1e-6);
        assert!((mesh.arc_length() - 2.0 * PI).abs() < 1e-4);
        let dens = mesh.element_densities();
        let spread = dens.iter().fold(0.0f64, |m, v| m.max((v - dens[0]).abs()));
        assert!(spread < 1e-8);
    }

    #[test]
    fn stuart_landau_matches_gauss_runge_kutta() {
        // two-stage Gauss Runge–Kutta periodic orbit, solved independently:
        // radius error at the step points and period error for N = 10, 20, 40, 80
        let oracle = [
            (10, 5.242242924108e-4, 2.116029257e-4),
            (20, 3.354792539989e-5, 1.345046629e-5),
            (40, 2.109579815945e-6, 8.443267181e-7),
            (80, 1.320516742620e-7, 5.282842386e-8),
        ];
        let mut errs = Vec::new();
        for (n, r_err, tau_err) in oracle {
            let (_, mesh) = stuart_landau(n);
            let e = mesh_point_radius_error(&mesh);
            assert!((e - r_err).abs() < 1e-6 * r_err + 1e-12, "N = {n}: {e:e}");
            assert!((mesh.tau - 1.0 - tau_err).abs() < 1e-11, "N = {n}");
            errs.push(e);
        }
        let hs: Vec<f64> = oracle.iter().map(|o| 1.0 / o.0 as f64).collect();
        let slope = crate::ode::tests_support::loglog_slope(&hs, &errs);
        assert!((slope - 4.0).abs() < 0.4, "{slope}");
    }

    #[test]
    fn repressilator_cycle_is_shooting_consistent() {
        let model = Arc::new(Repressilator::three());
        let c = build_periodic(model.clone(), 60).unwrap();
        let p = bundled_parameters();
        let s = initialize_limit_cycle(&c, p.as_slice(), &BUNDLED_Y0, 2.0 * PI / 5.0, &LimitCycleOptions::default())
            .unwrap();
        let mesh = c.decode(&s.q);
        assert!((mesh.tau - 4.994).abs() < 0.01, "{}", mesh.tau);
        let y0 = mesh.points[0].clone();
        let traj = tsit5_integrate(
            |_, y| model.rhs(y, p.as_slice()),
            &y0,
            (0.0, mesh.tau),
            &IntegratorOptions::with_tolerances(1e-11, 1e-13),
        )
        .unwrap();
        assert!((traj.final_state() - &y0).amax() < 1e-4);
    }
}
