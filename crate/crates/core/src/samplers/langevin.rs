use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::base::{ConstraintSystem, MassSpec, PotentialModel};
use crate::error::{Error, LinalgError, Result};
use crate::linalg::{solve_position_constraints, ConstraintFactors, SolveOptions};

/// Coefficients `(a, b)` of the Ornstein–Uhlenbeck map `p ← a p + b M^{1/2} r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OuCoefficients {
    /// `a = e^{−γh}`, `b = √(T(1 − a²))`: keeps `N(0, T M)` invariant.
    #[default]
    Exact,
    /// `a = e^{−2γh}`, `b = √T (1 − a)`. Its stationary variance is
    /// `T(1 − a)/(1 + a)` rather than `T`.
    Damped,
}

impl OuCoefficients {
    pub fn coefficients(self, gamma: f64, temperature: f64, h: f64) -> (f64, f64) {
        match self {
            OuCoefficients::Exact => {
                let a = (-gamma * h).exp();
                (a, (temperature * (1.0 - a * a)).sqrt())
            }
            OuCoefficients::Damped => {
                let a = (-2.0 * gamma * h).exp();
                (a, (temperature * (1.0 - a).powi(2)).sqrt())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LangevinConfig {
    pub dt: f64,
    pub gamma: f64,
    pub temperature: f64,
    /// Tolerance of the reverse position step.
    pub eps_rev: f64,
    pub metropolis: bool,
    pub stride: usize,
    pub ou: OuCoefficients,
    pub solve: SolveSettings,
}

/// Serializable subset of [`SolveOptions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveSettings {
    pub max_iter: usize,
    pub tol: f64,
    pub broyden: bool,
}

impl From<SolveSettings> for SolveOptions {
    fn from(s: SolveSettings) -> Self {
        SolveOptions { max_iter: s.max_iter, tol: s.tol, broyden: s.broyden, ..SolveOptions::default() }
    }
}

impl Default for LangevinConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            gamma: 0.1,
            temperature: 1.0,
            eps_rev: 1e-8,
            metropolis: true,
            stride: 10,
            ou: OuCoefficients::Exact,
            solve: SolveSettings { max_iter: 50, tol: 1e-10, broyden: true },
        }
    }
}

impl LangevinConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.gamma >= 0.0
            && self.temperature > 0.0
            && self.eps_rev > 0.0
            && self.stride > 0
            && self.solve.tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Langevin settings {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectCause {
    /// Position solve or factorization failed.
    Constraint,
    /// The reverse position step did not return to the start.
    Reversibility,
    Metropolis,
}

/// Sampler state with the factorization and force cached at `q`.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    pub fac: ConstraintFactors,
    pub u: f64,
    pub grad: DVector<f64>,
}

impl ChainState {
    pub fn new(
        q: DVector<f64>,
        p: DVector<f64>,
        c: &dyn ConstraintSystem,
        pot: &dyn PotentialModel,
        mass: &MassSpec,
    ) -> Result<Self> {
        let fac = ConstraintFactors::new(&c.jacobian(&q), &q, mass)?;
        let (u, grad) = pot.value_and_gradient(&q);
        let p = fac.project(&p).0;
        Ok(Self { q, p, fac, u, grad })
    }

    pub fn hamiltonian(&self) -> f64 {
        self.u + self.fac.mass().kinetic_energy(&self.p)
    }
}

/// Output of the position step.
#[derive(Debug, Clone)]
pub struct PositionStep {
    pub q: DVector<f64>,
    /// `p + Δt c_q(q)ᵀλ`, not yet projected at the new point.
    pub p: DVector<f64>,
    pub lambda: DVector<f64>,
}

/// Φ_A: `q' = q + Δt M⁻¹p'`, `p' = p + Δt c_q(q)ᵀλ` with `c(q') = 0`.
pub fn constrained_position_step(
    q: &DVector<f64>,
    p: &DVector<f64>,
    dt: f64,
    fac: &ConstraintFactors,
    c: &dyn ConstraintSystem,
    opts: &SolveOptions,
) -> Result<PositionStep, LinalgError> {
    let guess = q + fac.mass().apply_inverse(p) * dt;
    let out = solve_position_constraints(&guess, fac, c, opts)?;
    let q_new = out.q;
    let p_new = fac.mass().apply(&((&q_new - q) / dt));
    Ok(PositionStep { q: q_new, p: p_new, lambda: out.lambda / (dt * dt) })
}

/// Φ_B: force step followed by cotangent projection.
pub fn constrained_momentum_step(
    p: &DVector<f64>,
    dt: f64,
    grad: &DVector<f64>,
    fac: &ConstraintFactors,
) -> DVector<f64> {
    fac.project(&(p - grad * dt)).0
}

/// Φ_O: `p ← a p + b M^{1/2} r`, projected.
pub fn constrained_momentum_noise<R: Rng + ?Sized>(
    p: &DVector<f64>,
    a: f64,
    b: f64,
    fac: &ConstraintFactors,
    rng: &mut R,
) -> DVector<f64> {
    if b == 0.0 {
        return fac.project(&(p * a)).0;
    }
    let r = DVector::from_fn(p.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    fac.project(&(p * a + fac.mass().apply_sqrt(&r) * b)).0
}

/// Standard-normal momentum in the mass metric, projected to the cotangent space.
pub fn draw_momentum<R: Rng + ?Sized>(fac: &ConstraintFactors, temperature: f64, rng: &mut R) -> DVector<f64> {
    let r = DVector::from_fn(fac.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
    fac.project(&(fac.mass().apply_sqrt(&r) * temperature.sqrt())).0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub cause: Option<RejectCause>,
    /// Energy change `H' − H` over the BAB block, when it completed.
    pub delta_h: Option<f64>,
}

/// One OBABO step. Failures never escape: they become rejections, after
/// which the momentum entering the BAB block is negated. The Metropolis
/// test compares `H = U + ½pᵀM⁻¹p` before and after BAB.
pub fn obabo_step<R: Rng + ?Sized>(
    state: &mut ChainState,
    cfg: &LangevinConfig,
    c: &dyn ConstraintSystem,
    pot: &dyn PotentialModel,
    rng: &mut R,
) -> StepOutcome {
    let h = cfg.dt;
    let (a, b) = cfg.ou.coefficients(cfg.gamma, cfg.temperature, 0.5 * h);
    let solve: SolveOptions = cfg.solve.into();
    state.p = constrained_momentum_noise(&state.p, a, b, &state.fac, rng);
    let p_half = constrained_momentum_step(&state.p, 0.5 * h, &state.grad, &state.fac);
    let h0 = state.hamiltonian();

    let result = bab(state, &p_half, h, cfg, c, pot, &solve);
    let outcome = match result {
        Ok(next) => {
            let h1 = next.u + next.fac.mass().kinetic_energy(&next.p);
            let dh = h1 - h0;
            let accept = !cfg.metropolis || dh <= 0.0 || rng.random::<f64>() < (-dh).exp();
            if accept && dh.is_finite() {
                *state = next;
                StepOutcome { accepted: true, cause: None, delta_h: Some(dh) }
            } else {
                state.p = -&state.p;
                StepOutcome { accepted: false, cause: Some(RejectCause::Metropolis), delta_h: Some(dh) }
            }
        }
        Err(cause) => {
            state.p = -&state.p;
            StepOutcome { accepted: false, cause: Some(cause), delta_h: None }
        }
    };
    state.p = constrained_momentum_noise(&state.p, a, b, &state.fac, rng);
    outcome
}

fn bab(
    state: &ChainState,
    p_half: &DVector<f64>,
    h: f64,
    cfg: &LangevinConfig,
    c: &dyn ConstraintSystem,
    pot: &dyn PotentialModel,
    solve: &SolveOptions,
) -> Result<ChainState, RejectCause> {
    let fwd = constrained_position_step(&state.q, p_half, h, &state.fac, c, solve)
        .map_err(|_| RejectCause::Constraint)?;
    if fwd.q.iter().any(|v| !v.is_finite()) {
        return Err(RejectCause::Constraint);
    }
    let fac = ConstraintFactors::new(&c.jacobian(&fwd.q), &fwd.q, state.fac.mass())
        .map_err(|_| RejectCause::Constraint)?;
    let p_tan = fac.project(&fwd.p).0;
    let back = constrained_position_step(&fwd.q, &-&p_tan, h, &fac, c, solve)
        .map_err(|_| RejectCause::Reversibility)?;
    if (&back.q - &state.q).amax() > cfg.eps_rev {
        return Err(RejectCause::Reversibility);
    }
    let (u, grad) = pot.value_and_gradient(&fwd.q);
    if !u.is_finite() || grad.iter().any(|v| !v.is_finite()) {
        return Err(RejectCause::Constraint);
    }
    let p = constrained_momentum_step(&p_tan, 0.5 * h, &grad, &fac);
    Ok(ChainState { q: fwd.q, p, fac, u, grad })
}
