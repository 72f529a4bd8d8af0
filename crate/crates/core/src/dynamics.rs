//! Fokker-Planck / continuity dynamics with gradient drifts, action
//! functionals, and certified discrete HJB supersolutions.
//!
//! Drifts are restricted to gradient fields `X_t = ∇u_t`, represented by a
//! time-sampled potential; then `|X_t|² = Γ(u_t)` is well defined without any
//! edge-vector-field formalism, and the weak equation
//!
//! ```text
//! σ d/dt ∫f dμ_t = ∫ (Γ(f, u_t) + c Δf) dμ_t       for every test vector f
//! ```
//!
//! becomes a linear ODE for the mass vector `M = ρ m`, integrated here by the
//! classical 4th-order explicit scheme. Both transport and diffusion
//! operators annihilate total mass algebraically, so probability is conserved
//! to floating point; positivity is monitored and a hard failure beyond
//! `-1e-8` suggests a larger step count.
//!
//! A certified discrete supersolution of the HJB equation
//! `σ d/dt φ ≥ ½Γ(φ) + c Δφ` is built from the log-heat flow and then lifted
//! by a time-linear slack so the inequality holds at every grid point; the
//! duality gap against any gradient-drift Fokker-Planck solution is then
//! nonnegative up to time-discretization error, since the spatial argument
//! (Cauchy-Schwarz for Γ plus exact integration by parts) is exact.

use ndarray::Array1;

use crate::calculus::{diffusion_adjoint, drift_transport_adjoint, gamma, integrate};
use crate::density::Density;
use crate::space::Space;
use crate::{Error, Result};

/// Time orientation of Fokker-Planck solutions and HJB supersolutions
/// (σ = +1 forward, σ = -1 backward).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sigma(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// A scalar potential sampled on a uniform time grid over `[0, 1]`;
/// intermediate times are linearly interpolated. Build it on a grid that
/// contains the half-steps of the integrator (`2K+1` samples for `K` steps)
/// and the interpolation is exact at every stage the integrator touches.
#[derive(Debug, Clone)]
pub struct PotentialPath {
    times: Vec<f64>,
    values: Vec<Array1<f64>>,
}

impl PotentialPath {
    /// Sample a time-dependent potential on `steps + 1` uniform grid times.
    pub fn from_fn<F>(steps: usize, mut potential: F) -> Result<PotentialPath>
    where
        F: FnMut(f64) -> Result<Array1<f64>>,
    {
        if steps < 1 {
            return Err(Error::InvalidParameter(
                "potential path needs at least one step".into(),
            ));
        }
        let mut times = Vec::with_capacity(steps + 1);
        let mut values = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            times.push(t);
            values.push(potential(t)?);
        }
        Ok(PotentialPath { times, values })
    }

    /// A potential constant in time.
    pub fn constant(u: Array1<f64>, steps: usize) -> Result<PotentialPath> {
        PotentialPath::from_fn(steps, |_| Ok(u.clone()))
    }

    pub(crate) fn from_parts(times: Vec<f64>, values: Vec<Array1<f64>>) -> PotentialPath {
        PotentialPath { times, values }
    }

    /// Wrap externally computed samples on a uniform grid over `[0, 1]`.
    pub fn from_samples(times: Vec<f64>, values: Vec<Array1<f64>>) -> Result<PotentialPath> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::InvalidParameter(
                "potential path needs matching times and values, at least two".into(),
            ));
        }
        let steps = times.len() - 1;
        for (k, &t) in times.iter().enumerate() {
            if (t - k as f64 / steps as f64).abs() > 1e-12 {
                return Err(Error::InvalidParameter(
                    "potential path times must be the uniform grid on [0, 1]".into(),
                ));
            }
        }
        Ok(PotentialPath { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[Array1<f64>] {
        &self.values
    }

    pub fn step_count(&self) -> usize {
        self.times.len() - 1
    }

    /// Linear interpolation; exact at grid times.
    pub fn sample(&self, t: f64) -> Array1<f64> {
        let steps = self.step_count() as f64;
        let pos = (t.clamp(0.0, 1.0)) * steps;
        let k = (pos.floor() as usize).min(self.step_count() - 1);
        let frac = pos - k as f64;
        if frac <= 1e-12 {
            self.values[k].clone()
        } else if frac >= 1.0 - 1e-12 {
            self.values[k + 1].clone()
        } else {
            (1.0 - frac) * &self.values[k] + frac * &self.values[k + 1]
        }
    }
}

/// A time-sampled curve of probability densities together with the equation
/// it solves: direction σ and diffusion constant `c` (`ε/2` for Fokker-Planck,
/// `0` for the continuity equation).
#[derive(Debug, Clone)]
pub struct DensityPath {
    pub times: Vec<f64>,
    pub rho: Vec<Density>,
    pub direction: Direction,
    pub diffusion: f64,
}

impl DensityPath {
    pub fn step_count(&self) -> usize {
        self.times.len() - 1
    }

    /// Wrap an externally computed curve (e.g. an entropic interpolation)
    /// as a density path.
    pub fn from_slices(
        times: Vec<f64>,
        rho: Vec<Density>,
        direction: Direction,
        diffusion: f64,
    ) -> DensityPath {
        DensityPath {
            times,
            rho,
            direction,
            diffusion,
        }
    }
}

/// Smallest step count satisfying the explicit stability rule
/// `c · Δt · spectral_radius ≤ 1/2`.
pub fn stable_step_count(space: &Space, c: f64) -> usize {
    ((2.0 * c * space.spectral_radius()).ceil() as usize).max(16)
}

/// Integrate the weak Fokker-Planck (`c > 0`) or continuity (`c = 0`)
/// equation with gradient drift `∇u_t` by classical RK4 on the mass vector.
///
/// Forward paths start from `rho_init` at `t = 0`; backward paths start from
/// `rho_init` at `t = 1` and integrate in reversed time (the diffusion is
/// stable in that direction). Returned times are ascending either way.
pub fn integrate_fpe(
    space: &Space,
    rho_init: &Density,
    drift: &PotentialPath,
    c: f64,
    direction: Direction,
    steps: usize,
) -> Result<DensityPath> {
    if c < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "diffusion constant must be nonnegative, got {c}"
        )));
    }
    if steps < 1 {
        return Err(Error::InvalidParameter("need at least one step".into()));
    }
    if rho_init.values().len() != space.len() {
        return Err(Error::DimensionMismatch {
            expected: space.len(),
            got: rho_init.values().len(),
        });
    }
    let dt = 1.0 / steps as f64;
    // Physical drift time for integration variable s.
    let phys = |s: f64| match direction {
        Direction::Forward => s,
        Direction::Backward => 1.0 - s,
    };
    let field = |s: f64, masses: &Array1<f64>| -> Array1<f64> {
        let u = drift.sample(phys(s));
        let mut dm = drift_transport_adjoint(space, &u, masses);
        if c > 0.0 {
            dm = dm + diffusion_adjoint(space, masses).mapv(|v| c * v);
        }
        dm
    };
    let mut masses = rho_init.masses(space);
    let mut slices = Vec::with_capacity(steps + 1);
    slices.push(masses.clone());
    for k in 0..steps {
        let s = k as f64 * dt;
        let k1 = field(s, &masses);
        let k2 = field(s + 0.5 * dt, &(&masses + &k1.mapv(|v| 0.5 * dt * v)));
        let k3 = field(s + 0.5 * dt, &(&masses + &k2.mapv(|v| 0.5 * dt * v)));
        let k4 = field(s + dt, &(&masses + &k3.mapv(|v| dt * v)));
        masses = &masses + &((k1 + k2.mapv(|v| 2.0 * v) + k3.mapv(|v| 2.0 * v) + k4)
            .mapv(|v| dt / 6.0 * v));
        let min = masses.iter().copied().fold(f64::INFINITY, f64::min);
        if !min.is_finite() || min < -1e-8 {
            return Err(Error::UnstableTimeStep { min, step: k + 1 });
        }
        slices.push(masses.clone());
    }
    if direction == Direction::Backward {
        slices.reverse();
    }
    let weights = space.weights();
    let rho = slices
        .into_iter()
        .map(|m| Density::from_raw_unchecked((m / weights).mapv(|v| v.max(0.0))))
        .collect();
    Ok(DensityPath {
        times: (0..=steps).map(|k| k as f64 * dt).collect(),
        rho,
        direction,
        diffusion: c,
    })
}

/// Kinetic action `∫₀¹ ∫ ½ Γ(u_t) dν_t dt` by trapezoid quadrature on the
/// density path's grid.
pub fn path_action(space: &Space, path: &DensityPath, drift: &PotentialPath) -> f64 {
    let steps = path.step_count();
    let dt = 1.0 / steps as f64;
    let mut acc = 0.0;
    for (k, &t) in path.times.iter().enumerate() {
        let w = if k == 0 || k == steps { 0.5 * dt } else { dt };
        let u = drift.sample(t);
        acc += w * 0.5 * integrate(space, &gamma(space, &u), Some(&path.rho[k]));
    }
    acc
}

/// A potential path whose discrete HJB inequality
/// `σ dφ/dt ≥ ½Γ(φ) + (ε/2)Δφ` has been made to hold at every grid point by
/// a time-linear slack lift.
#[derive(Debug, Clone)]
pub struct CertifiedSupersolution {
    pub path: PotentialPath,
    pub direction: Direction,
    pub eps: f64,
    /// Slack `a ≥ 0` that was added as `a·t` (forward) or `a·(1-t)`
    /// (backward); vanishes under grid refinement for log-heat data.
    pub slack: f64,
    /// Worst remaining violation after the lift (≤ 0 up to rounding).
    pub margin: f64,
}

/// Grid-time derivative: central differences inside, second-order one-sided
/// at the ends. Exact on functions linear in t, which keeps the slack lift
/// itself certified.
fn time_derivative(values: &[Array1<f64>], dt: f64) -> Vec<Array1<f64>> {
    let k_max = values.len() - 1;
    (0..=k_max)
        .map(|k| {
            if k == 0 {
                (values[1].mapv(|v| 4.0 * v) - &values[2] - values[0].mapv(|v| 3.0 * v))
                    .mapv(|v| v / (2.0 * dt))
            } else if k == k_max {
                (values[k].mapv(|v| 3.0 * v) - values[k - 1].mapv(|v| 4.0 * v) + &values[k - 2])
                    .mapv(|v| v / (2.0 * dt))
            } else {
                (&values[k + 1] - &values[k - 1]).mapv(|v| v / (2.0 * dt))
            }
        })
        .collect()
}

/// Pointwise violation of `σ dφ/dt ≥ ½Γ(φ) + (ε/2)Δφ`; positive means broken.
fn hjb_violation(
    space: &Space,
    values: &[Array1<f64>],
    eps: f64,
    direction: Direction,
    dt: f64,
) -> f64 {
    let sigma = direction.sigma();
    let derivatives = time_derivative(values, dt);
    let mut worst = f64::NEG_INFINITY;
    for (phi, dphi) in values.iter().zip(derivatives.iter()) {
        let rhs = gamma(space, phi).mapv(|v| 0.5 * v)
            + space.generator_apply(phi).mapv(|v| 0.5 * eps * v);
        for i in 0..space.len() {
            worst = worst.max(rhs[i] - sigma * dphi[i]);
        }
    }
    worst
}

/// Build a certified discrete HJB supersolution from terminal data
/// (backward) or initial data (forward):
///
/// ```text
/// backward: φ_t = ε log(h_{ε(1-t)/2 + s} e^{w/ε} + δ) + a(1-t)
/// forward:  φ_t = ε log(h_{εt/2 + s} e^{w/ε} + δ) + a·t
/// ```
///
/// The log-heat flow solves the continuum HJB equation exactly; on a graph a
/// chain-rule defect remains, and the slack `a` is exactly the worst
/// pointwise violation, so after the lift the inequality is certified with
/// margin ≥ 0 (up to rounding). `a → 0` under grid refinement.
pub fn build_supersolution(
    space: &Space,
    data: &Array1<f64>,
    eps: f64,
    delta: f64,
    shift: f64,
    direction: Direction,
    steps: usize,
) -> Result<CertifiedSupersolution> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if delta < 0.0 || shift < 0.0 {
        return Err(Error::InvalidParameter(
            "floor and time shift must be nonnegative".into(),
        ));
    }
    if steps < 2 {
        return Err(Error::InvalidParameter(
            "supersolution grid needs at least 2 steps".into(),
        ));
    }
    let u = data.mapv(|v| v / eps);
    let ln_delta = if delta > 0.0 { delta.ln() } else { f64::NEG_INFINITY };
    let dt = 1.0 / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut values = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        let heat_time = match direction {
            Direction::Backward => 0.5 * eps * (1.0 - t) + shift,
            Direction::Forward => 0.5 * eps * t + shift,
        };
        let log_h = space.log_heat_apply(heat_time, &u)?;
        let phi = if delta > 0.0 {
            log_h.mapv(|a| eps * log_add_exp(a, ln_delta))
        } else {
            log_h.mapv(|a| eps * a)
        };
        times.push(t);
        values.push(phi);
    }
    let violation = hjb_violation(space, &values, eps, direction, dt);
    let slack = violation.max(0.0);
    if slack > 0.0 {
        for (k, phi) in values.iter_mut().enumerate() {
            let t = k as f64 * dt;
            let lift = match direction {
                Direction::Forward => slack * t,
                Direction::Backward => slack * (1.0 - t),
            };
            phi.mapv_inplace(|v| v + lift);
        }
    }
    let margin = hjb_violation(space, &values, eps, direction, dt);
    Ok(CertifiedSupersolution {
        path: PotentialPath::from_parts(times, values),
        direction,
        eps,
        slack,
        margin,
    })
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let hi = a.max(b);
    hi + (-(a - b).abs()).exp().ln_1p()
}

/// Outcome of the HJB-FPE duality inequality check.
#[derive(Debug, Clone, Copy)]
pub struct DualityGap {
    /// Potential increment: `∫φ₁dν₁ - ∫φ₀dν₀` (backward supersolution vs
    /// forward FPE) or `∫φ₀dν₀ - ∫φ₁dν₁` (forward vs backward).
    pub lhs: f64,
    /// Kinetic action `½∫∫Γ(u)dν dt`.
    pub rhs: f64,
    /// `rhs - lhs`; nonnegative up to `tolerance`.
    pub gap: f64,
    /// Time-discretization allowance; the spatial argument is exact.
    pub tolerance: f64,
}

/// Coefficient of the `Δt²` time-discretization allowance in
/// [`check_hjb_fpe_duality`]. The spatial steps of the inequality
/// (Γ-Cauchy-Schwarz, integration by parts, the certified pointwise HJB
/// inequality) are exact; only quadrature in time and the RK4 density enter
/// the error, both `O(Δt²)` or better.
pub const TIME_STEPPING_TOL_COEFF: f64 = 50.0;

/// Evaluate the duality inequality of a certified supersolution against a
/// Fokker-Planck solution with opposite direction and the same diffusion
/// `c = ε/2`. Returns the gap report; `gap ≥ -tolerance` is the assertion
/// callers make.
pub fn check_hjb_fpe_duality(
    space: &Space,
    supersolution: &CertifiedSupersolution,
    fpe: &DensityPath,
    fpe_drift: &PotentialPath,
    eps: f64,
) -> Result<DualityGap> {
    if supersolution.direction == fpe.direction {
        return Err(Error::InvalidParameter(
            "supersolution and Fokker-Planck solution must have opposite directions".into(),
        ));
    }
    let c = 0.5 * eps;
    if (fpe.diffusion - c).abs() > 1e-12 * c.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "diffusion mismatch: supersolution expects c = {c}, path has {}",
            fpe.diffusion
        )));
    }
    let phi0 = supersolution.path.sample(0.0);
    let phi1 = supersolution.path.sample(1.0);
    let nu0 = &fpe.rho[0];
    let nu1 = &fpe.rho[fpe.step_count()];
    let lhs = match supersolution.direction {
        Direction::Backward => {
            integrate(space, &phi1, Some(nu1)) - integrate(space, &phi0, Some(nu0))
        }
        Direction::Forward => {
            integrate(space, &phi0, Some(nu0)) - integrate(space, &phi1, Some(nu1))
        }
    };
    let rhs = path_action(space, fpe, fpe_drift);
    let dt = (1.0 / fpe.step_count() as f64).max(1.0 / supersolution.path.step_count() as f64);
    let tolerance = TIME_STEPPING_TOL_COEFF * dt * dt * (1.0 + lhs.abs() + rhs.abs());
    Ok(DualityGap {
        lhs,
        rhs,
        gap: rhs - lhs,
        tolerance,
    })
}
