//! The entropic Hopf-Lax operator and Kantorovich-type duality.
//!
//! The operator
//!
//! ```text
//! Q_t u = ε log( h_{εt/2} e^{u/ε} )
//! ```
//!
//! replaces the Hopf-Lax semigroup of optimal transport: it solves the
//! forward HJB equation in the continuum and turns the entropic cost into a
//! concave maximization over a single potential,
//!
//! ```text
//! ε·I_ε = ε H(μ₁|m) + sup_u { ∫u dμ₀ - ∫Q₁u dμ₁ }        (forward)
//!       = ε H(μ₀|m) + sup_u { ∫u dμ₁ - ∫Q₁u dμ₀ }        (backward)
//! ```
//!
//! with attainment at `u = φ₀` (forward) and `u = ψ₁` (backward). On a
//! finite space with strictly positive marginals every real vector is
//! admissible, both formulas are exact (tier A), and `dual_objective ≤ ε·I_ε`
//! holds for *every* `u` — a property the verification suite hammers with
//! random and adversarially scaled potentials.

use ndarray::Array1;

use crate::calculus::{entropy_wrt_reference, integrate};
use crate::density::Density;
use crate::schrodinger::SchrodingerSolution;
use crate::space::Space;
use crate::{Error, Result};

/// Which marginal carries the entropy offset and which carries `Q₁u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// `ε H(μ₁|m) + ∫u dμ₀ - ∫Q₁u dμ₁`, optimizer `u = φ₀`.
    Forward,
    /// `ε H(μ₀|m) + ∫u dμ₁ - ∫Q₁u dμ₀`, optimizer `u = ψ₁`.
    Backward,
}

/// `Q_t u = ε log(h_{εt/2} e^{u/ε})`, evaluated with max-subtraction.
/// `t = 0` returns `u` unchanged.
pub fn q_apply(space: &Space, u: &Array1<f64>, eps: f64, t: f64) -> Result<Array1<f64>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t == 0.0 {
        return Ok(u.clone());
    }
    let scaled = u.mapv(|v| v / eps);
    Ok(space
        .log_heat_apply(0.5 * eps * t, &scaled)?
        .mapv(|v| eps * v))
}

/// Kantorovich dual objective at a potential `u`.
pub fn dual_objective(
    space: &Space,
    u: &Array1<f64>,
    mu0: &Density,
    mu1: &Density,
    eps: f64,
    orientation: Orientation,
) -> Result<f64> {
    let qu = q_apply(space, u, eps, 1.0)?;
    Ok(match orientation {
        Orientation::Forward => {
            eps * entropy_wrt_reference(space, mu1) + integrate(space, u, Some(mu0))
                - integrate(space, &qu, Some(mu1))
        }
        Orientation::Backward => {
            eps * entropy_wrt_reference(space, mu0) + integrate(space, u, Some(mu1))
                - integrate(space, &qu, Some(mu0))
        }
    })
}

/// Exactness gaps of the duality theorem at the Schrödinger optimizers.
#[derive(Debug, Clone, Copy)]
pub struct AttainmentReport {
    /// `‖Q₁φ₀ - ε log h_{ε/2} f‖_∞`: the log-domain Hopf-Lax evaluation
    /// against the plain-domain heat flow of the factor `f`.
    pub q_gap: f64,
    /// `|forward objective at φ₀ - ε·I_ε|`.
    pub forward_gap: f64,
    /// `|backward objective at ψ₁ - ε·I_ε|`.
    pub backward_gap: f64,
}

/// Check attainment of both duality formulas at the Schrödinger potentials.
pub fn verify_attainment(
    space: &Space,
    sol: &SchrodingerSolution,
    mu0: &Density,
    mu1: &Density,
) -> Result<AttainmentReport> {
    let q_phi0 = q_apply(space, &sol.phi0, sol.eps, 1.0)?;
    let phi1_plain = space
        .heat_apply(0.5 * sol.eps, &sol.f)?
        .mapv(|v| sol.eps * v.ln());
    let q_gap = q_phi0
        .iter()
        .zip(phi1_plain.iter())
        .map(|(&a, &b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let forward = dual_objective(space, &sol.phi0, mu0, mu1, sol.eps, Orientation::Forward)?;
    let backward = dual_objective(space, &sol.psi1, mu0, mu1, sol.eps, Orientation::Backward)?;
    Ok(AttainmentReport {
        q_gap,
        forward_gap: (forward - sol.cost).abs(),
        backward_gap: (backward - sol.cost).abs(),
    })
}

/// Gradient of the forward dual objective in density form: the ascent update
/// is `u ← u + rate · grad`. Vanishes exactly at `u = φ₀`.
pub fn dual_gradient(
    space: &Space,
    u: &Array1<f64>,
    mu0: &Density,
    mu1: &Density,
    eps: f64,
) -> Result<Array1<f64>> {
    let t = 0.5 * eps;
    let scaled = u.mapv(|v| v / eps);
    let log_hu = space.log_heat_apply(t, &scaled)?;
    // Pushback of μ₁ through the linearization of Q₁ at u:
    // grad = ρ₀ - e^{u/ε} · h_{ε/2}[ ρ₁ / h_{ε/2} e^{u/ε} ].
    let log_z = mu1.values().mapv(f64::ln) - &log_hu;
    let log_y = space.log_heat_apply(t, &log_z)?;
    Ok(mu0.values() - &(&scaled + &log_y).mapv(f64::exp))
}

/// Fixed-rate gradient ascent on the forward dual objective with mean-zero
/// renormalization each step. A rate around `0.5·ε` matches the objective's
/// curvature. Errors out if the objective decreases persistently.
pub fn dual_ascent(
    space: &Space,
    mu0: &Density,
    mu1: &Density,
    eps: f64,
    init: &Array1<f64>,
    steps: usize,
    rate: f64,
) -> Result<Array1<f64>> {
    if !(rate > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "ascent rate must be positive, got {rate}"
        )));
    }
    let total_mass = space.total_mass();
    let mut u = init.clone();
    let mut best = dual_objective(space, &u, mu0, mu1, eps, Orientation::Forward)?;
    let mut below_best = 0usize;
    for _ in 0..steps {
        let grad = dual_gradient(space, &u, mu0, mu1, eps)?;
        u = &u + &grad.mapv(|v| rate * v);
        let mean = integrate(space, &u, None) / total_mass;
        u.mapv_inplace(|v| v - mean);
        let objective = dual_objective(space, &u, mu0, mu1, eps, Orientation::Forward)?;
        // Persistent failure to improve on the running best means the rate
        // overshoots the concave peak (possibly into a cycle).
        if objective < best - 1e-12 * (1.0 + best.abs()) {
            below_best += 1;
            if below_best >= 10 {
                return Err(Error::DivergentAscent(below_best));
            }
        } else {
            below_best = 0;
            best = objective;
        }
    }
    Ok(u)
}
