//! Discrete first-order calculus: carré du champ, integrals, entropy,
//! Fisher information.
//!
//! The square field is defined from the generator's off-diagonal
//! coefficients,
//!
//! ```text
//! Γ(u, v)(x) = ½ Σ_y Δ_xy (u_y - u_x)(v_y - v_x),
//! ```
//!
//! so the discrete integration by parts `∫Γ(u,v) dm = -∫ u·Δv dm` is exact on
//! every reversible space, not just in a refinement limit. The price is that
//! Γ has no chain rule on a fixed graph; identities that need one are
//! tier B and only hold under grid refinement.

use ndarray::Array1;

use crate::density::Density;
use crate::space::Space;
use crate::{Error, Result};

/// Bilinear square field `Γ(u, v)`; `Γ(u, u) ≥ 0` componentwise.
pub fn carre_du_champ(space: &Space, u: &Array1<f64>, v: &Array1<f64>) -> Array1<f64> {
    let n = space.len();
    let g = space.generator();
    let mut out = Array1::zeros(n);
    for x in 0..n {
        let mut acc = 0.0;
        for y in 0..n {
            if y != x {
                acc += g[[x, y]] * (u[y] - u[x]) * (v[y] - v[x]);
            }
        }
        out[x] = 0.5 * acc;
    }
    out
}

/// `Γ(u) := Γ(u, u)`, the discrete stand-in for `|∇u|²`.
pub fn gamma(space: &Space, u: &Array1<f64>) -> Array1<f64> {
    carre_du_champ(space, u, u)
}

/// `∫ f dμ` with `μ = ρ m`, or `∫ f dm` when no density is given.
pub fn integrate(space: &Space, f: &Array1<f64>, density: Option<&Density>) -> f64 {
    match density {
        Some(rho) => f
            .iter()
            .zip(rho.values().iter())
            .zip(space.weights().iter())
            .map(|((&fi, &ri), &wi)| fi * ri * wi)
            .sum(),
        None => f
            .iter()
            .zip(space.weights().iter())
            .map(|(&fi, &wi)| fi * wi)
            .sum(),
    }
}

/// Relative entropy `H(p | q) = Σ_i p_i log(p_i / q_i)` of two measures given
/// by point masses, with the convention `0·log 0 = 0`. Returns `+∞` when `p`
/// charges a point where `q` vanishes.
pub fn relative_entropy(p: &Array1<f64>, q: &Array1<f64>) -> f64 {
    let mut h = 0.0;
    for (&pi, &qi) in p.iter().zip(q.iter()) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return f64::INFINITY;
            }
            h += pi * (pi / qi).ln();
        }
    }
    h
}

/// `H(ρ m | m) = ∫ ρ log ρ dm`, the Boltzmann-Shannon entropy of a density
/// against the reference measure.
pub fn entropy_wrt_reference(space: &Space, rho: &Density) -> f64 {
    relative_entropy(&rho.masses(space), space.weights())
}

/// Adjoint of the gradient-drift transport term in the weak
/// continuity/Fokker-Planck equation: returns the mass-vector derivative
/// `A(u) M` characterized by `Σ_z f_z (A(u)M)_z = Σ_x M_x Γ(f, u)(x)` for
/// every test vector `f`, where `M_x = ρ_x m_x`. Annihilates total mass
/// algebraically, so explicit time stepping conserves probability exactly.
pub fn drift_transport_adjoint(space: &Space, u: &Array1<f64>, masses: &Array1<f64>) -> Array1<f64> {
    let n = space.len();
    let g = space.generator();
    let laplacian_u = space.generator_apply(u);
    let mut out = Array1::zeros(n);
    for z in 0..n {
        let mut acc = 0.0;
        for x in 0..n {
            if x != z {
                acc += masses[x] * g[[x, z]] * (u[z] - u[x]);
            }
        }
        out[z] = 0.5 * (acc - masses[z] * laplacian_u[z]);
    }
    out
}

/// Adjoint of the diffusion term: `(Δᵀ M)_z = Σ_x Δ_xz M_x`, i.e.
/// `d/dt Σ f M = Σ (Δf) M` for every test vector `f`. Also annihilates
/// total mass.
pub fn diffusion_adjoint(space: &Space, masses: &Array1<f64>) -> Array1<f64> {
    space.generator().t().dot(masses)
}

/// Fisher information `∫ Γ(log ρ) ρ dm`; requires a strictly positive density.
pub fn fisher_information(space: &Space, rho: &Density) -> Result<f64> {
    if !rho.is_strictly_positive() {
        return Err(Error::BadDensity(
            "Fisher information needs a strictly positive density (log singularity)".into(),
        ));
    }
    let log_rho = rho.values().mapv(f64::ln);
    Ok(integrate(space, &gamma(space, &log_rho), Some(rho)))
}
