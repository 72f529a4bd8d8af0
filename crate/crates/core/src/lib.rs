//! # entrolab-core
//!
//! A numerical laboratory for the Schrödinger problem (entropy-regularized
//! optimal transport) on finite reversible metric measure spaces.
//!
//! A space here is a finite set of points with a distance matrix, strictly
//! positive reference weights `m`, and a reversible Markov generator `Δ`.
//! The heat flow `h_t = exp(tΔ)` is evaluated exactly through a cached
//! spectral decomposition, so the semigroup law, mass preservation and
//! self-adjointness hold to floating-point accuracy — no integrator error
//! contaminates the identities this crate is built to check.
//!
//! ## What the crate computes
//!
//! | Module | Content |
//! |--------|---------|
//! | [`space`] | Grid/graph builders, heat flow `h_t`, heat kernel `r_t` |
//! | [`calculus`] | Carré du champ `Γ`, integrals, relative entropy, Fisher information |
//! | [`schrodinger`] | Log-domain IPFP (Sinkhorn) solver, optimal coupling, entropic cost |
//! | [`interpolation`] | Entropic interpolation `ρ_t = f_t g_t`, potentials, PDE residuals |
//! | [`dynamics`] | Fokker-Planck / continuity integration, actions, certified HJB supersolutions |
//! | [`duality`] | Entropic Hopf-Lax operator `Q_t`, Kantorovich dual objective, dual ascent |
//! | [`oracle`] | Exact `W₂` oracles (1-D quantile, small LP), zero-noise sweep |
//! | [`verify`] | The tier-A / tier-B verification suite behind `cmd_verify` and the acceptance tests |
//!
//! ## The two verification tiers
//!
//! - **Tier A** — identities that hold exactly on *every* finite reversible
//!   space (up to floating point): the Schrödinger system, the static/potential
//!   cost identity, interpolation mass and potential identities, Kantorovich
//!   duality and its attainment.
//! - **Tier B** — identities of the continuum theory that a fixed graph only
//!   recovers under grid refinement (the discrete `Γ` has no chain rule):
//!   the three dynamical representations of the cost, HJB residuals, the
//!   Benamou-Brenier attainment values, and the zero-noise limit `ε·I_ε → ½W₂²`.
//!
//! ## Quick start
//!
//! ```rust
//! use entrolab_core::{space::Space, density::Density, schrodinger};
//!
//! let space = Space::circle_grid(64, 1.0).unwrap();
//! let rho0 = Density::from_profile(&space, &entrolab_core::density::Profile::Sine {
//!     amplitude: 0.5, frequency: 1.0 }).unwrap();
//! let rho1 = Density::uniform(&space);
//! let opts = schrodinger::SolverOptions::default();
//! let sol = schrodinger::ipfp_solve(&space, &rho0, &rho1, 0.5, &opts).unwrap();
//! assert!(sol.marginal_residual <= 1e-12);
//! ```

pub mod calculus;
pub mod density;
pub mod duality;
pub mod dynamics;
pub mod interpolation;
pub mod oracle;
pub mod schrodinger;
pub mod space;
pub mod verify;

use thiserror::Error;

/// Error variants across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A builder or operation received an out-of-range parameter.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Negative time passed to the heat flow.
    #[error("heat flow requires t >= 0, got {0}")]
    NegativeTime(f64),

    /// The graph is disconnected, so the heat kernel is not strictly
    /// positive and IPFP may diverge.
    #[error("disconnected space: heat kernel not strictly positive; IPFP may diverge")]
    Disconnected,

    /// Distance matrix fails symmetry, zero diagonal, positivity or the
    /// triangle inequality.
    #[error("inconsistent distance matrix: {0}")]
    InconsistentDistance(String),

    /// Vector length does not match the point count of the space.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A marginal has a zero entry; IPFP potentials would be -inf there.
    #[error("marginal has a zero entry at index {0}; mix with the uniform density (--floor) first")]
    ZeroMarginal(usize),

    /// A density could not be normalized.
    #[error("density not normalizable: {0}")]
    BadDensity(String),

    /// IPFP did not reach the residual tolerance.
    #[error("IPFP did not converge in {iterations} iterations (last residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    /// Explicit time stepping went unstable (negative density).
    #[error("time stepping unstable: density reached {min:.3e} at step {step}; increase K")]
    UnstableTimeStep { min: f64, step: usize },

    /// Dual ascent objective decreased persistently.
    #[error("dual ascent diverging (objective decreased {0} steps in a row); reduce the rate")]
    DivergentAscent(usize),

    /// 1-D oracle called on a space without interval geometry.
    #[error("exact 1-D W2 oracle requires interval geometry with coordinates")]
    NotOneDimensional,

    /// Exact LP oracle is restricted to small instances.
    #[error("exact LP oracle limited to n <= {limit}, got {got}")]
    LpTooLarge { limit: usize, got: usize },

    /// Zero-noise sweep pairing rule eps >= 10 h violated.
    #[error(
        "sweep pairing violates eps >= 10*h (eps = {eps}, h = {h}): on a fixed graph the \
         small-time heat kernel is not in its Gaussian regime, so eps*I_eps need not \
         approach W2^2/2; refine the grid together with eps"
    )]
    PairingRule { eps: f64, h: f64 },
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub use density::Density;
pub use schrodinger::{Coupling, SchrodingerSolution, SolverOptions};

pub use space::Space;
