//! Log-domain IPFP (Sinkhorn) solver for the Schrödinger system and the
//! entropic cost.
//!
//! The Schrödinger problem minimizes `H(γ | R)` over couplings `γ` of
//! `μ₀ = ρ₀ m` and `μ₁ = ρ₁ m`, where `R` is the joint heat-kernel measure
//! `R_ij = r_{ε/2}[i][j] m_i m_j`. The minimizer factorizes as
//! `γ_ij = f_i r_{ε/2}[i][j] g_j m_i m_j` with the pair `(f, g)` solving
//!
//! ```text
//! f · h_{ε/2} g = ρ₀        g · h_{ε/2} f = ρ₁.
//! ```
//!
//! IPFP alternates the two marginal fits. All iterations run on
//! `log f, log g` with max-subtraction inside `log h_{ε/2} e^u`, so small `ε`
//! does not overflow `e^{u/ε}`.
//!
//! The entropic cost `ε·I_ε` is computed two independent ways: directly as
//! `ε·H(γ | R)` from the assembled coupling ([`entropic_cost_static`]), and
//! through the potentials as `∫φ₀ dμ₀ + ∫ψ₁ dμ₁`
//! ([`entropic_cost_potentials`]); the two agree exactly on finite spaces,
//! and their agreement is one of the tier-A checks.

use ndarray::{Array1, Array2};
use serde::ser::SerializeStruct;

use crate::calculus::integrate;
use crate::density::Density;
use crate::space::Space;
use crate::{Error, Result};

/// IPFP convergence controls.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Sup-norm relative marginal error at which iteration stops.
    pub tol: f64,
    /// Iteration cap; exceeding it is an error carrying the last residual.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_iter: 50_000,
        }
    }
}

/// Converged output of [`ipfp_solve`].
///
/// Serializes to the JSON document
/// `{eps, f, g, phi0, psi1, cost, iterations, marginal_residual}`.
#[derive(Debug, Clone)]
pub struct SchrodingerSolution {
    pub eps: f64,
    /// First Schrödinger factor (strictly positive).
    pub f: Array1<f64>,
    /// Second Schrödinger factor (strictly positive).
    pub g: Array1<f64>,
    /// `φ₀ = ε log f` in the symmetric gauge.
    pub phi0: Array1<f64>,
    /// `ψ₁ = ε log g` in the symmetric gauge.
    pub psi1: Array1<f64>,
    /// Entropic cost `ε·I_ε`.
    pub cost: f64,
    pub iterations: usize,
    /// Last measured sup-norm relative marginal error.
    pub marginal_residual: f64,
    /// Additive gauge constant applied to reach ∫φ₀ dμ₀ = ∫ψ₁ dμ₁.
    pub gauge: f64,
    /// Residual after each iteration, for monotonicity diagnostics.
    pub residual_history: Vec<f64>,
}

impl serde::Serialize for SchrodingerSolution {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("SchrodingerSolution", 8)?;
        s.serialize_field("eps", &self.eps)?;
        s.serialize_field("f", &self.f.to_vec())?;
        s.serialize_field("g", &self.g.to_vec())?;
        s.serialize_field("phi0", &self.phi0.to_vec())?;
        s.serialize_field("psi1", &self.psi1.to_vec())?;
        s.serialize_field("cost", &self.cost)?;
        s.serialize_field("iterations", &self.iterations)?;
        s.serialize_field("marginal_residual", &self.marginal_residual)?;
        s.end()
    }
}

/// The optimal coupling `γ_ij = f_i r_{ε/2}[i][j] g_j m_i m_j`.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub matrix: Array2<f64>,
}

/// Solve the Schrödinger system by iterative proportional fitting.
///
/// Requires strictly positive marginals (zero entries would push the
/// potentials to -inf; callers can mix with the uniform density first) and
/// `eps > 0`. The returned potentials carry the symmetric gauge
/// `∫φ₀ dμ₀ = ∫ψ₁ dμ₁`; the pair `(c f, g/c)` solves the same system for any
/// `c > 0` and every quantity the theorems use is gauge invariant.
pub fn ipfp_solve(
    space: &Space,
    rho0: &Density,
    rho1: &Density,
    eps: f64,
    opts: &SolverOptions,
) -> Result<SchrodingerSolution> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    for rho in [rho0, rho1] {
        if rho.values().len() != space.len() {
            return Err(Error::DimensionMismatch {
                expected: space.len(),
                got: rho.values().len(),
            });
        }
        if let Some(i) = rho.values().iter().position(|&v| v <= 0.0) {
            return Err(Error::ZeroMarginal(i));
        }
    }
    let t = 0.5 * eps;
    let ln_rho0 = rho0.values().mapv(f64::ln);
    let ln_rho1 = rho1.values().mapv(f64::ln);

    // Start from g = 1; the first f-update then fits the ρ₀ marginal.
    let mut lf = &ln_rho0 - &space.log_heat_apply(t, &Array1::zeros(space.len()))?;
    let mut lg;
    let mut residual_history = Vec::new();
    let mut iterations = 0;
    let residual = loop {
        lg = &ln_rho1 - &space.log_heat_apply(t, &lf)?;
        let lf_next = &ln_rho0 - &space.log_heat_apply(t, &lg)?;
        // Relative ρ₀-marginal error of the current (f, g) pair:
        // f·h g / ρ₀ = exp(lf - lf_next).
        let residual = lf
            .iter()
            .zip(lf_next.iter())
            .map(|(&a, &b)| ((a - b).exp() - 1.0).abs())
            .fold(0.0f64, f64::max);
        lf = lf_next;
        iterations += 1;
        residual_history.push(residual);
        if residual <= opts.tol {
            break residual;
        }
        if iterations >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual,
            });
        }
    };

    // Symmetric gauge: shift a constant between φ₀ and ψ₁ so that
    // ∫φ₀ dμ₀ = ∫ψ₁ dμ₁. The cost is invariant under this shift.
    let mut phi0 = lf.mapv(|v| eps * v);
    let mut psi1 = lg.mapv(|v| eps * v);
    let gauge = 0.5 * (integrate(space, &phi0, Some(rho0)) - integrate(space, &psi1, Some(rho1)));
    phi0.mapv_inplace(|v| v - gauge);
    psi1.mapv_inplace(|v| v + gauge);
    let f = phi0.mapv(|v| (v / eps).exp());
    let g = psi1.mapv(|v| (v / eps).exp());

    let mut solution = SchrodingerSolution {
        eps,
        f,
        g,
        phi0,
        psi1,
        cost: 0.0,
        iterations,
        marginal_residual: residual,
        gauge,
        residual_history,
    };
    solution.cost = entropic_cost_potentials(space, &solution, rho0, rho1);
    Ok(solution)
}

/// Assemble the optimal coupling from a converged solution. Entries are
/// built in log domain, so extreme potentials cannot overflow.
pub fn coupling(space: &Space, sol: &SchrodingerSolution) -> Result<Coupling> {
    let kernel = space.heat_kernel(0.5 * sol.eps)?;
    let n = space.len();
    let ln_m = space.weights().mapv(f64::ln);
    let mut matrix = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let r = kernel[[i, j]].max(0.0);
            matrix[[i, j]] = (sol.phi0[i] / sol.eps
                + sol.psi1[j] / sol.eps
                + r.ln()
                + ln_m[i]
                + ln_m[j])
                .exp();
        }
    }
    Ok(Coupling { matrix })
}

/// Entropic cost evaluated directly on a coupling: `ε Σ γ log(γ / R)` with
/// `R_ij = r_{ε/2}[i][j] m_i m_j` and the convention `0·log 0 = 0`. Returns
/// `+∞` if the coupling charges an `R`-null entry. This route never touches
/// the potentials, so it cross-checks [`entropic_cost_potentials`].
pub fn entropic_cost_static(space: &Space, coupling: &Coupling, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let kernel = space.heat_kernel(0.5 * eps)?;
    let n = space.len();
    if coupling.matrix.shape() != [n, n] {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: coupling.matrix.shape()[0],
        });
    }
    let w = space.weights();
    let mut h = 0.0;
    for i in 0..n {
        for j in 0..n {
            let gamma = coupling.matrix[[i, j]];
            if gamma > 0.0 {
                let reference = kernel[[i, j]].max(0.0) * w[i] * w[j];
                if reference <= 0.0 {
                    return Ok(f64::INFINITY);
                }
                h += gamma * (gamma / reference).ln();
            }
        }
    }
    Ok(eps * h)
}

/// Entropic cost through the potentials: `∫φ₀ dμ₀ + ∫ψ₁ dμ₁`.
pub fn entropic_cost_potentials(
    space: &Space,
    sol: &SchrodingerSolution,
    mu0: &Density,
    mu1: &Density,
) -> f64 {
    integrate(space, &sol.phi0, Some(mu0)) + integrate(space, &sol.psi1, Some(mu1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn two_point() -> (Space, Density, Density) {
        let s = Space::interval_grid(2, 2.0).unwrap();
        let rho0 = Density::normalized(&s, array![0.8, 0.2]).unwrap();
        let rho1 = Density::normalized(&s, array![0.3, 0.7]).unwrap();
        (s, rho0, rho1)
    }

    #[test]
    fn uniform_marginals_give_zero_cost_and_constant_factors() {
        // Unit total mass, so H(R|R) = 0 exactly.
        let s = Space::circle_grid(24, 1.0).unwrap();
        let u = Density::uniform(&s);
        let sol = ipfp_solve(&s, &u, &u, 0.7, &SolverOptions::default()).unwrap();
        assert!(sol.cost.abs() < 1e-12, "cost {}", sol.cost);
        let f0 = sol.f[0];
        assert!(sol.f.iter().all(|&v| (v - f0).abs() < 1e-12));
        assert!(sol.marginal_residual <= 1e-12);
        // Coupling is the normalized kernel measure.
        let c = coupling(&s, &sol).unwrap();
        let k = s.heat_kernel(0.35).unwrap();
        let w = s.weights();
        for i in 0..s.len() {
            for j in 0..s.len() {
                let want = k[[i, j]] * w[i] * w[j];
                assert!((c.matrix[[i, j]] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn schrodinger_system_holds_at_convergence() {
        let (s, rho0, rho1) = two_point();
        let sol = ipfp_solve(&s, &rho0, &rho1, 1.0, &SolverOptions::default()).unwrap();
        let hg = s.heat_apply(0.5, &sol.g).unwrap();
        let hf = s.heat_apply(0.5, &sol.f).unwrap();
        for i in 0..2 {
            let r0 = (sol.f[i] * hg[i] / rho0.values()[i] - 1.0).abs();
            let r1 = (sol.g[i] * hf[i] / rho1.values()[i] - 1.0).abs();
            assert!(r0 <= 10.0 * sol.marginal_residual.max(1e-15), "r0 = {r0:.2e}");
            assert!(r1 <= 10.0 * sol.marginal_residual.max(1e-15), "r1 = {r1:.2e}");
        }
        // Symmetric gauge: the two potential integrals agree.
        let a = integrate(&s, &sol.phi0, Some(&rho0));
        let b = integrate(&s, &sol.psi1, Some(&rho1));
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn residuals_decrease_monotonically() {
        let s = Space::circle_grid(48, 1.0).unwrap();
        let rho0 = Density::from_profile(
            &s,
            &crate::density::Profile::Gaussian { center: 0.25, scale: 0.02 },
        )
        .unwrap();
        let rho1 = Density::from_profile(
            &s,
            &crate::density::Profile::Gaussian { center: 0.75, scale: 0.03 },
        )
        .unwrap();
        let sol = ipfp_solve(&s, &rho0, &rho1, 0.3, &SolverOptions::default()).unwrap();
        for pair in sol.residual_history.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-13,
                "residual increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn cost_symmetric_under_marginal_swap() {
        let (s, rho0, rho1) = two_point();
        let a = ipfp_solve(&s, &rho0, &rho1, 1.0, &SolverOptions::default()).unwrap();
        let b = ipfp_solve(&s, &rho1, &rho0, 1.0, &SolverOptions::default()).unwrap();
        assert!((a.cost - b.cost).abs() < 1e-9, "{} vs {}", a.cost, b.cost);
    }

    #[test]
    fn two_point_cost_matches_scan_oracle() {
        let (s, rho0, rho1) = two_point();
        let sol = ipfp_solve(&s, &rho0, &rho1, 1.0, &SolverOptions::default()).unwrap();
        let oracle = crate::oracle::two_point_cost_scan(&s, &rho0, &rho1, 1.0).unwrap();
        assert!(
            (sol.cost - oracle).abs() < 1e-6,
            "ipfp {} vs scan {}",
            sol.cost,
            oracle
        );
        // The static evaluation agrees with the same oracle.
        let c = coupling(&s, &sol).unwrap();
        let static_cost = entropic_cost_static(&s, &c, 1.0).unwrap();
        assert!((static_cost - oracle).abs() < 1e-6);
    }

    #[test]
    fn coupling_marginals_match() {
        let (s, rho0, rho1) = two_point();
        let sol = ipfp_solve(&s, &rho0, &rho1, 0.5, &SolverOptions::default()).unwrap();
        let c = coupling(&s, &sol).unwrap();
        let mu0 = rho0.masses(&s);
        let mu1 = rho1.masses(&s);
        for i in 0..2 {
            let row: f64 = (0..2).map(|j| c.matrix[[i, j]]).sum();
            let col: f64 = (0..2).map(|j| c.matrix[[j, i]]).sum();
            assert!((row / mu0[i] - 1.0).abs() < 1e-11, "row {i}");
            assert!((col / mu1[i] - 1.0).abs() < 1e-11, "col {i}");
        }
        let total: f64 = c.matrix.iter().sum();
        assert!((total - 1.0).abs() < 1e-11);
        assert!(c.matrix.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn static_and_potential_costs_agree() {
        let (s, rho0, rho1) = two_point();
        for eps in [0.3, 1.0, 2.5] {
            let sol = ipfp_solve(&s, &rho0, &rho1, eps, &SolverOptions::default()).unwrap();
            let c = coupling(&s, &sol).unwrap();
            let stat = entropic_cost_static(&s, &c, eps).unwrap();
            let pot = entropic_cost_potentials(&s, &sol, &rho0, &rho1);
            let tol = (10.0 * sol.marginal_residual).max(1e-8);
            assert!((stat - pot).abs() < tol, "eps {eps}: {stat} vs {pot}");
        }
    }

    #[test]
    fn gauge_rescaling_leaves_cost_unchanged() {
        let (s, rho0, rho1) = two_point();
        let mut sol = ipfp_solve(&s, &rho0, &rho1, 1.0, &SolverOptions::default()).unwrap();
        let base = entropic_cost_potentials(&s, &sol, &rho0, &rho1);
        // Apply (f, g) -> (c f, g / c), i.e. shift the potentials by ±ε log c.
        let shift = 0.773;
        sol.phi0.mapv_inplace(|v| v + shift);
        sol.psi1.mapv_inplace(|v| v - shift);
        let shifted = entropic_cost_potentials(&s, &sol, &rho0, &rho1);
        assert!((base - shifted).abs() < 1e-12);
    }

    #[test]
    fn minimality_against_marginal_preserving_perturbations() {
        use rand::{Rng, SeedableRng};
        let (s, rho0, rho1) = two_point();
        let eps = 1.0;
        let sol = ipfp_solve(&s, &rho0, &rho1, eps, &SolverOptions::default()).unwrap();
        let c = coupling(&s, &sol).unwrap();
        let optimal = entropic_cost_static(&s, &c, eps).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            // Two-point circulation: γ ± s on the diagonal, ∓ s off it.
            let max_s = c.matrix[[0, 1]].min(c.matrix[[1, 0]]);
            let min_s = -c.matrix[[0, 0]].min(c.matrix[[1, 1]]);
            let sft: f64 = rng.gen_range(min_s..max_s);
            let mut perturbed = c.matrix.clone();
            perturbed[[0, 0]] += sft;
            perturbed[[1, 1]] += sft;
            perturbed[[0, 1]] -= sft;
            perturbed[[1, 0]] -= sft;
            let value = entropic_cost_static(&s, &Coupling { matrix: perturbed }, eps).unwrap();
            assert!(value >= optimal - 1e-10, "perturbed {value} < optimal {optimal}");
        }
    }

    #[test]
    fn error_paths() {
        let (s, rho0, rho1) = two_point();
        assert!(matches!(
            ipfp_solve(&s, &rho0, &rho1, -1.0, &SolverOptions::default()),
            Err(Error::InvalidParameter(_))
        ));
        let opts = SolverOptions { tol: 1e-16, max_iter: 2 };
        assert!(matches!(
            ipfp_solve(&s, &rho0, &rho1, 0.1, &opts),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn solution_serializes_to_documented_fields() {
        let (s, rho0, rho1) = two_point();
        let sol = ipfp_solve(&s, &rho0, &rho1, 1.0, &SolverOptions::default()).unwrap();
        let json = serde_json::to_value(&sol).unwrap();
        let obj = json.as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            vec!["cost", "eps", "f", "g", "iterations", "marginal_residual", "phi0", "psi1"]
        );
    }
}
