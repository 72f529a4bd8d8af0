//! Entropic interpolation and its dynamical identities.
//!
//! From a converged Schrödinger solution `(f, g)` the interpolation at time
//! `t ∈ [0, 1]` is
//!
//! ```text
//! f_t = h_{εt/2} f      g_t = h_{ε(1-t)/2} g      ρ_t = f_t g_t
//! φ_t = ε log f_t       ψ_t = ε log g_t           θ_t = (ψ_t - φ_t)/2
//! ```
//!
//! Every time slice is evaluated by the exact spectral heat flow (in log
//! domain, so small `ε` is safe); there is no time stepping anywhere in this
//! module. Consequently `∫ρ_t dm = 1` and `φ_t + ψ_t = ε log ρ_t` hold to
//! floating point for every grid time (tier A), while the dynamical cost
//! representations and the Hamilton-Jacobi-Bellman residuals converge only
//! under grid refinement (tier B).

use ndarray::Array1;

use crate::calculus::{
    drift_transport_adjoint, entropy_wrt_reference, fisher_information, gamma, integrate,
};
use crate::density::Density;
use crate::schrodinger::SchrodingerSolution;
use crate::space::Space;
use crate::{Error, Result};

/// `φ_t = ε log h_{εt/2} f`, evaluated in log domain at an arbitrary time.
pub fn phi_at(space: &Space, sol: &SchrodingerSolution, t: f64) -> Result<Array1<f64>> {
    let u = sol.phi0.mapv(|v| v / sol.eps);
    Ok(space
        .log_heat_apply(0.5 * sol.eps * t, &u)?
        .mapv(|v| v * sol.eps))
}

/// `ψ_t = ε log h_{ε(1-t)/2} g`, evaluated in log domain at an arbitrary time.
pub fn psi_at(space: &Space, sol: &SchrodingerSolution, t: f64) -> Result<Array1<f64>> {
    let u = sol.psi1.mapv(|v| v / sol.eps);
    Ok(space
        .log_heat_apply(0.5 * sol.eps * (1.0 - t), &u)?
        .mapv(|v| v * sol.eps))
}

/// `θ_t = (ψ_t - φ_t)/2`, the drift potential of the continuity equation.
pub fn theta_at(space: &Space, sol: &SchrodingerSolution, t: f64) -> Result<Array1<f64>> {
    let phi = phi_at(space, sol, t)?;
    let psi = psi_at(space, sol, t)?;
    Ok((&psi - &phi).mapv(|v| 0.5 * v))
}

/// `log ρ_t = (φ_t + ψ_t)/ε`.
pub fn log_rho_at(space: &Space, sol: &SchrodingerSolution, t: f64) -> Result<Array1<f64>> {
    let phi = phi_at(space, sol, t)?;
    let psi = psi_at(space, sol, t)?;
    Ok((&phi + &psi).mapv(|v| v / sol.eps))
}

/// Time-sampled entropic interpolation on the uniform grid
/// `t_k = k/K, k = 0..=K`.
#[derive(Debug, Clone)]
pub struct InterpolationPath {
    pub eps: f64,
    pub times: Vec<f64>,
    pub f: Vec<Array1<f64>>,
    pub g: Vec<Array1<f64>>,
    pub rho: Vec<Density>,
    pub phi: Vec<Array1<f64>>,
    pub psi: Vec<Array1<f64>>,
    pub theta: Vec<Array1<f64>>,
}

/// Build the interpolation on `K+1` uniform grid times; `K ≥ 2`.
pub fn interpolate(
    space: &Space,
    sol: &SchrodingerSolution,
    steps: usize,
) -> Result<InterpolationPath> {
    if steps < 2 {
        return Err(Error::InvalidParameter(format!(
            "interpolation needs K >= 2 time steps, got {steps}"
        )));
    }
    let mut path = InterpolationPath {
        eps: sol.eps,
        times: Vec::with_capacity(steps + 1),
        f: Vec::with_capacity(steps + 1),
        g: Vec::with_capacity(steps + 1),
        rho: Vec::with_capacity(steps + 1),
        phi: Vec::with_capacity(steps + 1),
        psi: Vec::with_capacity(steps + 1),
        theta: Vec::with_capacity(steps + 1),
    };
    for k in 0..=steps {
        let t = k as f64 / steps as f64;
        let phi = phi_at(space, sol, t)?;
        let psi = psi_at(space, sol, t)?;
        let log_rho = (&phi + &psi).mapv(|v| v / sol.eps);
        path.times.push(t);
        path.f.push(phi.mapv(|v| (v / sol.eps).exp()));
        path.g.push(psi.mapv(|v| (v / sol.eps).exp()));
        path.rho
            .push(Density::from_raw_unchecked(log_rho.mapv(f64::exp)));
        path.theta.push((&psi - &phi).mapv(|v| 0.5 * v));
        path.phi.push(phi);
        path.psi.push(psi);
    }
    Ok(path)
}

impl InterpolationPath {
    pub fn step_count(&self) -> usize {
        self.times.len() - 1
    }

    /// CSV export: one row per `(t, point)` with header
    /// `t,index,rho,phi,psi,theta`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,index,rho,phi,psi,theta\n");
        for (k, &t) in self.times.iter().enumerate() {
            let rho = self.rho[k].values();
            for i in 0..rho.len() {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    t, i, rho[i], self.phi[k][i], self.psi[k][i], self.theta[k][i]
                ));
            }
        }
        out
    }
}

/// The three dynamical representations of the entropic cost, each computed
/// by trapezoid quadrature in time over the path:
///
/// - `theta_fisher`: `ε/2(H₀+H₁) + ∫∫(½Γ(θ_t) + ε²/8 Γ(log ρ_t)) ρ_t dm dt`
/// - `forward`:      `ε H₀ + ∫∫ ½Γ(ψ_t) ρ_t dm dt`
/// - `backward`:     `ε H₁ + ∫∫ ½Γ(φ_t) ρ_t dm dt`
///
/// All three equal `ε·I_ε` in the continuum; on a fixed graph they agree
/// only up to the chain-rule defect of `Γ` (tier B).
#[derive(Debug, Clone, Copy)]
pub struct DynRepresentations {
    pub theta_fisher: f64,
    pub forward: f64,
    pub backward: f64,
}

impl DynRepresentations {
    /// Maximum pairwise relative spread among the three values and a
    /// reference cost.
    pub fn spread(&self, cost: f64) -> f64 {
        let vals = [self.theta_fisher, self.forward, self.backward, cost];
        let scale = cost.abs().max(1e-300);
        let mut worst = 0.0f64;
        for a in vals {
            for b in vals {
                worst = worst.max((a - b).abs() / scale);
            }
        }
        worst
    }
}

/// Evaluate the three dynamical cost representations on a path with `K ≥ 16`.
pub fn dyn_representations(
    space: &Space,
    path: &InterpolationPath,
    mu0: &Density,
    mu1: &Density,
) -> Result<DynRepresentations> {
    let steps = path.step_count();
    if steps < 16 {
        return Err(Error::InvalidParameter(format!(
            "dynamical representations need K >= 16, got {steps}"
        )));
    }
    let eps = path.eps;
    let h0 = entropy_wrt_reference(space, mu0);
    let h1 = entropy_wrt_reference(space, mu1);
    let mut kinetic_theta = 0.0;
    let mut fisher = 0.0;
    let mut kinetic_psi = 0.0;
    let mut kinetic_phi = 0.0;
    let dt = 1.0 / steps as f64;
    for k in 0..=steps {
        let w = if k == 0 || k == steps { 0.5 * dt } else { dt };
        let rho = &path.rho[k];
        kinetic_theta += w * 0.5 * integrate(space, &gamma(space, &path.theta[k]), Some(rho));
        fisher += w * fisher_information(space, rho)?;
        kinetic_psi += w * 0.5 * integrate(space, &gamma(space, &path.psi[k]), Some(rho));
        kinetic_phi += w * 0.5 * integrate(space, &gamma(space, &path.phi[k]), Some(rho));
    }
    Ok(DynRepresentations {
        theta_fisher: 0.5 * eps * (h0 + h1) + kinetic_theta + 0.125 * eps * eps * fisher,
        forward: eps * h0 + kinetic_psi,
        backward: eps * h1 + kinetic_phi,
    })
}

/// Max-norm residuals of the interpolation PDE system, with time derivatives
/// by central differences on interior grid times.
///
/// The heat equations for `f_t, g_t` are exact up to the `O(Δt²)` central
/// difference (tier A in space), while the HJB equations for `φ_t, ψ_t`, the
/// `θ`-equation and the continuity equation additionally carry the
/// chain-rule defect of the discrete `Γ` (tier B). The `θ`-equation right
/// side `-ε²/8 (2Δ log ρ + |∇log ρ|²)` admits two inequivalent
/// discretizations, both reported: `theta_gamma` uses `Γ(log ρ)` with
/// `Δ log ρ`, `theta_generator` uses `2Δρ/ρ - Γ(log ρ)`.
#[derive(Debug, Clone, Copy)]
pub struct PdeResiduals {
    pub heat_f: f64,
    pub heat_g: f64,
    pub hjb_phi: f64,
    pub hjb_psi: f64,
    pub theta_gamma: f64,
    pub theta_generator: f64,
    pub continuity: f64,
}

/// Compute PDE residuals on a path with `K ≥ 32`.
pub fn pde_residuals(space: &Space, path: &InterpolationPath, eps: f64) -> Result<PdeResiduals> {
    let steps = path.step_count();
    if steps < 32 {
        return Err(Error::InvalidParameter(format!(
            "PDE residuals need K >= 32, got {steps}"
        )));
    }
    let dt = 1.0 / steps as f64;
    let max_abs = |v: &Array1<f64>| v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut r = PdeResiduals {
        heat_f: 0.0,
        heat_g: 0.0,
        hjb_phi: 0.0,
        hjb_psi: 0.0,
        theta_gamma: 0.0,
        theta_generator: 0.0,
        continuity: 0.0,
    };
    for k in 1..steps {
        let ddt = |field: &[Array1<f64>]| (&field[k + 1] - &field[k - 1]).mapv(|v| v / (2.0 * dt));

        let df = ddt(&path.f);
        r.heat_f = r
            .heat_f
            .max(max_abs(&(&df - &space.generator_apply(&path.f[k]).mapv(|v| 0.5 * eps * v))));

        let dg = ddt(&path.g);
        r.heat_g = r
            .heat_g
            .max(max_abs(&(&dg + &space.generator_apply(&path.g[k]).mapv(|v| 0.5 * eps * v))));

        let dphi = ddt(&path.phi);
        let hjb_rhs_phi = gamma(space, &path.phi[k]).mapv(|v| 0.5 * v)
            + space.generator_apply(&path.phi[k]).mapv(|v| 0.5 * eps * v);
        r.hjb_phi = r.hjb_phi.max(max_abs(&(&dphi - &hjb_rhs_phi)));

        let dpsi = ddt(&path.psi);
        let hjb_rhs_psi = gamma(space, &path.psi[k]).mapv(|v| 0.5 * v)
            + space.generator_apply(&path.psi[k]).mapv(|v| 0.5 * eps * v);
        r.hjb_psi = r.hjb_psi.max(max_abs(&(&dpsi + &hjb_rhs_psi)));

        let dtheta = ddt(&path.theta);
        let rho = path.rho[k].values();
        let log_rho = rho.mapv(f64::ln);
        let gamma_log_rho = gamma(space, &log_rho);
        let lhs = &dtheta + &gamma(space, &path.theta[k]).mapv(|v| 0.5 * v);
        let coeff = eps * eps / 8.0;
        let rhs_gamma = (space.generator_apply(&log_rho).mapv(|v| 2.0 * v) + &gamma_log_rho)
            .mapv(|v| -coeff * v);
        r.theta_gamma = r.theta_gamma.max(max_abs(&(&lhs - &rhs_gamma)));
        let rhs_generator = (space.generator_apply(rho).mapv(|v| 2.0 * v) / rho - &gamma_log_rho)
            .mapv(|v| -coeff * v);
        r.theta_generator = r.theta_generator.max(max_abs(&(&lhs - &rhs_generator)));

        let masses_prev = path.rho[k - 1].masses(space);
        let masses_next = path.rho[k + 1].masses(space);
        let dmass = (&masses_next - &masses_prev).mapv(|v| v / (2.0 * dt));
        let transport = drift_transport_adjoint(space, &path.theta[k], &path.rho[k].masses(space));
        r.continuity = r.continuity.max(max_abs(&(&dmass - &transport)));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Profile;
    use crate::schrodinger::{ipfp_solve, SolverOptions};

    fn circle_problem(n: usize, eps: f64) -> (Space, Density, Density, SchrodingerSolution) {
        let s = Space::circle_grid(n, 1.0).unwrap();
        let rho0 =
            Density::from_profile(&s, &Profile::Sine { amplitude: 0.5, frequency: 1.0 }).unwrap();
        let rho1 =
            Density::from_profile(&s, &Profile::Cosine { amplitude: 0.5, frequency: 1.0 }).unwrap();
        let sol = ipfp_solve(&s, &rho0, &rho1, eps, &SolverOptions::default()).unwrap();
        (s, rho0, rho1, sol)
    }

    #[test]
    fn uniform_marginals_interpolate_to_uniform() {
        let s = Space::circle_grid(16, 1.0).unwrap();
        let u = Density::uniform(&s);
        let sol = ipfp_solve(&s, &u, &u, 0.5, &SolverOptions::default()).unwrap();
        let path = interpolate(&s, &sol, 8).unwrap();
        for k in 0..=8 {
            for &v in path.rho[k].values().iter() {
                assert!((v - 1.0).abs() < 1e-12);
            }
            for &v in path.theta[k].iter() {
                assert!(v.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_tiny_grids() {
        let s = Space::circle_grid(8, 1.0).unwrap();
        let u = Density::uniform(&s);
        let sol = ipfp_solve(&s, &u, &u, 0.5, &SolverOptions::default()).unwrap();
        assert!(interpolate(&s, &sol, 1).is_err());
        let path = interpolate(&s, &sol, 8).unwrap();
        assert!(dyn_representations(&s, &path, &u, &u).is_err());
        assert!(pde_residuals(&s, &path, 0.5).is_err());
    }

    #[test]
    fn mass_and_potential_identity_hold_at_every_time() {
        let (s, _, _, sol) = circle_problem(32, 0.4);
        let path = interpolate(&s, &sol, 20).unwrap();
        for k in 0..=20 {
            let mass: f64 = path.rho[k].masses(&s).sum();
            assert!((mass - 1.0).abs() < 1e-12, "t = {}: mass {mass}", path.times[k]);
            let log_rho = path.rho[k].values().mapv(f64::ln);
            for i in 0..s.len() {
                let lhs = path.phi[k][i] + path.psi[k][i];
                let rhs = sol.eps * log_rho[i];
                assert!((lhs - rhs).abs() < 1e-12);
            }
            assert!(path.rho[k].is_strictly_positive());
        }
    }

    #[test]
    fn endpoints_match_marginals() {
        let (s, rho0, rho1, sol) = circle_problem(32, 0.4);
        let path = interpolate(&s, &sol, 8).unwrap();
        let tol = (10.0 * sol.marginal_residual).max(1e-12);
        for i in 0..s.len() {
            assert!((path.rho[0].values()[i] / rho0.values()[i] - 1.0).abs() <= tol);
            assert!((path.rho[8].values()[i] / rho1.values()[i] - 1.0).abs() <= tol);
        }
    }

    #[test]
    fn symmetric_data_has_vanishing_midpoint_theta() {
        // ρ0 = ρ1 forces f = g up to gauge, so θ at t = 1/2 vanishes.
        let s = Space::circle_grid(24, 1.0).unwrap();
        let rho =
            Density::from_profile(&s, &Profile::Sine { amplitude: 0.4, frequency: 1.0 }).unwrap();
        let sol = ipfp_solve(&s, &rho, &rho, 0.6, &SolverOptions::default()).unwrap();
        let theta_mid = theta_at(&s, &sol, 0.5).unwrap();
        for &v in theta_mid.iter() {
            assert!(v.abs() < 1e-10, "theta(1/2) = {v}");
        }
    }

    #[test]
    fn time_reversal_swaps_the_path() {
        let (s, rho0, rho1, sol) = circle_problem(24, 0.5);
        let _ = (&rho0, &rho1);
        let swapped = ipfp_solve(&s, &rho1, &rho0, 0.5, &SolverOptions::default()).unwrap();
        let path = interpolate(&s, &sol, 10).unwrap();
        let reversed = interpolate(&s, &swapped, 10).unwrap();
        for k in 0..=10 {
            let a = path.rho[k].values();
            let b = reversed.rho[10 - k].values();
            for i in 0..s.len() {
                assert!(
                    (a[i] - b[i]).abs() < 1e-10,
                    "t = {}: {} vs {}",
                    path.times[k],
                    a[i],
                    b[i]
                );
            }
        }
    }

    #[test]
    fn entropy_is_continuous_along_the_path() {
        let (s, _, _, sol) = circle_problem(32, 0.4);
        let jump = |steps: usize| {
            let path = interpolate(&s, &sol, steps).unwrap();
            path.rho
                .windows(2)
                .map(|w| {
                    (entropy_wrt_reference(&s, &w[1]) - entropy_wrt_reference(&s, &w[0])).abs()
                })
                .fold(0.0f64, f64::max)
        };
        let coarse = jump(16);
        let fine = jump(64);
        assert!(fine < 0.5 * coarse, "jumps {coarse} -> {fine}");
    }

    #[test]
    fn uniform_marginals_have_zero_representations_and_residuals() {
        let s = Space::circle_grid(16, 1.0).unwrap();
        let u = Density::uniform(&s);
        let sol = ipfp_solve(&s, &u, &u, 0.5, &SolverOptions::default()).unwrap();
        let path = interpolate(&s, &sol, 40).unwrap();
        let reps = dyn_representations(&s, &path, &u, &u).unwrap();
        assert!(reps.theta_fisher.abs() < 1e-12);
        assert!(reps.forward.abs() < 1e-12);
        assert!(reps.backward.abs() < 1e-12);
        let res = pde_residuals(&s, &path, 0.5).unwrap();
        for v in [
            res.heat_f,
            res.heat_g,
            res.hjb_phi,
            res.hjb_psi,
            res.theta_gamma,
            res.theta_generator,
            res.continuity,
        ] {
            assert!(v < 1e-12, "residual {v}");
        }
    }

    #[test]
    fn heat_residual_shrinks_quadratically_in_dt() {
        let (s, _, _, sol) = circle_problem(48, 0.3);
        let res = |steps: usize| {
            let path = interpolate(&s, &sol, steps).unwrap();
            pde_residuals(&s, &path, 0.3).unwrap()
        };
        let coarse = res(64);
        let fine = res(128);
        let ratio = coarse.heat_f / fine.heat_f;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
        let ratio_g = coarse.heat_g / fine.heat_g;
        assert!((3.0..5.0).contains(&ratio_g), "ratio {ratio_g}");
    }

    #[test]
    fn dyn_representations_converge_on_refinement() {
        // Tier B: the spread among the three representations and the IPFP
        // cost shrinks under joint grid refinement.
        let mut spreads = Vec::new();
        for n in [64usize, 128] {
            let (s, rho0, rho1, sol) = circle_problem(n, 0.2);
            let path = interpolate(&s, &sol, n / 4).unwrap();
            let reps = dyn_representations(&s, &path, &rho0, &rho1).unwrap();
            spreads.push(reps.spread(sol.cost));
        }
        assert!(
            spreads[1] < spreads[0] / 1.5,
            "spreads did not shrink: {spreads:?}"
        );
    }

    #[test]
    fn csv_shape_matches_grid() {
        let (s, _, _, sol) = circle_problem(16, 0.5);
        let path = interpolate(&s, &sol, 4).unwrap();
        let csv = path.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,index,rho,phi,psi,theta");
        assert_eq!(lines.len(), 1 + 5 * s.len());
    }
}
