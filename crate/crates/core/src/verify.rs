//! The verification suite: every identity the crate exists to check, runnable
//! as a whole (CLI `verify`, acceptance tests) with one named result per
//! criterion.
//!
//! Tier A bundles the identities that are exact on any finite reversible
//! space; their tolerances are floating-point level. Tier B bundles the
//! refinement-convergent identities on circle/interval grids; their
//! thresholds were calibrated once against finer reference runs (n = 1024
//! for the dynamical representations, the exact 1-D `W₂` oracle for the
//! zero-noise sweep) and then frozen here.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::{
    carre_du_champ, entropy_wrt_reference, fisher_information, integrate,
};
use crate::density::{Density, Profile};
use crate::duality::{dual_objective, q_apply, verify_attainment, Orientation};
use crate::dynamics::{
    build_supersolution, check_hjb_fpe_duality, integrate_fpe, path_action, Direction,
    PotentialPath,
};
use crate::interpolation::{dyn_representations, interpolate, pde_residuals, psi_at};
use crate::oracle::{two_point_cost_scan, zero_noise_sweep, SweepSpec};
use crate::schrodinger::{
    coupling, entropic_cost_potentials, entropic_cost_static, ipfp_solve, SolverOptions,
};
use crate::space::Space;
use crate::Result;

/// Comparison direction of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Cmp {
    /// Pass iff `measured <= threshold`.
    #[serde(rename = "<=")]
    Le,
    /// Pass iff `measured >= threshold`.
    #[serde(rename = ">=")]
    Ge,
    /// Pass iff `measured < threshold`.
    #[serde(rename = "<")]
    Lt,
}

/// One named check with its measured value and frozen threshold.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub tier: char,
    pub measured: f64,
    pub cmp: Cmp,
    pub threshold: f64,
    pub passed: bool,
    /// Context: refinement levels, per-property values, instance counts.
    pub detail: String,
}

impl CheckResult {
    fn new(
        tier: char,
        name: &str,
        measured: f64,
        cmp: Cmp,
        threshold: f64,
        detail: String,
    ) -> CheckResult {
        let passed = match cmp {
            Cmp::Le => measured <= threshold,
            Cmp::Ge => measured >= threshold,
            Cmp::Lt => measured < threshold,
        };
        CheckResult {
            name: name.to_string(),
            tier,
            measured,
            cmp,
            threshold,
            passed,
            detail,
        }
    }
}

/// Which tiers to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TierSelection {
    A,
    B,
    All,
}

/// Suite output: one row per check plus provenance.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

impl VerificationReport {
    pub fn table(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let cmp = match c.cmp {
                Cmp::Le => "<=",
                Cmp::Ge => ">=",
                Cmp::Lt => "<",
            };
            out.push_str(&format!(
                "{} tier-{} {:<34} {:>13.6e} {} {:>10.3e}  {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.tier,
                c.name,
                c.measured,
                cmp,
                c.threshold,
                c.detail
            ));
        }
        out
    }
}

/// Run the selected tiers with a fixed seed for the randomized parts.
pub fn run_suite(tier: TierSelection, seed: u64, config_hash: &str) -> Result<VerificationReport> {
    let mut checks = Vec::new();
    if tier != TierSelection::B {
        checks.extend(tier_a(seed)?);
    }
    if tier != TierSelection::A {
        checks.extend(tier_b(seed)?);
    }
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(VerificationReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config_hash: config_hash.to_string(),
        checks,
        all_passed,
    })
}

/// A random connected weighted graph: a spanning chain plus extra edges.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Space {
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((i - 1, i, rng.gen_range(0.25..4.0)));
    }
    for _ in 0..n / 2 {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j {
            edges.push((i.min(j), i.max(j), rng.gen_range(0.25..4.0)));
        }
    }
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.25..4.0)).collect();
    Space::graph(&edges, &weights, None).expect("chain backbone keeps the graph connected")
}

fn random_space(rng: &mut ChaCha8Rng, index: usize) -> Space {
    match index % 3 {
        0 => Space::circle_grid(rng.gen_range(8..64), rng.gen_range(0.5..2.0)).unwrap(),
        1 => Space::interval_grid(rng.gen_range(4..64), rng.gen_range(0.5..2.0)).unwrap(),
        _ => {
            let n = if index % 30 == 2 {
                rng.gen_range(128..=256)
            } else {
                rng.gen_range(3..24)
            };
            random_graph(rng, n)
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Array1<f64> {
    Array1::from_iter((0..n).map(|_| rng.gen_range(lo..hi)))
}

fn random_density(rng: &mut ChaCha8Rng, space: &Space) -> Density {
    Density::normalized(space, random_vector(rng, space.len(), 0.2, 2.0)).unwrap()
}

fn max_abs(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

// ---------------------------------------------------------------- tier A --

fn tier_a(seed: u64) -> Result<Vec<CheckResult>> {
    let mut checks = Vec::new();
    checks.extend(heat_flow_checks(seed)?);
    checks.push(integration_by_parts_check(seed));
    checks.extend(schrodinger_checks(seed)?);
    checks.push(cost_route_agreement_check(seed)?);
    checks.extend(interpolation_checks()?);
    checks.extend(duality_checks(seed)?);
    checks.push(two_point_oracle_check(seed)?);
    checks.push(determinism_check(seed)?);
    Ok(checks)
}

/// Criterion 1: semigroup law, mass preservation, maximum principle, kernel
/// symmetry, self-adjointness on 100 random instances.
fn heat_flow_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA1);
    let instances = 100;
    let mut semigroup = 0.0f64;
    let mut mass = 0.0f64;
    let mut maximum = 0.0f64;
    let mut symmetry = 0.0f64;
    let mut self_adjoint = 0.0f64;
    for i in 0..instances {
        let space = random_space(&mut rng, i);
        let n = space.len();
        let f = random_vector(&mut rng, n, -1.0, 1.0);
        let g = random_vector(&mut rng, n, -1.0, 1.0);
        let s: f64 = rng.gen_range(0.01..0.8);
        let t: f64 = rng.gen_range(0.01..0.8);

        let two_hops = space.heat_apply(s, &space.heat_apply(t, &f)?)?;
        let one_hop = space.heat_apply(s + t, &f)?;
        semigroup = semigroup.max(max_abs(&(&two_hops - &one_hop)));

        let ht = space.heat_apply(t, &f)?;
        mass = mass.max((integrate(&space, &ht, None) - integrate(&space, &f, None)).abs());

        let (lo, hi) = f
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        for &v in ht.iter() {
            maximum = maximum.max((lo - v).max(v - hi).max(0.0));
        }

        let kernel = space.heat_kernel(t)?;
        for a in 0..n {
            for b in 0..a {
                symmetry = symmetry.max((kernel[[a, b]] - kernel[[b, a]]).abs());
            }
        }

        let hg = space.heat_apply(t, &g)?;
        let lhs = integrate(&space, &(&ht * &g), None);
        let rhs = integrate(&space, &(&f * &hg), None);
        self_adjoint = self_adjoint.max((lhs - rhs).abs());
    }
    let detail = format!("{instances} random circle/interval/graph instances");
    Ok(vec![
        CheckResult::new('A', "heat_semigroup_law", semigroup, Cmp::Le, 1e-10, detail.clone()),
        CheckResult::new('A', "heat_mass_preservation", mass, Cmp::Le, 1e-10, detail.clone()),
        CheckResult::new('A', "heat_maximum_principle", maximum, Cmp::Le, 1e-10, detail.clone()),
        CheckResult::new('A', "heat_kernel_symmetry", symmetry, Cmp::Le, 1e-10, detail.clone()),
        CheckResult::new('A', "heat_self_adjointness", self_adjoint, Cmp::Le, 1e-10, detail),
    ])
}

/// Criterion 2: `∫Γ(u,v) dm = -∫u Δv dm` exactly.
fn integration_by_parts_check(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA2);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let space = random_space(&mut rng, i);
        let u = random_vector(&mut rng, space.len(), -1.0, 1.0);
        let v = random_vector(&mut rng, space.len(), -1.0, 1.0);
        let lhs = integrate(&space, &carre_du_champ(&space, &u, &v), None);
        let rhs = -integrate(&space, &(&u * &space.generator_apply(&v)), None);
        worst = worst.max((lhs - rhs).abs());
    }
    CheckResult::new(
        'A',
        "integration_by_parts",
        worst,
        Cmp::Le,
        1e-10,
        "100 random instances, random u, v".into(),
    )
}

/// Random connected graph with conductances and weights near 1, so the heat
/// kernel mixes well and IPFP converges quickly. Chains of weak bonds make
/// the Birkhoff contraction factor approach 1 and are avoided here.
pub fn random_coupled_graph(rng: &mut ChaCha8Rng, n: usize) -> Space {
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((i - 1, i, rng.gen_range(0.5..2.0)));
    }
    for _ in 0..n / 2 {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j {
            edges.push((i.min(j), i.max(j), rng.gen_range(0.5..2.0)));
        }
    }
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    Space::graph(&edges, &weights, None).expect("chain backbone keeps the graph connected")
}

fn schrodinger_instances(rng: &mut ChaCha8Rng) -> Result<Vec<(Space, Density, Density, f64)>> {
    let mut out = Vec::new();
    for i in 0..5 {
        let (space, eps) = if i % 2 == 0 {
            (Space::circle_grid(48, 1.0)?, rng.gen_range(0.2..1.5))
        } else {
            (random_coupled_graph(rng, 10), rng.gen_range(0.5..1.5))
        };
        let rho0 = random_density(rng, &space);
        let rho1 = random_density(rng, &space);
        out.push((space, rho0, rho1, eps));
    }
    Ok(out)
}

/// Criterion 3: system residual, coupling marginals, cost symmetry, gauge
/// invariance.
fn schrodinger_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA3);
    let opts = SolverOptions {
        tol: 1e-12,
        max_iter: 400_000,
    };
    let mut residual = 0.0f64;
    let mut marginal = 0.0f64;
    let mut symmetry = 0.0f64;
    let mut gauge = 0.0f64;
    for (space, rho0, rho1, eps) in schrodinger_instances(&mut rng)? {
        let sol = ipfp_solve(&space, &rho0, &rho1, eps, &opts)?;
        residual = residual.max(sol.marginal_residual);

        let c = coupling(&space, &sol)?;
        let mu0 = rho0.masses(&space);
        let mu1 = rho1.masses(&space);
        for i in 0..space.len() {
            let row: f64 = (0..space.len()).map(|j| c.matrix[[i, j]]).sum();
            let col: f64 = (0..space.len()).map(|j| c.matrix[[j, i]]).sum();
            marginal = marginal.max((row / mu0[i] - 1.0).abs());
            marginal = marginal.max((col / mu1[i] - 1.0).abs());
        }

        let swapped = ipfp_solve(&space, &rho1, &rho0, eps, &opts)?;
        symmetry = symmetry.max((sol.cost - swapped.cost).abs());

        let mut shifted = sol.clone();
        shifted.phi0.mapv_inplace(|v| v + 0.37);
        shifted.psi1.mapv_inplace(|v| v - 0.37);
        let base = entropic_cost_potentials(&space, &sol, &rho0, &rho1);
        let after = entropic_cost_potentials(&space, &shifted, &rho0, &rho1);
        gauge = gauge.max((base - after).abs());
    }
    let detail = "5 random instances (circle + graph)".to_string();
    Ok(vec![
        CheckResult::new('A', "ipfp_marginal_residual", residual, Cmp::Le, 1e-12, detail.clone()),
        CheckResult::new('A', "coupling_marginals", marginal, Cmp::Le, 1e-11, detail.clone()),
        CheckResult::new('A', "cost_swap_symmetry", symmetry, Cmp::Le, 1e-9, detail.clone()),
        CheckResult::new('A', "cost_gauge_invariance", gauge, Cmp::Le, 1e-12, detail),
    ])
}

/// Criterion 4: static vs potential-based cost on 50 random instances.
/// Measured as the worst `|static - potentials| / max(1e-8, 10·residual)`.
fn cost_route_agreement_check(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA4);
    // Weakly coupled random graphs at small eps can need long IPFP runs.
    let opts = SolverOptions {
        tol: 1e-12,
        max_iter: 400_000,
    };
    let mut worst_ratio = 0.0f64;
    for i in 0..50 {
        let (space, eps) = match i % 3 {
            0 => (
                Space::circle_grid(rng.gen_range(8..32), 1.0)?,
                rng.gen_range(0.2..2.0),
            ),
            1 => (
                Space::interval_grid(rng.gen_range(4..32), 1.0)?,
                rng.gen_range(0.2..2.0),
            ),
            _ => {
                let size = rng.gen_range(3..10);
                (random_coupled_graph(&mut rng, size), rng.gen_range(0.5..2.0))
            }
        };
        let rho0 = random_density(&mut rng, &space);
        let rho1 = random_density(&mut rng, &space);
        let sol = ipfp_solve(&space, &rho0, &rho1, eps, &opts)?;
        let stat = entropic_cost_static(&space, &coupling(&space, &sol)?, eps)?;
        let pot = entropic_cost_potentials(&space, &sol, &rho0, &rho1);
        let tol = (10.0 * sol.marginal_residual).max(1e-8);
        worst_ratio = worst_ratio.max((stat - pot).abs() / tol);
    }
    Ok(CheckResult::new(
        'A',
        "cost_static_vs_potentials",
        worst_ratio,
        Cmp::Le,
        1.0,
        "50 random instances; gap / max(1e-8, 10*residual)".into(),
    ))
}

/// Criterion 5: interpolation mass, potential identity, time reversal.
fn interpolation_checks() -> Result<Vec<CheckResult>> {
    let space = Space::circle_grid(64, 1.0)?;
    let rho0 = Density::from_profile(&space, &Profile::Sine { amplitude: 0.5, frequency: 1.0 })?;
    let rho1 = Density::from_profile(&space, &Profile::Cosine { amplitude: 0.5, frequency: 1.0 })?;
    let eps = 0.3;
    let opts = SolverOptions::default();
    let sol = ipfp_solve(&space, &rho0, &rho1, eps, &opts)?;
    let steps = 32;
    let path = interpolate(&space, &sol, steps)?;
    let mut mass = 0.0f64;
    let mut identity = 0.0f64;
    for k in 0..=steps {
        mass = mass.max((path.rho[k].masses(&space).sum() - 1.0).abs());
        let log_rho = path.rho[k].values().mapv(f64::ln);
        for i in 0..space.len() {
            identity =
                identity.max((path.phi[k][i] + path.psi[k][i] - eps * log_rho[i]).abs());
        }
    }
    let swapped = ipfp_solve(&space, &rho1, &rho0, eps, &opts)?;
    let reversed = interpolate(&space, &swapped, steps)?;
    let mut reversal = 0.0f64;
    for k in 0..=steps {
        reversal = reversal.max(max_abs(
            &(path.rho[k].values() - reversed.rho[steps - k].values()),
        ));
    }
    let detail = format!("circle n=64, eps={eps}, K={steps}");
    Ok(vec![
        CheckResult::new('A', "interpolation_mass", mass, Cmp::Le, 1e-12, detail.clone()),
        CheckResult::new(
            'A',
            "interpolation_potential_identity",
            identity,
            Cmp::Le,
            1e-12,
            detail.clone(),
        ),
        CheckResult::new('A', "interpolation_time_reversal", reversal, Cmp::Le, 1e-10, detail),
    ])
}

/// Criterion 6: Kantorovich duality — attainment, upper bound for random
/// potentials, cash invariance, Q-semigroup law.
fn duality_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA6);
    let space = Space::circle_grid(64, 1.0)?;
    let rho0 = Density::from_profile(&space, &Profile::Gaussian { center: 0.3, scale: 0.03 })?;
    let rho1 = Density::from_profile(&space, &Profile::Gaussian { center: 0.7, scale: 0.05 })?;
    let eps = 0.25;
    let sol = ipfp_solve(&space, &rho0, &rho1, eps, &SolverOptions::default())?;
    let attainment = verify_attainment(&space, &sol, &rho0, &rho1)?;

    // Upper bound: random, adversarially scaled and near-optimal potentials.
    let mut bound_violation = f64::NEG_INFINITY;
    for i in 0..100 {
        let scale = match i % 3 {
            0 => 1.0,
            1 => 10.0,
            _ => 0.1,
        };
        let u = if i % 5 == 4 {
            &sol.phi0 + &random_vector(&mut rng, space.len(), -0.01, 0.01)
        } else {
            random_vector(&mut rng, space.len(), -scale, scale)
        };
        for orientation in [Orientation::Forward, Orientation::Backward] {
            let obj = dual_objective(&space, &u, &rho0, &rho1, eps, orientation)?;
            bound_violation = bound_violation.max(obj - sol.cost);
        }
    }

    let u = random_vector(&mut rng, space.len(), -1.0, 1.0);
    let qu = q_apply(&space, &u, eps, 1.0)?;
    let q_shift = q_apply(&space, &u.mapv(|v| v + 2.5), eps, 1.0)?;
    let cash = max_abs(&(&q_shift - &qu.mapv(|v| v + 2.5)));
    let semigroup = max_abs(
        &(&q_apply(&space, &q_apply(&space, &u, eps, 0.4)?, eps, 0.6)? - &qu),
    );

    let detail = format!("circle n=64, eps={eps}");
    Ok(vec![
        CheckResult::new('A', "kantorovich_q_attainment", attainment.q_gap, Cmp::Le, 1e-10, detail.clone()),
        CheckResult::new(
            'A',
            "kantorovich_objective_at_phi0",
            attainment.forward_gap.max(attainment.backward_gap),
            Cmp::Le,
            1e-8,
            "both orientations at their optimizers".into(),
        ),
        CheckResult::new(
            'A',
            "kantorovich_upper_bound",
            bound_violation,
            Cmp::Le,
            1e-10,
            "100 random/scaled/near-optimal potentials, both orientations".into(),
        ),
        CheckResult::new('A', "q_cash_invariance", cash, Cmp::Le, 1e-10, detail.clone()),
        CheckResult::new('A', "q_semigroup_law", semigroup, Cmp::Le, 1e-10, detail),
    ])
}

/// Criterion 7: IPFP vs the brute-force coupling scan on two-point spaces.
fn two_point_oracle_check(seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA7);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let w0 = rng.gen_range(0.5..2.0);
        let w1 = rng.gen_range(0.5..2.0);
        let space = Space::graph(&[(0, 1, rng.gen_range(0.5..2.0))], &[w0, w1], None)?;
        let rho0 = random_density(&mut rng, &space);
        let rho1 = random_density(&mut rng, &space);
        let eps = rng.gen_range(0.5..2.0);
        let sol = ipfp_solve(&space, &rho0, &rho1, eps, &SolverOptions::default())?;
        let scan = two_point_cost_scan(&space, &rho0, &rho1, eps)?;
        worst = worst.max((sol.cost - scan).abs());
    }
    Ok(CheckResult::new(
        'A',
        "two_point_scan_oracle",
        worst,
        Cmp::Le,
        1e-6,
        "10 random two-point instances".into(),
    ))
}

/// Criterion 13 (in-process half): running the randomized heat-flow battery
/// twice with the same seed serializes to identical bytes. The CLI acceptance
/// test repeats this at the process level.
fn determinism_check(seed: u64) -> Result<CheckResult> {
    let first = heat_flow_checks(seed)?;
    let second = heat_flow_checks(seed)?;
    let a = serde_json::to_string(&first).expect("check rows serialize");
    let b = serde_json::to_string(&second).expect("check rows serialize");
    Ok(CheckResult::new(
        'A',
        "report_determinism",
        if a == b { 0.0 } else { 1.0 },
        Cmp::Le,
        0.0,
        "identical seed => byte-identical rows".into(),
    ))
}

// ---------------------------------------------------------------- tier B --

fn tier_b(seed: u64) -> Result<Vec<CheckResult>> {
    let mut checks = Vec::new();
    checks.extend(dyn_representation_checks()?);
    checks.extend(pde_residual_checks()?);
    checks.extend(benamou_brenier_checks()?);
    checks.extend(hjb_duality_checks(seed)?);
    checks.extend(zero_noise_checks()?);
    Ok(checks)
}

fn smooth_circle_problem(n: usize) -> Result<(Space, Density, Density)> {
    let space = Space::circle_grid(n, 1.0)?;
    let rho0 = Density::from_profile(&space, &Profile::Sine { amplitude: 0.5, frequency: 1.0 })?;
    let rho1 = Density::from_profile(&space, &Profile::Cosine { amplitude: 0.5, frequency: 1.0 })?;
    Ok((space, rho0, rho1))
}

/// Criterion 8: the three dynamical representations agree with the IPFP cost
/// within 2% at n = 512 and the spread shrinks by ≥ 1.5x per doubling.
fn dyn_representation_checks() -> Result<Vec<CheckResult>> {
    let eps = 0.2;
    let mut spreads = Vec::new();
    for n in [128usize, 256, 512] {
        let (space, rho0, rho1) = smooth_circle_problem(n)?;
        let sol = ipfp_solve(&space, &rho0, &rho1, eps, &SolverOptions::default())?;
        let path = interpolate(&space, &sol, n / 4)?;
        let reps = dyn_representations(&space, &path, &rho0, &rho1)?;
        spreads.push((n, reps.spread(sol.cost)));
    }
    let detail = format!(
        "spreads: {}",
        spreads
            .iter()
            .map(|(n, s)| format!("n={n}: {s:.3e}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let final_spread = spreads.last().unwrap().1;
    let min_factor = spreads
        .windows(2)
        .map(|w| w[0].1 / w[1].1)
        .fold(f64::INFINITY, f64::min);
    Ok(vec![
        CheckResult::new('B', "dyn_spread_at_finest", final_spread, Cmp::Le, 0.02, detail.clone()),
        CheckResult::new('B', "dyn_spread_refinement_factor", min_factor, Cmp::Ge, 1.5, detail),
    ])
}

/// Criterion 9: heat residual drops ~4x when Δt halves; HJB and θ residuals
/// decrease monotonically under grid refinement.
fn pde_residual_checks() -> Result<Vec<CheckResult>> {
    let eps = 0.2;
    // Δt factor on a fixed grid.
    let (space, rho0, rho1) = smooth_circle_problem(128)?;
    let sol = ipfp_solve(&space, &rho0, &rho1, eps, &SolverOptions::default())?;
    let coarse = pde_residuals(&space, &interpolate(&space, &sol, 64)?, eps)?;
    let fine = pde_residuals(&space, &interpolate(&space, &sol, 128)?, eps)?;
    let dt_factor = (coarse.heat_f / fine.heat_f).min(coarse.heat_g / fine.heat_g);

    // Spatial monotonicity with K scaled alongside n.
    let mut rows = Vec::new();
    for n in [64usize, 128, 256] {
        let (space, rho0, rho1) = smooth_circle_problem(n)?;
        let sol = ipfp_solve(&space, &rho0, &rho1, eps, &SolverOptions::default())?;
        let res = pde_residuals(&space, &interpolate(&space, &sol, n)?, eps)?;
        rows.push((n, res));
    }
    let mut hjb_ratio = 0.0f64;
    let mut theta_ratio = 0.0f64;
    let mut continuity_ratio = 0.0f64;
    for w in rows.windows(2) {
        let (_, a) = &w[0];
        let (_, b) = &w[1];
        hjb_ratio = hjb_ratio.max(b.hjb_phi / a.hjb_phi).max(b.hjb_psi / a.hjb_psi);
        theta_ratio = theta_ratio
            .max(b.theta_gamma / a.theta_gamma)
            .max(b.theta_generator / a.theta_generator);
        continuity_ratio = continuity_ratio.max(b.continuity / a.continuity);
    }
    let detail = format!(
        "residuals over n=64/128/256: hjb_phi {}",
        rows.iter()
            .map(|(n, r)| format!("n={n}: {:.3e}", r.hjb_phi))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(vec![
        CheckResult::new(
            'B',
            "pde_heat_dt_refinement_factor",
            dt_factor,
            Cmp::Ge,
            3.0,
            "K=64 vs K=128 on circle n=128 (central differences, O(dt^2) => ~4)".into(),
        ),
        CheckResult::new('B', "pde_hjb_residual_monotone", hjb_ratio, Cmp::Lt, 1.0, detail.clone()),
        CheckResult::new('B', "pde_theta_residual_monotone", theta_ratio, Cmp::Lt, 1.0, detail.clone()),
        CheckResult::new('B', "pde_continuity_residual_monotone", continuity_ratio, Cmp::Lt, 1.0, detail),
    ])
}

/// Criterion 10: Benamou-Brenier attainment. The kinetic action of
/// `(ρ_t, ψ_t)` matches `ε·I_ε - ε·H(μ₀|m)` within 2% at n = 256; mirrored
/// for `φ`; the θ-form with the Fisher term matches within 3%.
fn benamou_brenier_checks() -> Result<Vec<CheckResult>> {
    let eps = 0.2;
    let n = 256;
    let steps = 64;
    let (space, rho0, rho1) = smooth_circle_problem(n)?;
    let sol = ipfp_solve(&space, &rho0, &rho1, eps, &SolverOptions::default())?;
    let path = interpolate(&space, &sol, steps)?;
    let h0 = entropy_wrt_reference(&space, &rho0);
    let h1 = entropy_wrt_reference(&space, &rho1);

    let density_path = crate::dynamics::DensityPath::from_slices(
        path.times.clone(),
        path.rho.clone(),
        Direction::Forward,
        0.5 * eps,
    );
    let psi_drift = PotentialPath::from_samples(path.times.clone(), path.psi.clone())?;
    let phi_drift = PotentialPath::from_samples(path.times.clone(), path.phi.clone())?;
    let theta_drift = PotentialPath::from_samples(path.times.clone(), path.theta.clone())?;

    let action_psi = path_action(&space, &density_path, &psi_drift);
    let action_phi = path_action(&space, &density_path, &phi_drift);
    let action_theta = path_action(&space, &density_path, &theta_drift);
    let dt = 1.0 / steps as f64;
    let mut fisher = 0.0;
    for (k, rho) in path.rho.iter().enumerate() {
        let w = if k == 0 || k == steps { 0.5 * dt } else { dt };
        fisher += w * fisher_information(&space, rho)?;
    }
    let theta_total = action_theta + eps * eps / 8.0 * fisher;

    let target_fwd = sol.cost - eps * h0;
    let target_bwd = sol.cost - eps * h1;
    let target_theta = sol.cost - 0.5 * eps * (h0 + h1);
    let rel = |value: f64, target: f64| (value - target).abs() / target.abs();
    let detail = format!("circle n={n}, eps={eps}, K={steps}");
    Ok(vec![
        CheckResult::new(
            'B',
            "bb_attainment_forward_action",
            rel(action_psi, target_fwd),
            Cmp::Le,
            0.02,
            detail.clone(),
        ),
        CheckResult::new(
            'B',
            "bb_attainment_backward_action",
            rel(action_phi, target_bwd),
            Cmp::Le,
            0.02,
            detail.clone(),
        ),
        CheckResult::new(
            'B',
            "bb_attainment_theta_fisher_action",
            rel(theta_total, target_theta),
            Cmp::Le,
            0.03,
            detail,
        ),
    ])
}

/// Random smooth circle potential with sup norm `amplitude` and mildly
/// decaying Fourier content.
pub fn random_smooth_potential(rng: &mut ChaCha8Rng, space: &Space, amplitude: f64) -> Array1<f64> {
    let x = space.coords().expect("grid space");
    let mut u = Array1::<f64>::zeros(space.len());
    for m in 1..=3usize {
        let a = rng.gen_range(-1.0..1.0) / (m * m) as f64;
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        u = &u + &x.mapv(|v| a * (std::f64::consts::TAU * m as f64 * v + phase).cos());
    }
    let sup = u.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    u.mapv(|v| v * amplitude / sup.max(1e-12))
}

/// Criterion 11: duality gap positive with margin for random pairs at
/// K = 512; the saturating pair's gap vanishes under refinement.
fn hjb_duality_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xB11);
    // Random pairs: amplitude-1 potentials need the diffusion-dominated
    // regime (max|∂u|·h ≲ ε/2) for the weak-form transport to stay positive,
    // while K = 512 caps ε/2·Δt·‖Δ‖ ≤ 1/2 from above; n = 6, ε = 2 sits
    // inside the feasible window with margin.
    let n = 6;
    let eps = 2.0;
    let steps = 512;
    let space = Space::circle_grid(n, 1.0)?;
    let rho0 = Density::from_profile(&space, &Profile::Sine { amplitude: 0.5, frequency: 1.0 })?;
    let mut min_margin_ratio = f64::INFINITY;
    for _ in 0..20 {
        let w = random_smooth_potential(&mut rng, &space, 1.0);
        let sup = build_supersolution(&space, &w, eps, 0.0, 0.0, Direction::Backward, steps)?;
        let drift_field = random_smooth_potential(&mut rng, &space, 1.0);
        let drift = PotentialPath::constant(drift_field, 2)?;
        let fpe = integrate_fpe(&space, &rho0, &drift, 0.5 * eps, Direction::Forward, steps)?;
        let report = check_hjb_fpe_duality(&space, &sup, &fpe, &drift, eps)?;
        min_margin_ratio = min_margin_ratio.min(report.gap / report.tolerance);
    }

    // Saturating pair under refinement: supersolution from w = ψ₁, FPE
    // integrated with drift ψ_t from ρ₀.
    let eps_sat = 0.2;
    let mut gaps = Vec::new();
    for n in [32usize, 64, 128] {
        let (space, rho0, rho1) = smooth_circle_problem(n)?;
        let sol = ipfp_solve(&space, &rho0, &rho1, eps_sat, &SolverOptions::default())?;
        let steps = crate::dynamics::stable_step_count(&space, 0.5 * eps_sat)
            .next_power_of_two()
            .max(1024);
        let sup =
            build_supersolution(&space, &sol.psi1, eps_sat, 0.0, 0.0, Direction::Backward, steps)?;
        let drift = PotentialPath::from_fn(2 * steps, |t| psi_at(&space, &sol, t))?;
        let fpe = integrate_fpe(&space, &rho0, &drift, 0.5 * eps_sat, Direction::Forward, steps)?;
        let report = check_hjb_fpe_duality(&space, &sup, &fpe, &drift, eps_sat)?;
        let _ = &rho1;
        gaps.push((n, report.gap.abs()));
    }
    let max_ratio = gaps
        .windows(2)
        .map(|w| w[1].1 / w[0].1)
        .fold(0.0f64, f64::max);
    let detail_gaps = format!(
        "gaps: {}",
        gaps.iter()
            .map(|(n, v)| format!("n={n}: {v:.3e}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(vec![
        CheckResult::new(
            'B',
            "hjb_fpe_random_margin",
            min_margin_ratio,
            Cmp::Ge,
            10.0,
            format!("20 random pairs, circle n={n}, eps={eps}, K={steps}; gap/tolerance"),
        ),
        CheckResult::new('B', "hjb_fpe_saturating_gap_decreasing", max_ratio, Cmp::Lt, 1.0, detail_gaps),
    ])
}

/// Criterion 12: zero-noise sweep. The documented schedule has a strictly
/// decreasing gap column; thresholds for the relative gaps were calibrated
/// against the exact 1-D oracle (the entropic term `ε(H₀+H₁)/2 + O(ε log ε)`
/// dominates until ε ~ bump variance, so the documented ε = 0.05 point sits
/// near 0.86; an extended row at ε = 0.013 shows the approach to the limit).
fn zero_noise_checks() -> Result<Vec<CheckResult>> {
    // The bump tails reach ~1e-11 of the density scale; at those points the
    // sup-relative residual floors near 1e-11 in floating point, so the
    // solver target is 1e-10 here (cost error ~1e-10, thresholds are 1e-1).
    let spec = SweepSpec {
        length: 1.0,
        marginal0: Profile::Gaussian { center: 0.3, scale: 0.02 },
        marginal1: Profile::Gaussian { center: 0.7, scale: 0.02 },
        solver: SolverOptions {
            tol: 1e-10,
            max_iter: 50_000,
        },
        floor: None,
    };
    let pairs = [(0.4, 800), (0.2, 800), (0.1, 800), (0.05, 800), (0.025, 800)];
    let rows = zero_noise_sweep(&spec, &pairs)?;
    let mut max_ratio = 0.0f64;
    for w in rows.windows(2) {
        max_ratio = max_ratio.max(w[1].gap / w[0].gap);
    }
    let detail = rows
        .iter()
        .map(|r| format!("eps={}: gap {:.4} rel {:.3}", r.eps, r.gap, r.gap / r.w2sq_half))
        .collect::<Vec<_>>()
        .join("; ");
    let documented = &rows[3];
    let deep = &rows[4];
    Ok(vec![
        CheckResult::new('B', "zero_noise_gap_strictly_decreasing", max_ratio, Cmp::Lt, 1.0, detail.clone()),
        CheckResult::new(
            'B',
            "zero_noise_relative_gap_at_0.05",
            documented.gap / documented.w2sq_half,
            Cmp::Le,
            0.87,
            "calibrated: entropic term eps*(H0+H1)/2 still dominates at eps=0.05".into(),
        ),
        CheckResult::new(
            'B',
            "zero_noise_relative_gap_deep",
            deep.gap / deep.w2sq_half,
            Cmp::Le,
            0.40,
            format!("extended row eps=0.025 at n=800; {detail}"),
        ),
    ])
}
